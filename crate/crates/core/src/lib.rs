//! Multi-pulse atom diffraction in an optical lattice: closed-form two-state
//! dynamics, Floquet propagation in a momentum basis, thermal quasimomentum
//! averaging, and least-squares extraction of the lattice depth from
//! population time series.

pub mod analytic;
pub mod error;
pub mod estimator;
pub mod model;
pub mod propagator;
pub mod thermal;
pub mod tridiag;

pub use error::{Error, Result};
pub use model::{PhysicalConfig, PopulationSeries, QuantumState};
pub use propagator::{evolve, FloquetSpec, Method};
