//! Floquet evolution `F = F_free F_latt` in a truncated momentum basis.
//!
//! Each period is a lattice pulse of scaled duration `2 pi` followed by an
//! equal free flight. Two pulse implementations are provided: an
//! eigendecomposition of the static in-pulse Hamiltonian (the reference) and
//! split-step Fourier stepping.

mod eigen;
mod hamiltonian;
mod splitstep;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{check_basis_size, check_beta, half_width, PopulationSeries, QuantumState};

pub use eigen::EigenPulse;
pub use hamiltonian::{build_lattice_hamiltonian, kinetic_energy, LatticeHamiltonian};
pub use splitstep::{SplitStepPulse, SplittingScheme, CONVERGENCE_TOLERANCE, INITIAL_SUBSTEPS};

/// Default basis for full numerics: the odd size closest to 2048.
pub const FULL_BASIS: usize = 2047;

/// Edge population above which [`evolve`] reports the basis as too small.
pub const EDGE_WARNING_THRESHOLD: f64 = 1e-8;

/// Parameters of one Floquet period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetSpec {
    pub v_eff: f64,
    pub beta: f64,
    /// Odd number of momentum states, at least 3.
    pub basis_size: usize,
    /// Split-step substeps per pulse; `None` selects them by auto-convergence.
    pub substeps: Option<u32>,
    pub scheme: SplittingScheme,
}

impl FloquetSpec {
    pub fn new(v_eff: f64, beta: f64, basis_size: usize) -> Result<Self> {
        let spec = Self {
            v_eff,
            beta,
            basis_size,
            substeps: None,
            scheme: SplittingScheme::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_substeps(self, substeps: u32) -> Self {
        Self {
            substeps: Some(substeps),
            ..self
        }
    }

    pub fn with_scheme(self, scheme: SplittingScheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_basis_size(self.basis_size)?;
        if self.basis_size < 3 {
            return Err(Error::domain("basis size must be at least 3"));
        }
        check_beta(self.beta)?;
        if !(self.v_eff.is_finite() && self.v_eff >= 0.0) {
            return Err(Error::domain(format!(
                "V_eff must be non-negative, got {}",
                self.v_eff
            )));
        }
        if self.substeps == Some(0) {
            return Err(Error::domain("substeps per pulse must be at least 1"));
        }
        Ok(())
    }

    fn check_state(&self, state: &QuantumState) -> Result<()> {
        if state.basis_size() != self.basis_size || state.beta() != self.beta {
            return Err(Error::domain(format!(
                "state (n = {}, beta = {}) does not match propagator (n = {}, beta = {})",
                state.basis_size(),
                state.beta(),
                self.basis_size,
                self.beta
            )));
        }
        Ok(())
    }
}

/// How the lattice pulse is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Eigen,
    SplitStep,
}

/// `exp(-i pi (k^2 + 2 k beta))`, with the integer part `(-1)^k` of the
/// phase taken exactly so large `k` loses no precision.
pub fn free_phase(k: i64, beta: f64) -> Complex64 {
    let parity = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let frac = (2.0 * k as f64 * beta).rem_euclid(2.0);
    Complex64::from_polar(parity, -PI * frac)
}

fn free_phases(n: usize, beta: f64) -> Vec<Complex64> {
    let h = half_width(n);
    (-h..=h).map(|k| free_phase(k, beta)).collect()
}

/// Free flight over one half Talbot time.
pub fn free_evolution(state: &QuantumState) -> QuantumState {
    let mut out = state.clone();
    let beta = state.beta();
    let h = state.k_max();
    for (i, c) in out.amplitudes_mut().iter_mut().enumerate() {
        *c *= free_phase(i as i64 - h, beta);
    }
    out
}

enum Pulse {
    Eigen(EigenPulse),
    SplitStep(SplitStepPulse),
}

/// Precomputed one-period propagator, reusable across pulses.
pub struct Propagator {
    spec: FloquetSpec,
    pulse: Pulse,
    free: Vec<Complex64>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("spec", &self.spec)
            .field("method", &self.method())
            .finish_non_exhaustive()
    }
}

impl Propagator {
    /// Split-step auto-convergence, if requested, is probed with `|k = 0⟩`.
    pub fn new(spec: &FloquetSpec, method: Method) -> Result<Self> {
        spec.validate()?;
        let probe = QuantumState::plane_wave(spec.basis_size, 0, spec.beta)?;
        Self::with_probe(spec, method, probe.amplitudes())
    }

    /// As [`Propagator::new`], converging split-step substeps on `probe`.
    pub fn with_probe(spec: &FloquetSpec, method: Method, probe: &[Complex64]) -> Result<Self> {
        spec.validate()?;
        let pulse = match method {
            Method::Eigen => Pulse::Eigen(EigenPulse::new(spec)?),
            Method::SplitStep => Pulse::SplitStep(match spec.substeps {
                Some(s) => SplitStepPulse::with_substeps(spec, s)?,
                None => SplitStepPulse::converged(spec, probe)?,
            }),
        };
        Ok(Self {
            spec: *spec,
            pulse,
            free: free_phases(spec.basis_size, spec.beta),
        })
    }

    pub fn spec(&self) -> &FloquetSpec {
        &self.spec
    }

    pub fn method(&self) -> Method {
        match self.pulse {
            Pulse::Eigen(_) => Method::Eigen,
            Pulse::SplitStep(_) => Method::SplitStep,
        }
    }

    /// Substeps per pulse in use, for split-step propagators.
    pub fn substeps(&self) -> Option<u32> {
        match &self.pulse {
            Pulse::Eigen(_) => None,
            Pulse::SplitStep(p) => Some(p.substeps()),
        }
    }

    /// The lattice pulse alone.
    pub fn lattice_pulse(&mut self, state: &mut QuantumState) -> Result<()> {
        self.spec.check_state(state)?;
        self.pulse_raw(state.amplitudes_mut());
        Ok(())
    }

    /// One full period: lattice pulse, then free flight.
    pub fn apply(&mut self, state: &mut QuantumState) -> Result<()> {
        self.spec.check_state(state)?;
        let amps = state.amplitudes_mut();
        self.pulse_raw(amps);
        amps.iter_mut().zip(&self.free).for_each(|(c, p)| *c *= p);
        Ok(())
    }

    fn pulse_raw(&mut self, amps: &mut [Complex64]) {
        match &mut self.pulse {
            Pulse::Eigen(p) => p.apply(amps),
            Pulse::SplitStep(p) => p.apply(amps),
        }
    }
}

/// Lattice pulse by eigendecomposition of the in-pulse Hamiltonian.
pub fn lattice_pulse_eigen(state: &QuantumState, spec: &FloquetSpec) -> Result<QuantumState> {
    let mut out = state.clone();
    Propagator::new(spec, Method::Eigen)?.lattice_pulse(&mut out)?;
    Ok(out)
}

/// Lattice pulse by split-step Fourier stepping. Without an explicit substep
/// count the count is converged on `state` itself.
pub fn lattice_pulse_splitstep(state: &QuantumState, spec: &FloquetSpec) -> Result<QuantumState> {
    let mut out = state.clone();
    Propagator::with_probe(spec, Method::SplitStep, state.amplitudes())?.lattice_pulse(&mut out)?;
    Ok(out)
}

/// One Floquet period applied to `state`.
pub fn apply_floquet(state: &QuantumState, spec: &FloquetSpec, method: Method) -> Result<QuantumState> {
    let mut out = state.clone();
    Propagator::with_probe(spec, method, state.amplitudes())?.apply(&mut out)?;
    Ok(out)
}

/// Output of [`evolve`].
#[derive(Debug, Clone)]
pub struct Evolution {
    /// `P_k(N)` for `N = 0..=N_max` over the recorded momentum window.
    pub populations: PopulationSeries,
    pub final_state: QuantumState,
    /// Largest population seen in the outer two rows of the basis on each side.
    pub max_edge_population: f64,
    /// True when `max_edge_population` exceeded [`EDGE_WARNING_THRESHOLD`].
    pub edge_warning: bool,
    /// Split-step substeps per pulse, when that method was used.
    pub substeps: Option<u32>,
}

/// Evolves `|initial_k⟩` through `n_max` periods, recording every `P_k`.
pub fn evolve(initial_k: i64, spec: &FloquetSpec, n_max: usize, method: Method) -> Result<Evolution> {
    let h = half_width(spec.basis_size);
    evolve_window(initial_k, spec, n_max, method, (-h, h))
}

/// As [`evolve`], recording only `P_k` for `k` in the inclusive `window`.
pub fn evolve_window(
    initial_k: i64,
    spec: &FloquetSpec,
    n_max: usize,
    method: Method,
    window: (i64, i64),
) -> Result<Evolution> {
    spec.validate()?;
    let (k_lo, k_hi) = window;
    if k_lo > k_hi {
        return Err(Error::domain(format!("empty momentum window [{k_lo}, {k_hi}]")));
    }
    let mut state = QuantumState::plane_wave(spec.basis_size, initial_k, spec.beta)?;
    let mut prop = Propagator::with_probe(spec, method, state.amplitudes())?;
    let mut populations = PopulationSeries::from_states([&state], k_lo, k_hi);
    let mut max_edge = edge_population(&state);
    for _ in 0..n_max {
        prop.apply(&mut state)?;
        populations.push_state(&state);
        max_edge = max_edge.max(edge_population(&state));
    }
    let edge_warning = max_edge > EDGE_WARNING_THRESHOLD;
    if edge_warning {
        log::warn!(
            "population {max_edge:e} reached the basis edge (n = {}); results may be truncation-limited",
            spec.basis_size
        );
    }
    Ok(Evolution {
        populations,
        final_state: state,
        max_edge_population: max_edge,
        edge_warning,
        substeps: prop.substeps(),
    })
}

/// `P_0(N)` for `N = 0..=n_max` starting from `|k = 0⟩`.
pub fn evolve_p0(spec: &FloquetSpec, n_max: usize, method: Method) -> Result<Vec<f64>> {
    Ok(evolve_window(0, spec, n_max, method, (0, 0))?.populations.p0())
}

fn edge_population(state: &QuantumState) -> f64 {
    let h = state.k_max();
    [-h, -h + 1, h - 1, h]
        .iter()
        .map(|&k| state.population(k))
        .sum()
}
