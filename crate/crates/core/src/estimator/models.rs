use std::f64::consts::PI;
use std::fmt;

use crate::analytic::{herold_quadratic, populations_two_state};
use crate::error::{Error, Result};
use crate::propagator::{evolve_p0, FloquetSpec, Method, FULL_BASIS};
use crate::thermal::{thermal_p0, ThermalSpec};

/// Basis size of the few-state truncated model.
pub const TRUNCATED_BASIS: usize = 5;

/// Predicts `P_0(N)` as a function of `V_eff` at zero temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Two-state closed form `1 - A sin^2(N phi / 2)`.
    Analytic,
    /// `1 - 8 N^2 V^2`, clamped to `[0, 1]`.
    Quadratic,
    /// Exact Floquet evolution in an `n`-state basis at `beta = 0`.
    Truncated(usize),
    /// Exact Floquet evolution in the full basis at `beta = 0`.
    Full,
    /// Band-edge secondary resonance `cos^2(pi V N)`.
    BandEdge,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Analytic => write!(f, "analytic"),
            Model::Quadratic => write!(f, "quadratic"),
            Model::Truncated(n) => write!(f, "truncated-{n}"),
            Model::Full => write!(f, "full"),
            Model::BandEdge => write!(f, "band-edge"),
        }
    }
}

impl Model {
    /// Basis size for the propagating models.
    pub fn basis(&self) -> Option<usize> {
        match *self {
            Model::Truncated(n) => Some(n),
            Model::Full => Some(FULL_BASIS),
            _ => None,
        }
    }

    /// `P_0` at each of `pulses`.
    pub fn predict(&self, v_eff: f64, pulses: &[u32]) -> Result<Vec<f64>> {
        if !(v_eff.is_finite() && v_eff >= 0.0) {
            return Err(Error::domain(format!("V_eff must be non-negative, got {v_eff}")));
        }
        Ok(match *self {
            Model::Analytic => pulses.iter().map(|&n| populations_two_state(n, v_eff).0).collect(),
            Model::Quadratic => pulses
                .iter()
                .map(|&n| 1.0 - herold_quadratic(n, v_eff).p_plus)
                .collect(),
            Model::BandEdge => pulses
                .iter()
                .map(|&n| {
                    let c = (PI * v_eff * n as f64).cos();
                    c * c
                })
                .collect(),
            Model::Truncated(_) | Model::Full => {
                let basis = self.basis().expect("propagating model");
                let n_max = pulses.iter().copied().max().unwrap_or(0) as usize;
                let spec = FloquetSpec::new(v_eff, 0.0, basis)?;
                let p0 = evolve_p0(&spec, n_max, Method::Eigen)?;
                pulses.iter().map(|&n| p0[n as usize]).collect()
            }
        })
    }
}

/// Gaussian-averaged propagating model, predicting `P_0(N)` from
/// `(V_eff, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThermalModel {
    /// Must be [`Model::Truncated`] or [`Model::Full`].
    pub base: Model,
    pub n_beta: usize,
}

impl ThermalModel {
    pub fn new(base: Model, n_beta: usize) -> Result<Self> {
        if base.basis().is_none() {
            return Err(Error::domain(format!(
                "thermal averaging needs a propagating model, got {base}"
            )));
        }
        ThermalSpec::new(0.0, n_beta)?;
        Ok(Self { base, n_beta })
    }

    pub fn predict(&self, v_eff: f64, width: f64, pulses: &[u32]) -> Result<Vec<f64>> {
        let basis = self
            .base
            .basis()
            .ok_or_else(|| Error::domain("thermal averaging needs a propagating model"))?;
        let n_max = pulses.iter().copied().max().unwrap_or(0) as usize;
        let spec = ThermalSpec::new(width, self.n_beta)?;
        let series = thermal_p0(v_eff, &spec, n_max, basis, Method::Eigen)?;
        Ok(pulses.iter().map(|&n| series.get(n as usize, 0)).collect())
    }
}
