//! Finite-temperature response: quasimomentum scans across the first
//! Brillouin zone and Gaussian-weighted averages of `P_0`.
//!
//! Every `beta` subspace evolves independently, so scans run in parallel and
//! are collected in grid order; the weighted sum is then taken sequentially in
//! ascending `beta`, which keeps results bit-identical across thread counts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::PopulationSeries;
use crate::propagator::{evolve_p0, FloquetSpec, Method};

/// Grid size of a full-zone scan in steps of 0.00025.
pub const DEFAULT_BETA_POINTS: usize = 4001;

/// Thermal quasimomentum distribution sampled on a uniform grid over
/// `[-1/2, 1/2]`, both edges included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSpec {
    /// Standard deviation of the Gaussian quasimomentum distribution.
    pub width: f64,
    /// Odd number of grid points, so that `beta = 0` is sampled.
    pub n_beta: usize,
}

impl ThermalSpec {
    pub fn new(width: f64, n_beta: usize) -> Result<Self> {
        let spec = Self { width, n_beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width >= 0.0) {
            return Err(Error::domain(format!(
                "thermal width must be non-negative, got {}",
                self.width
            )));
        }
        check_grid_size(self.n_beta)
    }
}

fn check_grid_size(n_beta: usize) -> Result<()> {
    if n_beta < 3 || n_beta.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "quasimomentum grid size must be odd and at least 3, got {n_beta}"
        )));
    }
    Ok(())
}

/// Uniform grid over `[-1/2, 1/2]`; exactly symmetric with `beta = 0` at the
/// centre.
pub fn beta_grid(n_beta: usize) -> Result<Vec<f64>> {
    check_grid_size(n_beta)?;
    let mid = (n_beta / 2) as f64;
    let span = (n_beta - 1) as f64;
    Ok((0..n_beta).map(|i| (i as f64 - mid) / span).collect())
}

/// Gaussian density `exp(-beta^2 / 2 w^2) / (w sqrt(2 pi))`.
pub fn gaussian_density(beta: f64, width: f64) -> f64 {
    let z = beta / width;
    (-0.5 * z * z).exp() / (width * (2.0 * std::f64::consts::PI).sqrt())
}

/// Quadrature weights of the Gaussian distribution on the `beta` grid,
/// normalised to sum to one.
///
/// The trapezoidal rule halves the two zone-edge points; together they stand
/// for the single periodic edge state. Tails beyond the zone are dropped and
/// absorbed by the normalisation. Zero width puts all weight on `beta = 0`.
pub fn gaussian_weights(spec: &ThermalSpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let grid = beta_grid(spec.n_beta)?;
    if spec.width == 0.0 {
        return Ok(grid
            .into_iter()
            .map(|b| (b, if b == 0.0 { 1.0 } else { 0.0 }))
            .collect());
    }
    let last = grid.len() - 1;
    let raw: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let end = if i == 0 || i == last { 0.5 } else { 1.0 };
            end * gaussian_density(b, spec.width)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::numeric(format!(
            "Gaussian weights of width {} are not normalisable",
            spec.width
        )));
    }
    Ok(grid.into_iter().zip(raw).map(|(b, w)| (b, w / total)).collect())
}

/// `P_0(beta, N)` over a quasimomentum grid, starting from `|k = 0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaScan {
    pub betas: Vec<f64>,
    /// One `P_0` series per grid value, in grid order.
    pub p0_surface: Vec<PopulationSeries>,
}

impl BetaScan {
    pub fn n_max(&self) -> usize {
        self.p0_surface.first().map_or(0, |s| s.n_max())
    }

    /// Row of the surface at `beta`, if it is a grid value.
    pub fn at(&self, beta: f64) -> Option<&PopulationSeries> {
        self.betas
            .iter()
            .position(|&b| b == beta)
            .map(|i| &self.p0_surface[i])
    }
}

fn p0_at(v_eff: f64, beta: f64, n_max: usize, basis: usize, method: Method) -> Result<Vec<f64>> {
    let spec = FloquetSpec::new(v_eff, beta, basis)?;
    evolve_p0(&spec, n_max, method)
}

/// Evolves `|k = 0⟩` at every point of an `n_beta` grid over the full zone.
pub fn beta_scan(v_eff: f64, n_beta: usize, n_max: usize, basis: usize, method: Method) -> Result<BetaScan> {
    let betas = beta_grid(n_beta)?;
    let rows: Vec<Vec<f64>> = betas
        .par_iter()
        .map(|&b| p0_at(v_eff, b, n_max, basis, method))
        .collect::<Result<_>>()?;
    let p0_surface = rows
        .into_iter()
        .map(PopulationSeries::from_p0)
        .collect::<Result<_>>()?;
    Ok(BetaScan { betas, p0_surface })
}

/// Gaussian-weighted `P_0(N)` over the quasimomentum grid.
///
/// Grid points with exactly zero weight are not evolved.
pub fn thermal_p0(
    v_eff: f64,
    spec: &ThermalSpec,
    n_max: usize,
    basis: usize,
    method: Method,
) -> Result<PopulationSeries> {
    let weights: Vec<(f64, f64)> = gaussian_weights(spec)?
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let rows: Vec<Vec<f64>> = weights
        .par_iter()
        .map(|&(b, _)| p0_at(v_eff, b, n_max, basis, method))
        .collect::<Result<_>>()?;
    let mut avg = vec![0.0; n_max + 1];
    for ((_, w), row) in weights.iter().zip(&rows) {
        for (a, p) in avg.iter_mut().zip(row) {
            *a += w * p;
        }
    }
    avg.iter_mut().for_each(|a| *a = a.clamp(0.0, 1.0));
    PopulationSeries::from_p0(avg)
}

/// Gaussian-weighted average of a precomputed scan.
pub fn average_scan(scan: &BetaScan, width: f64) -> Result<PopulationSeries> {
    let spec = ThermalSpec::new(width, scan.betas.len())?;
    let weights = gaussian_weights(&spec)?;
    let mut avg = vec![0.0; scan.n_max() + 1];
    for ((_, w), series) in weights.iter().zip(&scan.p0_surface) {
        if *w == 0.0 {
            continue;
        }
        for (a, p) in avg.iter_mut().zip(series.p0()) {
            *a += w * p;
        }
    }
    avg.iter_mut().for_each(|a| *a = a.clamp(0.0, 1.0));
    PopulationSeries::from_p0(avg)
}
