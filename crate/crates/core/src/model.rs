//! Physical parameters, their dimensionless reductions, and the value types
//! shared by every propagation and estimation routine.
//!
//! Lattice depth is stored as a magnitude. With the red-detuned convention
//! `V = -U0/2` the physical depth may carry a sign; every observable computed
//! here depends on it only through a lattice phase, so only `|V|` is kept.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reduced Planck constant, J s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (exact SI value).
pub const K_B: f64 = 1.380_649e-23;

/// Widths above this value exceed a quarter of the first Brillouin zone, where
/// restricting the thermal ensemble to `k = 0` stops being a good description.
pub const COLD_WIDTH_LIMIT: f64 = 0.125;

/// Dimensionful lattice and atom parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    /// Lattice depth magnitude `|V|` in joules.
    pub lattice_depth: f64,
    /// Lattice wavenumber `K = 2 K_L` in inverse metres.
    pub lattice_wavenumber: f64,
    /// Atomic mass in kilograms.
    pub atomic_mass: f64,
}

impl PhysicalConfig {
    pub fn new(lattice_depth: f64, lattice_wavenumber: f64, atomic_mass: f64) -> Result<Self> {
        let cfg = Self {
            lattice_depth,
            lattice_wavenumber,
            atomic_mass,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lattice_wavenumber.is_finite() && self.lattice_wavenumber > 0.0) {
            return Err(Error::domain(format!(
                "lattice wavenumber must be positive, got {}",
                self.lattice_wavenumber
            )));
        }
        if !(self.atomic_mass.is_finite() && self.atomic_mass > 0.0) {
            return Err(Error::domain(format!(
                "atomic mass must be positive, got {}",
                self.atomic_mass
            )));
        }
        if !(self.lattice_depth.is_finite() && self.lattice_depth >= 0.0) {
            return Err(Error::domain(format!(
                "lattice depth magnitude must be non-negative, got {}",
                self.lattice_depth
            )));
        }
        Ok(())
    }
}

/// Energy and time scales derived from a [`PhysicalConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    /// `E_R = hbar^2 K^2 / 8M` (note `K` is twice the laser wavenumber).
    pub recoil_energy: f64,
    /// `T_1/2 = 2 pi M / hbar K^2`, the duration of each pulse and free flight.
    pub half_talbot_time: f64,
    /// Dimensionless depth `V M / hbar^2 K^2 = V / 8 E_R`.
    pub v_eff: f64,
}

pub fn derive_scales(cfg: &PhysicalConfig) -> Result<DerivedScales> {
    cfg.validate()?;
    let k2 = cfg.lattice_wavenumber * cfg.lattice_wavenumber;
    let recoil_energy = HBAR * HBAR * k2 / (8.0 * cfg.atomic_mass);
    let half_talbot_time = 2.0 * std::f64::consts::PI * cfg.atomic_mass / (HBAR * k2);
    Ok(DerivedScales {
        recoil_energy,
        half_talbot_time,
        v_eff: cfg.lattice_depth / (8.0 * recoil_energy),
    })
}

/// Temperature associated with a quasimomentum width, with a flag recording
/// whether the width lies inside the cold regime (`w <= 0.125`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureEstimate {
    pub kelvin: f64,
    pub within_cold_regime: bool,
}

/// `T_w = hbar^2 K^2 w^2 / (M k_B)`.
pub fn temperature_from_width(width: f64, cfg: &PhysicalConfig) -> Result<TemperatureEstimate> {
    cfg.validate()?;
    if !(width.is_finite() && width >= 0.0) {
        return Err(Error::domain(format!(
            "momentum width must be non-negative, got {width}"
        )));
    }
    let k = cfg.lattice_wavenumber;
    let kelvin = HBAR * HBAR * k * k * width * width / (cfg.atomic_mass * K_B);
    let within_cold_regime = width <= COLD_WIDTH_LIMIT;
    if !within_cold_regime {
        log::warn!(
            "width {width} exceeds a quarter of the Brillouin zone; k != 0 initial states are not modelled"
        );
    }
    Ok(TemperatureEstimate {
        kelvin,
        within_cold_regime,
    })
}

/// Complex amplitudes over the symmetric momentum window
/// `k = -(n-1)/2 ..= (n-1)/2` of a single quasimomentum subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
    beta: f64,
}

pub(crate) fn check_basis_size(n: usize) -> Result<()> {
    if n.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "basis size must be odd so the window is symmetric about k = 0, got {n}"
        )));
    }
    Ok(())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    // +1/2 is admitted as the periodic image of -1/2 so that zone scans can
    // include both edges.
    if !(beta.is_finite() && (-0.5..=0.5).contains(&beta)) {
        return Err(Error::domain(format!(
            "quasimomentum must lie in [-1/2, 1/2], got {beta}"
        )));
    }
    Ok(())
}

impl QuantumState {
    /// Plane wave `|k⟩` in a basis of `n` states.
    pub fn plane_wave(n: usize, k: i64, beta: f64) -> Result<Self> {
        check_basis_size(n)?;
        check_beta(beta)?;
        let h = half_width(n);
        if k.abs() > h {
            return Err(Error::domain(format!(
                "initial momentum {k} outside the basis window |k| <= {h}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
        amplitudes[(k + h) as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, beta })
    }

    /// Builds a state from raw amplitudes ordered from `k = -(n-1)/2` upwards.
    /// The amplitudes must already be normalised.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, beta: f64) -> Result<Self> {
        check_basis_size(amplitudes.len())?;
        check_beta(beta)?;
        let state = Self { amplitudes, beta };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "amplitudes are not normalised: sum |c|^2 = {norm}"
            )));
        }
        Ok(state)
    }

    pub fn basis_size(&self) -> usize {
        self.amplitudes.len()
    }

    /// Largest momentum index in the window, `(n-1)/2`.
    pub fn k_max(&self) -> i64 {
        half_width(self.amplitudes.len())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    /// Amplitude of `|k⟩`, or zero outside the window.
    pub fn amplitude(&self, k: i64) -> Complex64 {
        let h = self.k_max();
        if k.abs() > h {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[(k + h) as usize]
        }
    }

    pub fn population(&self, k: i64) -> f64 {
        self.amplitude(k).norm_sqr().min(1.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Momentum indices paired with their amplitudes.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let h = self.k_max();
        self.amplitudes
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as i64 - h, c))
    }
}

pub(crate) fn half_width(n: usize) -> i64 {
    (n as i64 - 1) / 2
}

/// Populations `P_k(N)` for pulses `N = 0..=N_max` over a contiguous window of
/// momentum indices. When the window covers the full basis each row sums to
/// one.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSeries {
    k_lo: i64,
    k_hi: i64,
    rows: Vec<Vec<f64>>,
}

impl PopulationSeries {
    /// Rows are indexed by pulse number; each row lists `P_k` for
    /// `k = k_lo ..= k_lo + row.len() - 1`.
    pub fn from_rows(k_lo: i64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.len());
        if width == 0 {
            return Err(Error::domain("population series needs at least one column"));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::domain(format!("ragged population row at pulse {n}")));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::domain(format!(
                    "population {p} outside [0, 1] at pulse {n}"
                )));
            }
        }
        Ok(Self {
            k_lo,
            k_hi: k_lo + width as i64 - 1,
            rows,
        })
    }

    /// Series holding only `P_0`.
    pub fn from_p0(values: Vec<f64>) -> Result<Self> {
        Self::from_rows(0, values.into_iter().map(|p| vec![p]).collect())
    }

    pub(crate) fn from_states<'a>(
        states: impl IntoIterator<Item = &'a QuantumState>,
        k_lo: i64,
        k_hi: i64,
    ) -> Self {
        let rows = states
            .into_iter()
            .map(|s| (k_lo..=k_hi).map(|k| s.population(k)).collect())
            .collect();
        Self { k_lo, k_hi, rows }
    }

    pub(crate) fn push_state(&mut self, state: &QuantumState) {
        self.rows
            .push((self.k_lo..=self.k_hi).map(|k| state.population(k)).collect());
    }

    /// Largest pulse index held.
    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn k_range(&self) -> (i64, i64) {
        (self.k_lo, self.k_hi)
    }

    /// `P_k(N)`, zero for momenta outside the stored window.
    pub fn get(&self, pulse: usize, k: i64) -> f64 {
        if k < self.k_lo || k > self.k_hi {
            return 0.0;
        }
        self.rows[pulse][(k - self.k_lo) as usize]
    }

    pub fn row(&self, pulse: usize) -> &[f64] {
        &self.rows[pulse]
    }

    /// `P_k(N)` for every stored pulse.
    pub fn column(&self, k: i64) -> Vec<f64> {
        (0..self.rows.len()).map(|n| self.get(n, k)).collect()
    }

    pub fn p0(&self) -> Vec<f64> {
        self.column(0)
    }

    /// `sum_k P_k(N)` over the stored window.
    pub fn total(&self, pulse: usize) -> f64 {
        self.rows[pulse].iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rubidium() -> PhysicalConfig {
        // 87Rb in a 1064 nm retro-reflected lattice.
        let k_l = 2.0 * std::f64::consts::PI / 1064e-9;
        PhysicalConfig::new(0.0, 2.0 * k_l, 1.443_160_6e-25).unwrap()
    }

    #[test]
    fn depth_of_eight_recoils_is_unit_v_eff() {
        let mut cfg = rubidium();
        let er = derive_scales(&cfg).unwrap().recoil_energy;
        cfg.lattice_depth = 8.0 * er;
        assert_eq!(derive_scales(&cfg).unwrap().v_eff, 1.0);
    }

    #[test]
    fn zero_depth_keeps_other_scales() {
        let cfg = rubidium();
        let s0 = derive_scales(&cfg).unwrap();
        let s1 = derive_scales(&PhysicalConfig {
            lattice_depth: 1e-30,
            ..cfg
        })
        .unwrap();
        assert_eq!(s0.v_eff, 0.0);
        assert_eq!(s0.recoil_energy, s1.recoil_energy);
        assert_eq!(s0.half_talbot_time, s1.half_talbot_time);
    }

    #[test]
    fn conventional_depth_maps_to_one_sixteenth() {
        // U0 = 0.16 E_R and V = U0/2 give V_eff = U0 / 16 E_R = 0.01.
        let mut cfg = rubidium();
        let er = derive_scales(&cfg).unwrap().recoil_energy;
        cfg.lattice_depth = 0.16 * er / 2.0;
        let v = derive_scales(&cfg).unwrap().v_eff;
        assert!((v - 0.01).abs() < 1e-15);
    }

    #[test]
    fn v_eff_matches_direct_formula() {
        let mut cfg = rubidium();
        cfg.lattice_depth = 3.7e-31;
        let s = derive_scales(&cfg).unwrap();
        let k = cfg.lattice_wavenumber;
        let direct = cfg.lattice_depth * cfg.atomic_mass / (HBAR * HBAR * k * k);
        assert!((s.v_eff - direct).abs() <= 1e-15 * direct);
        let t = 2.0 * std::f64::consts::PI * cfg.atomic_mass / (HBAR * k * k);
        assert!((s.half_talbot_time - t).abs() <= 1e-15 * t);
    }

    #[test]
    fn rejects_non_positive_wavenumber_and_mass() {
        assert!(matches!(
            PhysicalConfig::new(0.0, 0.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            PhysicalConfig::new(0.0, 1.0, -1.0),
            Err(Error::Domain(_))
        ));
        let bad = PhysicalConfig {
            lattice_depth: 1.0,
            lattice_wavenumber: -2.0,
            atomic_mass: 1.0,
        };
        assert!(derive_scales(&bad).is_err());
    }

    #[test]
    fn temperature_scales_quadratically() {
        let cfg = rubidium();
        assert_eq!(temperature_from_width(0.0, &cfg).unwrap().kelvin, 0.0);
        let t1 = temperature_from_width(0.01, &cfg).unwrap().kelvin;
        let t2 = temperature_from_width(0.02, &cfg).unwrap().kelvin;
        assert!((t2 / t1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_at_quarter_zone_boundary() {
        let cfg = rubidium();
        let k = cfg.lattice_wavenumber;
        let t = temperature_from_width(0.125, &cfg).unwrap();
        let expected = HBAR * HBAR * k * k / (64.0 * cfg.atomic_mass * K_B);
        assert!((t.kelvin - expected).abs() <= 1e-14 * expected);
        assert!(t.within_cold_regime);
        assert!(!temperature_from_width(0.13, &cfg).unwrap().within_cold_regime);
        assert!(temperature_from_width(-0.1, &cfg).is_err());
    }

    #[test]
    fn plane_wave_window() {
        let s = QuantumState::plane_wave(7, -2, 0.25).unwrap();
        assert_eq!(s.k_max(), 3);
        assert_eq!(s.population(-2), 1.0);
        assert_eq!(s.population(9), 0.0);
        assert!(QuantumState::plane_wave(6, 0, 0.0).is_err());
        assert!(QuantumState::plane_wave(7, 4, 0.0).is_err());
        assert!(QuantumState::plane_wave(7, 0, 0.7).is_err());
    }

    #[test]
    fn series_rejects_out_of_range_values() {
        assert!(PopulationSeries::from_p0(vec![1.0, 0.5, 1.2]).is_err());
        let s = PopulationSeries::from_rows(-1, vec![vec![0.0, 1.0, 0.0], vec![0.25, 0.5, 0.25]])
            .unwrap();
        assert_eq!(s.n_max(), 1);
        assert_eq!(s.get(1, 1), 0.25);
        assert_eq!(s.get(1, 5), 0.0);
        assert_eq!(s.p0(), vec![1.0, 0.5]);
        assert!((s.total(1) - 1.0).abs() < 1e-15);
    }
}
