//! Closed-form dynamics in the weakly-diffracting limit.
//!
//! With the gas initially in `|k = 0⟩` at `beta = 0`, only `|0⟩` and the
//! symmetric combination `|+⟩ = (|1⟩ + |-1⟩)/sqrt(2)` take part. The lattice
//! Hamiltonian in that pair is a Rabi matrix and the populations oscillate as
//! `P_0 = 1 - A sin^2(N phi / 2)`, with `A` and `phi` functions of `V_eff`
//! alone.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Below this depth `A` and `phi` return their analytic limits instead of
/// evaluating `0/0`.
pub const WEAK_LIMIT_GUARD: f64 = 1e-12;

/// Validity threshold for the quadratic approximant: `N phi / 2` must stay
/// well below one.
pub const QUADRATIC_VALIDITY: f64 = 0.1;

/// Eigenvalues and mixing angle of the two-state lattice Hamiltonian
/// `[[1/2, -V/sqrt(2)], [-V/sqrt(2), 0]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiEigensystem {
    pub e_plus: f64,
    pub e_minus: f64,
    /// `arctan(2 sqrt(2) V_eff)`, in `[0, pi/2)`.
    pub alpha: f64,
}

pub fn rabi_eigensystem(v_eff: f64) -> RabiEigensystem {
    let root = (1.0 + 8.0 * v_eff * v_eff).sqrt();
    RabiEigensystem {
        e_plus: (1.0 + root) / 4.0,
        e_minus: (1.0 - root) / 4.0,
        alpha: (2.0 * SQRT_2 * v_eff).atan(),
    }
}

/// `sin` and `cos` of `pi sqrt(1 + 8 V^2) / 2`.
fn half_phase(v_eff: f64) -> (f64, f64) {
    let arg = PI * (1.0 + 8.0 * v_eff * v_eff).sqrt() / 2.0;
    arg.sin_cos()
}

/// Oscillation amplitude `A(V_eff)`.
pub fn amplitude_a(v_eff: f64) -> f64 {
    if v_eff < WEAK_LIMIT_GUARD {
        return 1.0;
    }
    let (s, c) = half_phase(v_eff);
    let g = 8.0 * v_eff * v_eff;
    (g * s * s / (g + c * c)).clamp(0.0, 1.0)
}

/// Oscillation frequency `phi(V_eff)` in `[0, 2 pi)`.
///
/// Evaluated with the two-argument arctangent so that `phi` passes smoothly
/// through `pi` where `sin(pi sqrt(1 + 8 V^2) / 2)` changes sign.
pub fn frequency_phi(v_eff: f64) -> f64 {
    if v_eff < WEAK_LIMIT_GUARD {
        return 0.0;
    }
    let (s, c) = half_phase(v_eff);
    let y = (8.0 * v_eff * v_eff + c * c).sqrt();
    let phi = 2.0 * y.atan2(s);
    phi.rem_euclid(2.0 * PI)
}

/// The quantities characterising two-state dynamics at one depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateAnalytics {
    pub v_eff: f64,
    pub amplitude_a: f64,
    pub frequency_phi: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub alpha: f64,
}

impl TwoStateAnalytics {
    pub fn new(v_eff: f64) -> Result<Self> {
        if !(v_eff.is_finite() && v_eff >= 0.0) {
            return Err(Error::domain(format!("V_eff must be non-negative, got {v_eff}")));
        }
        let rabi = rabi_eigensystem(v_eff);
        Ok(Self {
            v_eff,
            amplitude_a: amplitude_a(v_eff),
            frequency_phi: frequency_phi(v_eff),
            e_plus: rabi.e_plus,
            e_minus: rabi.e_minus,
            alpha: rabi.alpha,
        })
    }

    /// `(P_0, P_+)` after `pulses` pulses.
    pub fn populations(&self, pulses: u32) -> (f64, f64) {
        let s = (pulses as f64 * self.frequency_phi / 2.0).sin();
        let p_plus = self.amplitude_a * s * s;
        (1.0 - p_plus, p_plus)
    }
}

/// `(P_0, P_+)` after `pulses` pulses of depth `v_eff`.
pub fn populations_two_state(pulses: u32, v_eff: f64) -> (f64, f64) {
    let a = amplitude_a(v_eff);
    let s = (pulses as f64 * frequency_phi(v_eff) / 2.0).sin();
    let p_plus = a * s * s;
    (1.0 - p_plus, p_plus)
}

/// Result of the small-`N V_eff` quadratic approximant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticEstimate {
    /// `8 N^2 V_eff^2`, clamped to `[0, 1]`.
    pub p_plus: f64,
    pub clamped: bool,
    /// `N phi(V_eff) / 2 < 0.1`.
    pub within_validity: bool,
}

pub fn herold_quadratic(pulses: u32, v_eff: f64) -> QuadraticEstimate {
    let n = pulses as f64;
    let raw = 8.0 * n * n * v_eff * v_eff;
    let within_validity = n * frequency_phi(v_eff) / 2.0 < QUADRATIC_VALIDITY;
    QuadraticEstimate {
        p_plus: raw.clamp(0.0, 1.0),
        clamped: !(0.0..=1.0).contains(&raw),
        within_validity,
    }
}

/// Large-depth envelope of the amplitude, `sin^2(sqrt(2) pi V_eff)`.
pub fn strong_coupling_a(v_eff: f64) -> f64 {
    let s = (SQRT_2 * PI * v_eff).sin();
    s * s
}

/// Depth of the `m`-th node of `A`, `sqrt(4 m^2 - 1) / (2 sqrt(2))`.
pub fn node_location(m: u32) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain("node index must be at least 1"));
    }
    let m = m as f64;
    Ok((4.0 * m * m - 1.0).sqrt() / (2.0 * SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uncoupled_eigensystem() {
        let r = rabi_eigensystem(0.0);
        assert_eq!((r.e_plus, r.e_minus, r.alpha), (0.5, 0.0, 0.0));
    }

    #[test]
    fn eigensystem_at_unit_coupling() {
        let r = rabi_eigensystem(1.0 / (2.0 * SQRT_2));
        assert!((r.e_plus - (1.0 + SQRT_2) / 4.0).abs() < 1e-15);
        assert!((r.e_minus - (1.0 - SQRT_2) / 4.0).abs() < 1e-15);
        assert!((r.e_plus + r.e_minus - 0.5).abs() < 1e-15);
        assert!((r.alpha - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn eigensystem_matches_characteristic_polynomial() {
        // lambda^2 - lambda/2 - V^2/2 = 0
        let v: f64 = 0.1;
        let disc = (0.25 + 2.0 * v * v).sqrt();
        let r = rabi_eigensystem(v);
        assert!((r.e_plus - (0.5 + disc) / 2.0).abs() < 1e-15);
        assert!((r.e_minus - (0.5 - disc) / 2.0).abs() < 1e-15);
        assert!((r.e_plus - 0.509_807_621_135_331_6).abs() < 1e-12);
        assert!((r.e_minus + 0.009_807_621_135_331_6).abs() < 1e-12);
    }

    #[test]
    fn first_node() {
        let v = node_location(1).unwrap();
        assert!((v - 3f64.sqrt() / (2.0 * SQRT_2)).abs() < 1e-15);
        assert!((v - 0.612_372_435_695_794_5).abs() < 1e-15);
        assert!(amplitude_a(v) < 1e-12);
        assert!((frequency_phi(v) - PI).abs() < 1e-9);
    }

    #[test]
    fn second_node_and_asymptote() {
        assert!((node_location(2).unwrap() - 15f64.sqrt() / (2.0 * SQRT_2)).abs() < 1e-15);
        assert!((node_location(2).unwrap() - 1.369_306_393_762_915).abs() < 1e-12);
        let m = 100_000;
        let ratio = node_location(m).unwrap() / m as f64;
        assert!((ratio - 1.0 / SQRT_2).abs() < 1e-9);
        assert!(node_location(0).is_err());
    }

    #[test]
    fn weak_limits() {
        assert_eq!(amplitude_a(0.0), 1.0);
        assert_eq!(frequency_phi(0.0), 0.0);
        let v = 1e-4;
        let slope = frequency_phi(v) / v;
        assert!((slope - 4.0 * SQRT_2).abs() / (4.0 * SQRT_2) < 1e-6);
    }

    #[test]
    fn weak_limit_error_shrinks() {
        let err = |v: f64| (frequency_phi(v) - 4.0 * SQRT_2 * v).abs() / v;
        let (e3, e4, e5) = (err(1e-3), err(1e-4), err(1e-5));
        assert!(e4 < e3 && e5 < e4, "{e3} {e4} {e5}");
    }

    #[test]
    fn no_pulses_no_transfer() {
        for v in [0.0, 0.01, 0.3, 1.7] {
            assert_eq!(populations_two_state(0, v), (1.0, 0.0));
        }
    }

    #[test]
    fn node_suppresses_transfer() {
        let v = node_location(1).unwrap();
        for n in 0..50 {
            let (p0, pp) = populations_two_state(n, v);
            assert!((p0 - 1.0).abs() < 1e-12 && pp < 1e-12);
        }
    }

    #[test]
    fn quadratic_regime_agreement() {
        let (_, pp) = populations_two_state(5, 0.01);
        let q = herold_quadratic(5, 0.01);
        assert!((q.p_plus - 0.02).abs() < 1e-15);
        assert!((pp - 0.02).abs() / 0.02 < 0.03);
        // N phi / 2 = 0.141 here, just past the advisory threshold.
        assert!(!q.within_validity);
        assert!(herold_quadratic(3, 0.01).within_validity);
    }

    #[test]
    fn quadratic_values_and_flags() {
        assert_eq!(herold_quadratic(0, 0.3).p_plus, 0.0);
        assert!((herold_quadratic(1, 0.01).p_plus - 8e-4).abs() < 1e-18);
        let big = herold_quadratic(40, 0.1);
        assert!(big.clamped && big.p_plus == 1.0 && !big.within_validity);
    }

    #[test]
    fn strong_coupling_envelope() {
        for m in 1..6 {
            assert!(strong_coupling_a(m as f64 / SQRT_2) < 1e-20);
        }
        assert!((strong_coupling_a(1.0 / (2.0 * SQRT_2)) - 1.0).abs() < 1e-15);
    }

    // The envelope drops the phase offset pi / (8 sqrt(2) V) of
    // pi sqrt(1 + 8 V^2) / 2, so the gap closes only as 1/V: about 0.026 at
    // V = 5 and up to 0.070 on [4, 6].
    #[test]
    fn envelope_gap_is_bounded_by_dropped_phase() {
        let gap = (amplitude_a(5.0) - strong_coupling_a(5.0)).abs();
        assert!((gap - 0.026_327_523_5).abs() < 1e-9, "gap = {gap}");
        for i in 0..=2000 {
            let v = 4.0 + i as f64 * 1e-3;
            let bound = PI / (8.0 * SQRT_2 * v) + 1.0 / (8.0 * v * v);
            assert!((amplitude_a(v) - strong_coupling_a(v)).abs() <= bound, "v = {v}");
        }
        for v in [50.0, 50.3, 51.7] {
            assert!((amplitude_a(v) - strong_coupling_a(v)).abs() < 0.01, "v = {v}");
        }
    }

    #[test]
    fn amplitude_and_phase_are_bounded_and_continuous() {
        let mut prev = frequency_phi(0.0);
        for i in 0..=2000 {
            let v = i as f64 * 1e-3;
            let a = amplitude_a(v);
            let phi = frequency_phi(v);
            assert!((0.0..=1.0).contains(&a));
            assert!((0.0..2.0 * PI).contains(&phi));
            assert!((phi - prev).abs() < 0.1, "jump at v = {v}");
            prev = phi;
        }
    }

    #[test]
    fn rejects_negative_depth() {
        assert!(TwoStateAnalytics::new(-0.1).is_err());
        let t = TwoStateAnalytics::new(0.1).unwrap();
        assert_eq!(t.populations(7), populations_two_state(7, 0.1));
    }

    proptest! {
        #[test]
        fn populations_sum_to_one(n in 0u32..10_000, v in 0.0f64..3.0) {
            let (p0, pp) = populations_two_state(n, v);
            prop_assert!((p0 + pp - 1.0).abs() <= f64::EPSILON);
            prop_assert!((0.0..=1.0).contains(&pp));
        }

        #[test]
        fn energies_sum_to_half(v in 0.0f64..50.0) {
            let r = rabi_eigensystem(v);
            prop_assert!((r.e_plus + r.e_minus - 0.5).abs() < 1e-12 * (1.0 + v));
        }
    }
}
