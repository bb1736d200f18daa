//! Split-operator propagation of a lattice pulse on the discrete position
//! grid conjugate to the momentum window.
//!
//! Amplitudes are kept in FFT order (`k mod n`). The position-space
//! wavefunction on `theta_j = 2 pi j / n` is the unnormalised inverse DFT of
//! the amplitudes, so the lattice term `exp(+i V_eff cos(theta) dt)` is a
//! pointwise product there; the forward DFT divided by `n` returns to
//! momentum space.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::half_width;

use super::hamiltonian::kinetic_energy;
use super::FloquetSpec;

/// Auto-convergence starts from this many substeps per pulse.
pub const INITIAL_SUBSTEPS: u32 = 16;
/// Auto-convergence stops doubling once the largest amplitude change between
/// successive substep counts falls below this.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-10;
const MAX_SUBSTEPS: u32 = 1 << 22;

/// How one substep is assembled from kinetic and potential factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplittingScheme {
    /// Half kinetic, full potential, half kinetic.
    Strang,
    /// Three Strang substeps with Yoshida's triple-jump weights, cancelling
    /// the third-order error term.
    #[default]
    Yoshida4,
}

impl SplittingScheme {
    /// Kinetic fractions `a` and potential fractions `b` of one substep,
    /// applied as `K(a0) V(b0) K(a1) V(b1) ... K(a_last)`.
    fn coefficients(self) -> (Vec<f64>, Vec<f64>) {
        match self {
            SplittingScheme::Strang => (vec![0.5, 0.5], vec![1.0]),
            SplittingScheme::Yoshida4 => {
                let w1 = 1.0 / (2.0 - 2f64.cbrt());
                let w0 = 1.0 - 2.0 * w1;
                (
                    vec![w1 / 2.0, (w1 + w0) / 2.0, (w0 + w1) / 2.0, w1 / 2.0],
                    vec![w1, w0, w1],
                )
            }
        }
    }
}

/// Precomputed split-step propagator for one lattice pulse of duration `2 pi`.
pub struct SplitStepPulse {
    n: usize,
    substeps: u32,
    kinetic_fractions: Vec<f64>,
    potential_fractions: Vec<f64>,
    /// Kinetic phase tables keyed by fraction of a substep.
    kinetic: Vec<(f64, Vec<Complex64>)>,
    /// Potential phase tables, one per potential fraction.
    potential: Vec<Vec<Complex64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SplitStepPulse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitStepPulse")
            .field("n", &self.n)
            .field("substeps", &self.substeps)
            .finish_non_exhaustive()
    }
}

impl SplitStepPulse {
    pub fn with_substeps(spec: &FloquetSpec, substeps: u32) -> Result<Self> {
        spec.validate()?;
        if substeps == 0 {
            return Err(Error::domain("split-step needs at least one substep per pulse"));
        }
        let n = spec.basis_size;
        let h = half_width(n);
        let dt = 2.0 * PI / substeps as f64;
        let (a, b) = spec.scheme.coefficients();

        let mut fractions: Vec<f64> = a.clone();
        fractions.push(a[a.len() - 1] + a[0]);
        let mut kinetic: Vec<(f64, Vec<Complex64>)> = Vec::new();
        for frac in fractions {
            if kinetic.iter().any(|(f, _)| *f == frac) {
                continue;
            }
            let mut table = vec![Complex64::new(0.0, 0.0); n];
            for k in -h..=h {
                let phase = -kinetic_energy(k, spec.beta) * frac * dt;
                table[fft_index(k, n)] = Complex64::from_polar(1.0, phase);
            }
            kinetic.push((frac, table));
        }

        let potential = b
            .iter()
            .map(|&frac| {
                (0..n)
                    .map(|j| {
                        let theta = 2.0 * PI * j as f64 / n as f64;
                        Complex64::from_polar(1.0, spec.v_eff * theta.cos() * frac * dt)
                    })
                    .collect()
            })
            .collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            n,
            substeps,
            kinetic_fractions: a,
            potential_fractions: b,
            kinetic,
            potential,
            forward,
            inverse,
            buffer: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    /// Doubles the substep count from [`INITIAL_SUBSTEPS`] until one pulse
    /// applied to `probe` changes by less than [`CONVERGENCE_TOLERANCE`] in
    /// every amplitude, and returns the propagator at the finer count.
    pub fn converged(spec: &FloquetSpec, probe: &[Complex64]) -> Result<Self> {
        let mut coarse = Self::with_substeps(spec, INITIAL_SUBSTEPS)?;
        let mut prev = probe.to_vec();
        coarse.apply(&mut prev);
        loop {
            let next_count = coarse.substeps * 2;
            if next_count > MAX_SUBSTEPS {
                return Err(Error::numeric(format!(
                    "split-step did not converge below {CONVERGENCE_TOLERANCE:e} within {MAX_SUBSTEPS} substeps"
                )));
            }
            let mut fine = Self::with_substeps(spec, next_count)?;
            let mut out = probe.to_vec();
            fine.apply(&mut out);
            let change = prev
                .iter()
                .zip(&out)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if change < CONVERGENCE_TOLERANCE {
                return Ok(fine);
            }
            coarse = fine;
            prev = out;
        }
    }

    pub fn substeps(&self) -> u32 {
        self.substeps
    }

    fn kinetic_table(&self, frac: f64) -> &[Complex64] {
        &self
            .kinetic
            .iter()
            .find(|(f, _)| *f == frac)
            .expect("kinetic table precomputed for every fraction")
            .1
    }

    /// Applies one pulse to amplitudes ordered from `k = -(n-1)/2` upwards.
    pub fn apply(&mut self, amplitudes: &mut [Complex64]) {
        let n = self.n;
        let h = half_width(n);
        for k in -h..=h {
            self.buffer[fft_index(k, n)] = amplitudes[(k + h) as usize];
        }

        let a = self.kinetic_fractions.clone();
        let merged = a[a.len() - 1] + a[0];
        let mut buf = std::mem::take(&mut self.buffer);
        multiply(&mut buf, self.kinetic_table(a[0]));
        for s in 0..self.substeps {
            for i in 0..self.potential_fractions.len() {
                self.inverse.process_with_scratch(&mut buf, &mut self.scratch);
                multiply(&mut buf, &self.potential[i]);
                self.forward.process_with_scratch(&mut buf, &mut self.scratch);
                // A correctly rounded division is unbiased, unlike
                // multiplying by an inexact 1/n, so the norm does not creep.
                let nf = n as f64;
                buf.iter_mut().for_each(|x| *x = Complex64::new(x.re / nf, x.im / nf));
                let frac = if i + 1 < self.potential_fractions.len() {
                    a[i + 1]
                } else if s + 1 < self.substeps {
                    merged
                } else {
                    a[a.len() - 1]
                };
                multiply(&mut buf, self.kinetic_table(frac));
            }
        }
        self.buffer = buf;

        for k in -h..=h {
            amplitudes[(k + h) as usize] = self.buffer[fft_index(k, n)];
        }
    }
}

fn multiply(buf: &mut [Complex64], table: &[Complex64]) {
    buf.iter_mut().zip(table).for_each(|(x, t)| *x *= t);
}

fn fft_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}
