use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::model::half_width;
use crate::tridiag::{eigen_localized, Eigendecomposition, LocalizationParams};

use super::hamiltonian::build_lattice_hamiltonian;
use super::FloquetSpec;

/// Outer eigenvectors are computed on windows of this half-width.
const WINDOW: usize = 16;

/// Lattice pulse `exp(-i 2 pi H)` applied through the eigendecomposition of
/// the in-pulse Hamiltonian.
#[derive(Debug, Clone)]
pub struct EigenPulse {
    decomposition: Eigendecomposition,
    phases: Vec<Complex64>,
    projections: Vec<Complex64>,
}

impl EigenPulse {
    pub fn new(spec: &FloquetSpec) -> Result<Self> {
        let h = build_lattice_hamiltonian(spec)?.into_tridiagonal();
        // Rows whose neighbour gap |k| is below ~8 V_eff belong in the dense core.
        let core = 12usize.max((8.0 * spec.v_eff).ceil() as usize + 1);
        let center = half_width(spec.basis_size) as usize;
        let decomposition = eigen_localized(&h, LocalizationParams::centered(center, core, WINDOW))?;
        let phases = decomposition
            .values
            .iter()
            .map(|&lam| Complex64::from_polar(1.0, -2.0 * PI * lam.rem_euclid(1.0)))
            .collect();
        let projections = vec![Complex64::new(0.0, 0.0); spec.basis_size];
        Ok(Self {
            decomposition,
            phases,
            projections,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.decomposition.values
    }

    pub fn decomposition(&self) -> &Eigendecomposition {
        &self.decomposition
    }

    /// `c <- P exp(-i 2 pi Lambda) P^T c`.
    pub fn apply(&mut self, amplitudes: &mut [Complex64]) {
        let vectors = &self.decomposition.vectors;
        for ((proj, vec), phase) in self.projections.iter_mut().zip(vectors).zip(&self.phases) {
            let overlap: Complex64 = vec
                .values
                .iter()
                .zip(&amplitudes[vec.start..vec.end()])
                .map(|(&p, &c)| c * p)
                .sum();
            *proj = overlap * phase;
        }
        amplitudes.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (vec, &proj) in vectors.iter().zip(&self.projections) {
            for (c, &p) in amplitudes[vec.start..vec.end()].iter_mut().zip(&vec.values) {
                *c += proj * p;
            }
        }
    }
}
