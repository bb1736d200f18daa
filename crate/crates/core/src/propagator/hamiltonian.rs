use crate::error::Result;
use crate::model::half_width;
use crate::tridiag::SymTridiagonal;

use super::FloquetSpec;

/// In-pulse Hamiltonian `(k^2 + 2 k beta)/2 - V_eff cos(theta)` in the
/// momentum window of a [`FloquetSpec`]. The cosine couples `k` to `k +- 1`
/// with strength `-V_eff / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeHamiltonian {
    matrix: SymTridiagonal,
}

/// Kinetic term `(k^2 + 2 k beta) / 2` of momentum `k`.
pub fn kinetic_energy(k: i64, beta: f64) -> f64 {
    let k = k as f64;
    (k * k + 2.0 * k * beta) / 2.0
}

impl LatticeHamiltonian {
    pub fn diagonal(&self) -> &[f64] {
        self.matrix.diag()
    }

    pub fn off_diagonal(&self) -> &[f64] {
        self.matrix.off_diag()
    }

    pub fn as_tridiagonal(&self) -> &SymTridiagonal {
        &self.matrix
    }

    pub fn into_tridiagonal(self) -> SymTridiagonal {
        self.matrix
    }
}

pub fn build_lattice_hamiltonian(spec: &FloquetSpec) -> Result<LatticeHamiltonian> {
    spec.validate()?;
    let n = spec.basis_size;
    let h = half_width(n);
    let diag = (-h..=h).map(|k| kinetic_energy(k, spec.beta)).collect();
    let off = vec![-spec.v_eff / 2.0; n - 1];
    Ok(LatticeHamiltonian {
        matrix: SymTridiagonal::new(diag, off)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_state_window_at_zero_quasimomentum() {
        let spec = FloquetSpec::new(0.3, 0.0, 3).unwrap();
        let h = build_lattice_hamiltonian(&spec).unwrap();
        assert_eq!(h.diagonal(), &[0.5, 0.0, 0.5]);
        assert_eq!(h.off_diagonal(), &[-0.15, -0.15]);
    }

    #[test]
    fn band_edge_quasimomentum() {
        let spec = FloquetSpec::new(0.3, 0.5, 3).unwrap();
        let h = build_lattice_hamiltonian(&spec).unwrap();
        assert_eq!(h.diagonal(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn parity_symmetric_at_zero_quasimomentum() {
        let spec = FloquetSpec::new(0.07, 0.0, 41).unwrap();
        let h = build_lattice_hamiltonian(&spec).unwrap();
        let d = h.diagonal();
        for i in 0..d.len() {
            assert_eq!(d[i], d[d.len() - 1 - i]);
        }
    }

    #[test]
    fn even_basis_rejected() {
        let spec = FloquetSpec {
            basis_size: 4,
            ..FloquetSpec::new(0.1, 0.0, 5).unwrap()
        };
        assert!(build_lattice_hamiltonian(&spec).is_err());
    }
}
