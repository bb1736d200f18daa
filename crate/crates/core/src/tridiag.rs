//! Eigendecomposition of real symmetric tridiagonal matrices.
//!
//! Two routes are provided. [`eigen_dense`] is the implicit QL algorithm with
//! Wilkinson-style shifts and accumulated rotations, `O(n^3)` with dense
//! eigenvectors. [`eigen_localized`] targets matrices whose diagonal grows
//! away from a central index faster than the off-diagonal coupling, as
//! momentum-space lattice Hamiltonians do: eigenvectors far from the centre
//! are confined to a few neighbouring sites. The central block is solved
//! densely and every outer eigenpair is found by Rayleigh-quotient iteration
//! on a short window around its site. The assembled decomposition is checked
//! for residuals and mutual orthogonality, and the solver falls back to the
//! dense route when the check fails.

use crate::error::{Error, Result};

/// Entries smaller than this are trimmed from the ends of stored eigenvectors.
const DROP_TOLERANCE: f64 = 1e-22;
const MAX_QL_ITERATIONS: usize = 60;
const MAX_RQI_ITERATIONS: usize = 24;

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::domain(format!(
                "tridiagonal shape mismatch: {} diagonal and {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        if diag.iter().chain(&off).any(|x| !x.is_finite()) {
            return Err(Error::domain("tridiagonal entries must be finite"));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    /// `(T x)_i` for a vector stored from row `start`, evaluated at row `i`.
    fn apply_at(&self, v: &LocalVector, i: usize) -> f64 {
        let mut acc = self.diag[i] * v.get(i);
        if i > 0 {
            acc += self.off[i - 1] * v.get(i - 1);
        }
        if i + 1 < self.dim() {
            acc += self.off[i] * v.get(i + 1);
        }
        acc
    }

    fn dump(&self) -> String {
        let mut s = String::from("row,diag,off\n");
        for (i, d) in self.diag.iter().enumerate() {
            let e = self.off.get(i).copied().unwrap_or(0.0);
            s.push_str(&format!("{i},{d:e},{e:e}\n"));
        }
        s
    }

    fn sub_block(&self, lo: usize, hi: usize) -> (Vec<f64>, Vec<f64>) {
        (self.diag[lo..=hi].to_vec(), self.off[lo..hi].to_vec())
    }
}

/// Eigenvector stored over the contiguous rows `start .. start + values.len()`;
/// every other component is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVector {
    pub start: usize,
    pub values: Vec<f64>,
}

impl LocalVector {
    fn from_dense(values: &[f64], offset: usize) -> Self {
        let first = values.iter().position(|x| x.abs() > DROP_TOLERANCE);
        let last = values.iter().rposition(|x| x.abs() > DROP_TOLERANCE);
        match (first, last) {
            (Some(a), Some(b)) => Self {
                start: offset + a,
                values: values[a..=b].to_vec(),
            },
            _ => Self {
                start: offset,
                values: Vec::new(),
            },
        }
    }

    pub fn end(&self) -> usize {
        self.start + self.values.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        if i >= self.start && i < self.end() {
            self.values[i - self.start]
        } else {
            0.0
        }
    }

    fn dot(&self, other: &LocalVector) -> f64 {
        let lo = self.start.max(other.start);
        let hi = self.end().min(other.end());
        (lo..hi).map(|i| self.get(i) * other.get(i)).sum()
    }

    fn peak(&self) -> usize {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best });
        self.start + i
    }
}

/// Eigenvalues in ascending order with their eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<LocalVector>,
}

impl Eigendecomposition {
    /// Number of stored non-zero eigenvector entries.
    pub fn stored_entries(&self) -> usize {
        self.vectors.iter().map(|v| v.values.len()).sum()
    }

    /// Largest `|T v - lambda v|` over all eigenpairs.
    pub fn max_residual(&self, mat: &SymTridiagonal) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&lam, v)| residual(mat, v, lam))
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `V^T V` from the identity, evaluated on pairs
    /// with overlapping support.
    pub fn max_orthogonality_error(&self) -> f64 {
        let mut order: Vec<usize> = (0..self.vectors.len()).collect();
        order.sort_by_key(|&i| self.vectors[i].start);
        let mut worst = 0.0f64;
        for (pos, &a) in order.iter().enumerate() {
            let va = &self.vectors[a];
            worst = worst.max((va.dot(va) - 1.0).abs());
            for &b in &order[pos + 1..] {
                let vb = &self.vectors[b];
                if vb.start >= va.end() {
                    break;
                }
                worst = worst.max(va.dot(vb).abs());
            }
        }
        worst
    }
}

fn residual(mat: &SymTridiagonal, v: &LocalVector, lambda: f64) -> f64 {
    if v.values.is_empty() {
        return f64::INFINITY;
    }
    let lo = v.start.saturating_sub(1);
    let hi = (v.end() + 1).min(mat.dim());
    (lo..hi)
        .map(|i| (mat.apply_at(v, i) - lambda * v.get(i)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Implicit QL on a raw tridiagonal. Returns ascending eigenvalues and the
/// eigenvectors as dense column-major storage (`z[col * n + row]`).
fn ql_implicit(diag: &[f64], off: &[f64]) -> std::result::Result<(Vec<f64>, Vec<f64>), usize> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(l);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (left, right) = z.split_at_mut((i + 1) * n);
                let zi = &mut left[i * n..];
                let zi1 = &mut right[..n];
                for k in 0..n {
                    let f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut sorted = Vec::with_capacity(n * n);
    for &i in &order {
        sorted.extend_from_slice(&z[i * n..(i + 1) * n]);
    }
    Ok((values, sorted))
}

/// Full eigendecomposition by implicit QL.
pub fn eigen_dense(mat: &SymTridiagonal) -> Result<Eigendecomposition> {
    let n = mat.dim();
    let (values, z) = ql_implicit(&mat.diag, &mat.off).map_err(|row| Error::Numeric {
        message: format!("QL iteration did not converge for eigenvalue {row}"),
        dump: Some(mat.dump()),
    })?;
    let vectors = (0..n)
        .map(|j| LocalVector::from_dense(&z[j * n..(j + 1) * n], 0))
        .collect();
    Ok(Eigendecomposition { values, vectors })
}

/// Tuning for [`eigen_localized`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationParams {
    /// Row around which the diagonal is smallest.
    pub center: usize,
    /// Rows within this distance of `center` take their eigenvectors from the
    /// dense central block.
    pub core_radius: usize,
    /// Half-width of each outer window, also used as the margin around the
    /// central block.
    pub window: usize,
    /// Largest admissible eigenvector magnitude at a window edge.
    pub tail_tolerance: f64,
    /// Acceptance threshold for residuals (relative to `max(1, |lambda|)`)
    /// and for orthogonality.
    pub check_tolerance: f64,
}

impl LocalizationParams {
    pub fn centered(center: usize, core_radius: usize, window: usize) -> Self {
        Self {
            center,
            core_radius,
            window,
            tail_tolerance: 1e-20,
            check_tolerance: 1e-11,
        }
    }
}

/// Eigendecomposition exploiting eigenvector localisation away from
/// `params.center`. Falls back to [`eigen_dense`] when the localised result
/// fails validation after widening the windows.
pub fn eigen_localized(mat: &SymTridiagonal, params: LocalizationParams) -> Result<Eigendecomposition> {
    let n = mat.dim();
    let mut p = params;
    while 2 * (p.core_radius + p.window) + 1 < n {
        match try_localized(mat, &p) {
            Ok(dec) => return Ok(dec),
            Err(reason) => {
                log::debug!(
                    "localized eigensolve failed ({reason}); widening core {} window {}",
                    p.core_radius,
                    p.window
                );
                p.core_radius *= 2;
                p.window *= 2;
            }
        }
    }
    eigen_dense(mat)
}

fn try_localized(mat: &SymTridiagonal, p: &LocalizationParams) -> std::result::Result<Eigendecomposition, String> {
    let n = mat.dim();
    let inner_lo = p.center.saturating_sub(p.core_radius);
    let inner_hi = (p.center + p.core_radius).min(n - 1);
    let block_lo = inner_lo.saturating_sub(p.window);
    let block_hi = (inner_hi + p.window).min(n - 1);
    let m = block_hi - block_lo + 1;

    let mut pairs: Vec<(f64, LocalVector)> = Vec::with_capacity(n);

    // Central block: keep the eigenvectors carrying the most weight inside
    // the inner rows.
    let (bd, be) = mat.sub_block(block_lo, block_hi);
    let (bvals, bz) = ql_implicit(&bd, &be).map_err(|_| "central QL did not converge".to_string())?;
    let mut ranked: Vec<(f64, usize)> = (0..m)
        .map(|j| {
            let col = &bz[j * m..(j + 1) * m];
            let w: f64 = col[inner_lo - block_lo..=inner_hi - block_lo]
                .iter()
                .map(|x| x * x)
                .sum();
            (w, j)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, j) in ranked.iter().take(inner_hi - inner_lo + 1) {
        let col = &bz[j * m..(j + 1) * m];
        let lo_edge = block_lo > 0 && col[0].abs() > p.tail_tolerance;
        let hi_edge = block_hi + 1 < n && col[m - 1].abs() > p.tail_tolerance;
        if lo_edge || hi_edge {
            return Err("central eigenvector reaches block edge".into());
        }
        pairs.push((bvals[j], LocalVector::from_dense(col, block_lo)));
    }

    // Outer rows: one eigenpair per row from a short window.
    for site in (0..inner_lo).chain(inner_hi + 1..n) {
        pairs.push(rayleigh_window(mat, site, p)?);
    }

    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (values, vectors): (Vec<f64>, Vec<LocalVector>) = pairs.into_iter().unzip();
    let dec = Eigendecomposition { values, vectors };

    for (&lam, v) in dec.values.iter().zip(&dec.vectors) {
        let r = residual(mat, v, lam);
        if r.is_nan() || r > p.check_tolerance * lam.abs().max(1.0) {
            return Err(format!("residual {r:e} at eigenvalue {lam}"));
        }
    }
    let ortho = dec.max_orthogonality_error();
    if ortho.is_nan() || ortho > p.check_tolerance {
        return Err(format!("orthogonality error {ortho:e}"));
    }
    Ok(dec)
}

fn rayleigh_window(
    mat: &SymTridiagonal,
    site: usize,
    p: &LocalizationParams,
) -> std::result::Result<(f64, LocalVector), String> {
    let n = mat.dim();
    let lo = site.saturating_sub(p.window);
    let hi = (site + p.window).min(n - 1);
    let (d, e) = mat.sub_block(lo, hi);
    let m = d.len();
    let scale = d.iter().map(|x| x.abs()).fold(1.0, f64::max);

    let mut x = vec![0.0; m];
    x[site - lo] = 1.0;
    let mut lambda = d[site - lo];
    let mut converged = false;
    for _ in 0..MAX_RQI_ITERATIONS {
        let mut y = solve_shifted(&d, &e, lambda, &x, scale);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(format!("inverse iteration broke down at row {site}"));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        x = y;
        let next = rayleigh_quotient(&d, &e, &x);
        let settled = (next - lambda).abs() <= 4.0 * f64::EPSILON * next.abs().max(1.0);
        lambda = next;
        if settled {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(format!("Rayleigh iteration did not settle at row {site}"));
    }
    // Polish the vector at the converged shift.
    let mut y = solve_shifted(&d, &e, lambda, &x, scale);
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    y.iter_mut().for_each(|v| *v /= norm);
    lambda = rayleigh_quotient(&d, &e, &y);

    let lo_edge = lo > 0 && y[0].abs() > p.tail_tolerance;
    let hi_edge = hi + 1 < n && y[m - 1].abs() > p.tail_tolerance;
    if lo_edge || hi_edge {
        return Err(format!("eigenvector at row {site} reaches its window edge"));
    }
    let v = LocalVector::from_dense(&y, lo);
    if v.peak() != site {
        return Err(format!("eigenvector for row {site} peaks at row {}", v.peak()));
    }
    Ok((lambda, v))
}

fn rayleigh_quotient(d: &[f64], e: &[f64], x: &[f64]) -> f64 {
    let m = d.len();
    let mut acc = 0.0;
    for i in 0..m {
        let mut tx = d[i] * x[i];
        if i > 0 {
            tx += e[i - 1] * x[i - 1];
        }
        if i + 1 < m {
            tx += e[i] * x[i + 1];
        }
        acc += x[i] * tx;
    }
    acc / x.iter().map(|v| v * v).sum::<f64>()
}

/// Solves `(T - shift I) y = rhs` by Gaussian elimination with partial
/// pivoting. Exactly zero pivots are replaced by `eps * scale`, which is the
/// standard device for inverse iteration at a converged shift.
fn solve_shifted(d: &[f64], e: &[f64], shift: f64, rhs: &[f64], scale: f64) -> Vec<f64> {
    let m = d.len();
    let tiny = f64::EPSILON * scale;
    let mut x = rhs.to_vec();
    if m == 1 {
        let piv = d[0] - shift;
        x[0] /= if piv == 0.0 { tiny } else { piv };
        return x;
    }
    let mut dg: Vec<f64> = d.iter().map(|v| v - shift).collect();
    let mut dl = e.to_vec();
    let mut du = e.to_vec();
    let mut du2 = vec![0.0; m.saturating_sub(2)];

    for i in 0..m - 1 {
        if dg[i].abs() >= dl[i].abs() {
            if dg[i] == 0.0 {
                dg[i] = tiny;
            }
            let fact = dl[i] / dg[i];
            dg[i + 1] -= fact * du[i];
            x[i + 1] -= fact * x[i];
            if i + 2 < m {
                du2[i] = 0.0;
            }
        } else {
            let fact = dg[i] / dl[i];
            dg[i] = dl[i];
            let temp = dg[i + 1];
            dg[i + 1] = du[i] - fact * temp;
            if i + 2 < m {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let t = x[i];
            x[i] = x[i + 1];
            x[i + 1] = t - fact * x[i + 1];
        }
        dl[i] = 0.0;
    }
    if dg[m - 1] == 0.0 {
        dg[m - 1] = tiny;
    }
    x[m - 1] /= dg[m - 1];
    x[m - 2] = (x[m - 2] - du[m - 2] * x[m - 1]) / dg[m - 2];
    for i in (0..m.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dg[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(n: usize, v: f64, beta: f64) -> SymTridiagonal {
        let h = (n as i64 - 1) / 2;
        let diag = (0..n)
            .map(|i| {
                let k = (i as i64 - h) as f64;
                (k * k + 2.0 * k * beta) / 2.0
            })
            .collect();
        SymTridiagonal::new(diag, vec![-v / 2.0; n - 1]).unwrap()
    }

    #[test]
    fn shape_is_validated() {
        assert!(SymTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![1.0, f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = SymTridiagonal::new(vec![0.5, 0.0], vec![-0.3]).unwrap();
        let dec = eigen_dense(&m).unwrap();
        let disc = (0.0625f64 + 0.09).sqrt();
        assert!((dec.values[0] - (0.25 - disc)).abs() < 1e-15);
        assert!((dec.values[1] - (0.25 + disc)).abs() < 1e-15);
        assert!(dec.max_residual(&m) < 1e-15);
    }

    #[test]
    fn one_by_one() {
        let m = SymTridiagonal::new(vec![3.5], vec![]).unwrap();
        let dec = eigen_dense(&m).unwrap();
        assert_eq!(dec.values, vec![3.5]);
        assert_eq!(dec.vectors[0].values, vec![1.0]);
    }

    #[test]
    fn diagonal_matrix_is_its_own_decomposition() {
        let m = SymTridiagonal::new(vec![3.0, -1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let dec = eigen_dense(&m).unwrap();
        assert_eq!(dec.values, vec![-1.0, 2.0, 3.0]);
        assert_eq!(dec.vectors[0].start, 1);
        assert_eq!(dec.vectors[0].values.len(), 1);
    }

    #[test]
    fn shifted_solver_matches_multiplication() {
        let d = [4.0, -1.0, 2.5, 0.3, 7.0];
        let e = [1.5, -2.0, 0.7, 3.0];
        let y = [0.2, -1.0, 0.5, 2.0, -0.3];
        let shift = 0.4;
        let mut rhs = [0.0; 5];
        for i in 0..5 {
            rhs[i] = (d[i] - shift) * y[i];
            if i > 0 {
                rhs[i] += e[i - 1] * y[i - 1];
            }
            if i < 4 {
                rhs[i] += e[i] * y[i + 1];
            }
        }
        let x = solve_shifted(&d, &e, shift, &rhs, 7.0);
        for i in 0..5 {
            assert!((x[i] - y[i]).abs() < 1e-13, "{x:?}");
        }
    }

    #[test]
    fn localized_agrees_with_dense_on_lattice_matrices() {
        for &(v, beta) in &[(0.1, 0.0), (0.1, 0.5), (0.37, 0.13), (2.0, -0.25)] {
            let m = lattice(301, v, beta);
            let params = LocalizationParams::centered(150, 12, 16);
            let loc = eigen_localized(&m, params).unwrap();
            let dense = eigen_dense(&m).unwrap();
            assert!(loc.max_residual(&m) < 1e-9);
            assert!(loc.max_orthogonality_error() < 1e-12);
            for (a, b) in loc.values.iter().zip(&dense.values) {
                assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
            // Localisation keeps storage far below n^2.
            assert!(loc.stored_entries() < 301 * 40);
        }
    }

    #[test]
    fn small_matrices_fall_back_to_dense() {
        let m = lattice(5, 0.3, 0.0);
        let dec = eigen_localized(&m, LocalizationParams::centered(2, 12, 16)).unwrap();
        assert_eq!(dec.values.len(), 5);
        assert!(dec.max_residual(&m) < 1e-14);
    }
}
