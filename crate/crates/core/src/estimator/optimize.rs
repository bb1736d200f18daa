//! Derivative-free minimisers used by the fitters.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Points in the coarse scan that brackets the golden-section search.
pub const PRESCAN_POINTS: usize = 33;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn checked(x: f64, value: Result<f64>) -> Result<f64> {
    let value = value?;
    if !value.is_finite() {
        return Err(Error::numeric(format!("objective is not finite at {x}")));
    }
    Ok(value)
}

/// Minimises `f` on `[lo, hi]`: a uniform coarse scan picks the bracket
/// around its best point, which golden-section search then narrows below
/// `tol`. Evaluations, including the scan, are capped at `budget`.
pub fn golden_section<F>(f: F, lo: f64, hi: f64, tol: f64, budget: usize) -> Result<Minimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if lo == hi {
        let value = checked(lo, f(lo))?;
        return Ok(Minimum {
            x: vec![lo],
            value,
            evaluations: 1,
            converged: true,
        });
    }
    let step = (hi - lo) / (PRESCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..PRESCAN_POINTS)
        .map(|i| if i + 1 == PRESCAN_POINTS { hi } else { lo + i as f64 * step })
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&x| checked(x, f(x)))
        .collect::<Result<_>>()?;
    let mut evaluations = PRESCAN_POINTS;
    let best = (0..PRESCAN_POINTS)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)))
        .expect("non-empty scan");
    let (mut best_x, mut best_v) = (grid[best], values[best]);

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(PRESCAN_POINTS - 1)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = checked(c, f(c))?;
    let mut fd = checked(d, f(d))?;
    evaluations += 2;
    while b - a >= tol && evaluations < budget {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = checked(c, f(c))?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = checked(d, f(d))?;
        }
        evaluations += 1;
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best_v {
            best_x = x;
            best_v = v;
        }
    }
    Ok(Minimum {
        x: vec![best_x],
        value: best_v,
        evaluations,
        converged: b - a < tol,
    })
}

/// Nelder–Mead simplex minimisation of `f` over the box `bounds`, starting
/// from the simplex around the box centre with offsets of 10% of each range.
/// Trial points are projected back into the box. Converged when every vertex
/// lies within `tol` of the best one in each coordinate.
pub fn nelder_mead<F>(f: F, bounds: &[(f64, f64); 2], tol: f64, budget: usize) -> Result<Minimum>
where
    F: Fn([f64; 2]) -> Result<f64>,
{
    let clamp = |p: [f64; 2]| [p[0].clamp(bounds[0].0, bounds[0].1), p[1].clamp(bounds[1].0, bounds[1].1)];
    let mid = [0.5 * (bounds[0].0 + bounds[0].1), 0.5 * (bounds[1].0 + bounds[1].1)];
    let off = [0.1 * (bounds[0].1 - bounds[0].0), 0.1 * (bounds[1].1 - bounds[1].0)];
    let eval = |p: [f64; 2]| -> Result<f64> {
        let v = f(p)?;
        if !v.is_finite() {
            return Err(Error::numeric(format!("objective is not finite at {p:?}")));
        }
        Ok(v)
    };

    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    for p in [
        [mid[0] - off[0], mid[1] - off[1]],
        [mid[0] + off[0], mid[1] - off[1]],
        [mid[0], mid[1] + off[1]],
    ] {
        let p = clamp(p);
        simplex.push((p, eval(p)?));
    }
    let mut evaluations = 3;
    let sort = |s: &mut Vec<([f64; 2], f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    let spread = |s: &[([f64; 2], f64)]| {
        s.iter()
            .map(|(p, _)| (p[0] - s[0].0[0]).abs().max((p[1] - s[0].0[1]).abs()))
            .fold(0.0, f64::max)
    };
    let along = |from: [f64; 2], to: [f64; 2], t: f64| {
        clamp([from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])])
    };

    sort(&mut simplex);
    while spread(&simplex) >= tol && evaluations < budget {
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let worst = simplex[2];
        let reflected = along(centroid, worst.0, -1.0);
        let fr = eval(reflected)?;
        evaluations += 1;
        if fr < simplex[0].1 {
            let expanded = along(centroid, worst.0, -2.0);
            let fe = eval(expanded)?;
            evaluations += 1;
            simplex[2] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let p = along(centroid, worst.0, -0.5);
                (p, eval(p)?)
            } else {
                let p = along(centroid, worst.0, 0.5);
                (p, eval(p)?)
            };
            evaluations += 1;
            if fc < worst.1.min(fr) {
                simplex[2] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let p = along(best, vertex.0, 0.5);
                    *vertex = (p, eval(p)?);
                    evaluations += 1;
                }
            }
        }
        sort(&mut simplex);
    }
    Ok(Minimum {
        x: simplex[0].0.to_vec(),
        value: simplex[0].1,
        evaluations,
        converged: spread(&simplex) < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let m = golden_section(|x| Ok((x - 0.3141).powi(2)), 0.0, 2.0, 1e-10, 200).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 0.3141).abs() < 1e-9);
        assert!(m.evaluations <= 200);
    }

    #[test]
    fn golden_section_skips_local_minima_via_scan() {
        // Shallow local minimum near 1.6, global minimum at 0.25.
        let f = |x: f64| Ok((x - 0.25).abs().min(0.1 + (x - 1.6).abs()));
        let m = golden_section(f, 0.0, 2.0, 1e-9, 200).unwrap();
        assert!((m.x[0] - 0.25).abs() < 1e-8);
    }

    #[test]
    fn golden_section_reports_exhausted_budget() {
        let m = golden_section(|x| Ok((x - 1.0).powi(2)), 0.0, 2.0, 1e-12, 40).unwrap();
        assert!(!m.converged);
        assert_eq!(m.evaluations, 40);
        assert!((m.x[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        assert!(golden_section(|_| Ok(f64::NAN), 0.0, 1.0, 1e-6, 200).is_err());
        assert!(nelder_mead(|_| Ok(f64::INFINITY), &[(0.0, 1.0), (0.0, 1.0)], 1e-6, 200).is_err());
    }

    #[test]
    fn nelder_mead_finds_quadratic_bowl() {
        let f = |p: [f64; 2]| Ok((p[0] - 0.2).powi(2) + 3.0 * (p[1] - 0.7).powi(2) + 0.5 * (p[0] - 0.2) * (p[1] - 0.7));
        let m = nelder_mead(f, &[(0.0, 1.0), (0.0, 1.0)], 1e-9, 500).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 0.2).abs() < 1e-8 && (m.x[1] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let m = nelder_mead(|p| Ok(-p[0] - p[1]), &[(0.0, 1.0), (0.0, 2.0)], 1e-9, 500).unwrap();
        assert_eq!(m.x, vec![1.0, 2.0]);
    }
}
