//! Comparison of population series and least-squares extraction of the
//! lattice depth (and optionally the thermal width) from measured `P_0(N)`.

mod models;
mod optimize;

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub use models::{Model, ThermalModel, TRUNCATED_BASIS};
pub use optimize::{golden_section, nelder_mead, Minimum, PRESCAN_POINTS};

/// Largest admissible `V_eff` search bound.
pub const MAX_V_EFF: f64 = 2.0;

/// Measured `P_0` at a strictly increasing set of pulse counts, with optional
/// one-standard-deviation uncertainties.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSeries {
    pulses: Vec<u32>,
    p0: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

impl ObservedSeries {
    pub fn new(pulses: Vec<u32>, p0: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::domain("observed series is empty"));
        }
        if p0.len() != pulses.len() || sigma.as_ref().is_some_and(|s| s.len() != pulses.len()) {
            return Err(Error::domain("observed series columns differ in length"));
        }
        if pulses.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("pulse counts must be strictly increasing"));
        }
        if let Some(p) = p0.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::domain(format!("P0 value {p} outside [0, 1]")));
        }
        if let Some(s) = sigma.iter().flatten().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::domain(format!("uncertainty {s} must be positive")));
        }
        Ok(Self { pulses, p0, sigma })
    }

    /// Reads `N,P0[,sigma]` rows. Lines starting with `#` are skipped, as is
    /// a leading header row whose first field is not an integer.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut pulses = Vec::new();
        let mut p0 = Vec::new();
        let mut sigma = Vec::new();
        let mut width = None;
        let mut first = true;
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let parse_err = |message: String| Error::Parse { line, message };
            if first {
                first = false;
                if record.get(0).is_some_and(|f| f.parse::<u32>().is_err()) {
                    continue;
                }
            }
            if !(2..=3).contains(&record.len()) {
                return Err(parse_err(format!("expected 2 or 3 fields, found {}", record.len())));
            }
            if *width.get_or_insert(record.len()) != record.len() {
                return Err(parse_err("inconsistent number of fields".into()));
            }
            let n = record[0]
                .parse::<u32>()
                .map_err(|e| parse_err(format!("pulse count {:?}: {e}", &record[0])))?;
            let p = record[1]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("P0 value {:?}: {e}", &record[1])))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(parse_err(format!("P0 value {p} outside [0, 1]")));
            }
            if let Some(&last) = pulses.last() {
                if n <= last {
                    return Err(parse_err(format!("pulse count {n} does not increase")));
                }
            }
            if record.len() == 3 {
                let s = record[2]
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("sigma {:?}: {e}", &record[2])))?;
                if !(s.is_finite() && s > 0.0) {
                    return Err(parse_err(format!("sigma {s} must be positive")));
                }
                sigma.push(s);
            }
            pulses.push(n);
            p0.push(p);
        }
        let sigma = (width == Some(3)).then_some(sigma);
        Self::new(pulses, p0, sigma)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn pulses(&self) -> &[u32] {
        &self.pulses
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Inverse-variance weights, if uncertainties were given.
    fn weights(&self) -> Option<Vec<f64>> {
        self.sigma
            .as_ref()
            .map(|s| s.iter().map(|s| 1.0 / (s * s)).collect())
    }
}

/// Root-mean-square difference `sqrt(sum (a - b)^2 / len)`.
pub fn rms_deviation(a: &[f64], b: &[f64]) -> Result<f64> {
    weighted_rms_deviation(a, b, None)
}

/// RMS difference with optional per-point weights, normalised by their sum.
pub fn weighted_rms_deviation(a: &[f64], b: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::domain("RMS over an empty selection"));
    }
    if a.len() != b.len() || weights.is_some_and(|w| w.len() != a.len()) {
        return Err(Error::domain("RMS operands differ in length"));
    }
    let (num, den) = match weights {
        None => (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>(), a.len() as f64),
        Some(w) => (
            a.iter().zip(b).zip(w).map(|((x, y), w)| w * (x - y) * (x - y)).sum(),
            w.iter().sum(),
        ),
    };
    Ok((num / den).sqrt())
}

/// Pulse count closest to `target_nv / v_eff`, at least 1.
pub fn nearest_pulse_selection(target_nv: f64, v_eff: f64) -> Result<u32> {
    if !(v_eff.is_finite() && v_eff > 0.0) {
        return Err(Error::domain(format!("V_eff must be positive, got {v_eff}")));
    }
    Ok((target_nv / v_eff).round().max(1.0) as u32)
}

/// Outcome of a depth fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub v_eff: f64,
    /// Fitted thermal width, for two-parameter fits.
    pub width: Option<f64>,
    /// RMS of data minus model at the optimum (inverse-variance weighted if
    /// the data carry uncertainties).
    pub residual_rms: f64,
    pub model: Model,
    pub evaluations: usize,
    pub converged: bool,
}

/// Stopping rules shared by the fitters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Parameter resolution at which the search stops.
    pub tol: f64,
    pub max_evaluations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_evaluations: 200,
        }
    }
}

fn check_bounds(name: &str, (lo, hi): (f64, f64), max: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= max) {
        return Err(Error::domain(format!(
            "{name} bounds [{lo}, {hi}] must satisfy 0 <= lo <= hi <= {max}"
        )));
    }
    Ok(())
}

fn check_options(opts: &FitOptions) -> Result<()> {
    if !(opts.tol.is_finite() && opts.tol > 0.0) || opts.max_evaluations == 0 {
        return Err(Error::domain("fit tolerance and evaluation budget must be positive"));
    }
    Ok(())
}

fn objective(data: &ObservedSeries, weights: Option<&[f64]>, predicted: Result<Vec<f64>>) -> Result<f64> {
    weighted_rms_deviation(data.p0(), &predicted?, weights)
}

/// Least-squares `V_eff` on `bounds` by scan-bracketed golden-section search.
pub fn fit_lattice_depth(
    data: &ObservedSeries,
    model: &Model,
    bounds: (f64, f64),
    opts: &FitOptions,
) -> Result<FitResult> {
    check_bounds("V_eff", bounds, MAX_V_EFF)?;
    check_options(opts)?;
    let weights = data.weights();
    let f = |v: f64| objective(data, weights.as_deref(), model.predict(v, data.pulses()));
    let m = golden_section(f, bounds.0, bounds.1, opts.tol, opts.max_evaluations)?;
    Ok(FitResult {
        v_eff: m.x[0],
        width: None,
        residual_rms: m.value,
        model: *model,
        evaluations: m.evaluations,
        converged: m.converged,
    })
}

/// Joint least-squares `(V_eff, w)` with a Gaussian-averaged model, by
/// Nelder–Mead on the bounding box. A collapsed width range reduces to a
/// one-dimensional depth fit at that width.
pub fn fit_depth_and_temperature(
    data: &ObservedSeries,
    model: &ThermalModel,
    bounds_v: (f64, f64),
    bounds_w: (f64, f64),
    opts: &FitOptions,
) -> Result<FitResult> {
    check_bounds("V_eff", bounds_v, MAX_V_EFF)?;
    check_bounds("width", bounds_w, f64::MAX)?;
    check_options(opts)?;
    let weights = data.weights();
    if bounds_w.0 == bounds_w.1 {
        let w = bounds_w.0;
        let f = |v: f64| objective(data, weights.as_deref(), model.predict(v, w, data.pulses()));
        let m = golden_section(f, bounds_v.0, bounds_v.1, opts.tol, opts.max_evaluations)?;
        return Ok(FitResult {
            v_eff: m.x[0],
            width: Some(w),
            residual_rms: m.value,
            model: model.base,
            evaluations: m.evaluations,
            converged: m.converged,
        });
    }
    let f = |p: [f64; 2]| objective(data, weights.as_deref(), model.predict(p[0], p[1], data.pulses()));
    let m = nelder_mead(f, &[bounds_v, bounds_w], opts.tol, opts.max_evaluations)?;
    Ok(FitResult {
        v_eff: m.x[0],
        width: Some(m.x[1]),
        residual_rms: m.value,
        model: model.base,
        evaluations: m.evaluations,
        converged: m.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_have_zero_rms() {
        let a = [0.1, 0.5, 0.9];
        assert_eq!(rms_deviation(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn rms_is_root_of_mean_square() {
        assert!((rms_deviation(&[0.0, 0.0], &[0.3, -0.4]).unwrap() - 0.125f64.sqrt()).abs() < 1e-15);
        assert!(rms_deviation(&[], &[]).is_err());
        assert!(rms_deviation(&[0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn weighted_rms_favours_precise_points() {
        let r = weighted_rms_deviation(&[0.0, 0.0], &[1.0, 0.0], Some(&[1.0, 3.0])).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nearest_pulse_examples() {
        assert_eq!(nearest_pulse_selection(0.25, 0.01).unwrap(), 25);
        assert_eq!(nearest_pulse_selection(0.25, 0.11).unwrap(), 2);
        assert_eq!(nearest_pulse_selection(0.5, 0.07).unwrap(), 7);
        assert_eq!(nearest_pulse_selection(0.25, 1.5).unwrap(), 1);
        assert!(nearest_pulse_selection(0.25, 0.0).is_err());
    }

    #[test]
    fn csv_with_header_comments_and_sigma() {
        let text = "# lattice-depth-sim v1\nN,P0,sigma\n0,1.0,0.01\n1, 0.98 ,0.01\n5,0.6,0.02\n";
        let s = ObservedSeries::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(s.pulses(), &[0, 1, 5]);
        assert_eq!(s.p0(), &[1.0, 0.98, 0.6]);
        assert_eq!(s.sigma().unwrap(), &[0.01, 0.01, 0.02]);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let bad_value = "N,P0\n0,1.0\n1,abc\n";
        match ObservedSeries::from_csv_reader(bad_value.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let out_of_range = "0,1.0\n1,1.5\n";
        assert!(matches!(
            ObservedSeries::from_csv_reader(out_of_range.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let not_increasing = "0,1.0\n3,0.5\n3,0.4\n";
        assert!(matches!(
            ObservedSeries::from_csv_reader(not_increasing.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let ragged = "0,1.0\n1,0.9,0.1\n";
        assert!(matches!(
            ObservedSeries::from_csv_reader(ragged.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(ObservedSeries::from_csv_reader("N,P0\n".as_bytes()).is_err());
    }

    #[test]
    fn self_model_round_trip() {
        let pulses: Vec<u32> = (0..=10).collect();
        let p0 = Model::Analytic.predict(0.05, &pulses).unwrap();
        let data = ObservedSeries::new(pulses, p0, None).unwrap();
        let fit = fit_lattice_depth(&data, &Model::Analytic, (0.0, 0.5), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.v_eff - 0.05).abs() < 1e-8);
        assert!(fit.residual_rms < 1e-8);
        assert!(fit.evaluations <= 200);
    }

    #[test]
    fn band_edge_round_trip_is_exact() {
        let pulses: Vec<u32> = (0..=40).collect();
        let p0 = Model::BandEdge.predict(0.05, &pulses).unwrap();
        let data = ObservedSeries::new(pulses, p0, None).unwrap();
        let fit = fit_lattice_depth(&data, &Model::BandEdge, (0.0, 0.2), &FitOptions::default()).unwrap();
        assert!((fit.v_eff - 0.05).abs() < 1e-8);
    }

    #[test]
    fn fits_are_deterministic() {
        let pulses: Vec<u32> = (0..=12).collect();
        let p0: Vec<f64> = Model::Truncated(5)
            .predict(0.07, &pulses)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, p)| (p + 0.003 * (i as f64).sin()).clamp(0.0, 1.0))
            .collect();
        let data = ObservedSeries::new(pulses, p0, None).unwrap();
        let a = fit_lattice_depth(&data, &Model::Analytic, (0.0, 0.3), &FitOptions::default()).unwrap();
        let b = fit_lattice_depth(&data, &Model::Analytic, (0.0, 0.3), &FitOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bounds_are_validated() {
        let data = ObservedSeries::new(vec![0, 1], vec![1.0, 0.9], None).unwrap();
        let opts = FitOptions::default();
        assert!(fit_lattice_depth(&data, &Model::Analytic, (0.0, 2.5), &opts).is_err());
        assert!(fit_lattice_depth(&data, &Model::Analytic, (0.3, 0.1), &opts).is_err());
        assert!(fit_lattice_depth(&data, &Model::Analytic, (-0.1, 0.1), &opts).is_err());
    }

    #[test]
    fn collapsed_width_reduces_to_depth_fit() {
        let pulses: Vec<u32> = (0..=15).collect();
        let p0 = Model::Truncated(5).predict(0.08, &pulses).unwrap();
        let data = ObservedSeries::new(pulses, p0, None).unwrap();
        let opts = FitOptions::default();
        let one = fit_lattice_depth(&data, &Model::Truncated(5), (0.0, 0.3), &opts).unwrap();
        let tm = ThermalModel::new(Model::Truncated(5), 21).unwrap();
        let two = fit_depth_and_temperature(&data, &tm, (0.0, 0.3), (0.0, 0.0), &opts).unwrap();
        assert_eq!(one.v_eff, two.v_eff);
        assert_eq!(one.residual_rms, two.residual_rms);
        assert_eq!(two.width, Some(0.0));
    }
}
