//! `lattice-depth-sim`: CSV data for multi-pulse diffraction experiments and
//! lattice-depth fits.
//!
//! Exit codes: 0 on success, 2 on usage, parse, domain or I/O errors, 3 when
//! a fit fails to converge.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lattice_depth::analytic::{herold_quadratic, populations_two_state};
use lattice_depth::estimator::{
    fit_depth_and_temperature, fit_lattice_depth, FitOptions, FitResult, Model, ObservedSeries, ThermalModel,
    TRUNCATED_BASIS,
};
use lattice_depth::propagator::{evolve_window, FloquetSpec, Method, SplittingScheme, FULL_BASIS};
use lattice_depth::thermal::{beta_scan, thermal_p0, ThermalSpec, DEFAULT_BETA_POINTS};

use output::{CsvOut, Field};

const EXIT_USAGE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "lattice-depth-sim", version, about = "Multi-pulse atom diffraction simulator and lattice-depth estimator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Populations P_k(N) of the momentum orders |k| <= k-report.
    Simulate(SimulateArgs),
    /// P0(beta, N) across the first Brillouin zone (long format).
    ScanBeta(ScanBetaArgs),
    /// Gaussian-averaged P0(N) for one or more thermal widths (long format).
    Thermal(ThermalArgs),
    /// P0 against N * V_eff for several depths, with two-state and quadratic references.
    Universal(UniversalArgs),
    /// Fit V_eff (and optionally the thermal width) to measured P0(N).
    Fit(FitArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SimMethod {
    /// Two-state closed form (beta = 0 only).
    Analytic,
    /// Eigendecomposition in a small basis (default 5 states).
    Truncated,
    Splitstep,
    Eigen,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PropMethod {
    Eigen,
    Splitstep,
}

impl From<PropMethod> for Method {
    fn from(m: PropMethod) -> Self {
        match m {
            PropMethod::Eigen => Method::Eigen,
            PropMethod::Splitstep => Method::SplitStep,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Scheme {
    /// Second-order Strang splitting.
    Strang,
    /// Fourth-order composition of Strang steps.
    Fourth,
}

impl From<Scheme> for SplittingScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Strang => SplittingScheme::Strang,
            Scheme::Fourth => SplittingScheme::Yoshida4,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Write CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Print populations below this value as 0 (display only; default 1e-11).
    #[arg(long, num_args = 0..=1, default_missing_value = "1e-11", value_name = "P")]
    cutoff: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Dimensionless lattice depth.
    #[arg(long)]
    veff: f64,
    /// Number of pulses N_max.
    #[arg(long, default_value_t = 40)]
    pulses: usize,
    #[arg(long, value_enum, default_value_t = SimMethod::Eigen)]
    method: SimMethod,
    /// Odd basis size (default 5 for truncated, 2047 otherwise).
    #[arg(long)]
    basis: Option<usize>,
    /// Quasimomentum in [-0.5, 0.5].
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta: f64,
    /// Split-step substeps per pulse (default: auto-converged).
    #[arg(long)]
    substeps: Option<u32>,
    #[arg(long, value_enum, default_value_t = Scheme::Fourth)]
    scheme: Scheme,
    /// Report momentum orders |k| <= this.
    #[arg(long, default_value_t = 6)]
    k_report: i64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ScanBetaArgs {
    #[arg(long)]
    veff: f64,
    #[arg(long, default_value_t = 40)]
    pulses: usize,
    /// Odd number of quasimomentum grid points over [-0.5, 0.5].
    #[arg(long, default_value_t = DEFAULT_BETA_POINTS)]
    nbeta: usize,
    #[arg(long, default_value_t = FULL_BASIS)]
    basis: usize,
    #[arg(long, value_enum, default_value_t = PropMethod::Eigen)]
    method: PropMethod,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ThermalArgs {
    #[arg(long)]
    veff: f64,
    /// Comma-separated thermal widths.
    #[arg(long, value_delimiter = ',', required = true)]
    w: Vec<f64>,
    #[arg(long, default_value_t = 40)]
    pulses: usize,
    #[arg(long, default_value_t = DEFAULT_BETA_POINTS)]
    nbeta: usize,
    #[arg(long, default_value_t = FULL_BASIS)]
    basis: usize,
    #[arg(long, value_enum, default_value_t = PropMethod::Eigen)]
    method: PropMethod,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct UniversalArgs {
    /// Comma-separated depths.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.03,0.05,0.07,0.09,0.11")]
    veff: Vec<f64>,
    /// Largest N * V_eff; each depth runs to the nearest pulse count.
    #[arg(long, default_value_t = 1.0)]
    max_nv: f64,
    /// Fixed pulse count for every depth, overriding --max-nv.
    #[arg(long)]
    pulses: Option<usize>,
    #[arg(long, default_value_t = FULL_BASIS)]
    basis: usize,
    #[arg(long, value_enum, default_value_t = PropMethod::Eigen)]
    method: PropMethod,
    #[command(flatten)]
    common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FitModel {
    Analytic,
    Quadratic,
    /// Small-basis propagation (size from --basis, default 5).
    Truncated,
    /// Full-basis propagation.
    Full,
    /// cos^2(pi V N) band-edge resonance.
    BandEdge,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV with columns N,P0[,sigma].
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FitModel::Analytic)]
    model: FitModel,
    /// Basis size for --model truncated.
    #[arg(long)]
    basis: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    vmin: f64,
    #[arg(long, default_value_t = 0.5)]
    vmax: f64,
    /// Also fit a thermal width in [wmin, wmax] (truncated or full models).
    #[arg(long)]
    thermal: bool,
    #[arg(long, default_value_t = 0.0)]
    wmin: f64,
    #[arg(long, default_value_t = 0.05)]
    wmax: f64,
    /// Quasimomentum grid size for thermal fits.
    #[arg(long, default_value_t = 401)]
    nbeta: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_evals: usize,
    /// Write the residual CSV here instead of after the report on stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::ScanBeta(a) => scan_beta(a),
        Command::Thermal(a) => thermal(a),
        Command::Universal(a) => universal(a),
        Command::Fit(a) => fit(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn p_columns(k_report: i64) -> Vec<String> {
    (-k_report..=k_report).map(|k| format!("P{k}")).collect()
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    if a.k_report < 0 {
        bail!("--k-report must be non-negative");
    }
    let kr = a.k_report;
    let rows: Vec<Vec<f64>> = match a.method {
        SimMethod::Analytic => {
            if a.beta != 0.0 {
                bail!("the analytic model applies at beta = 0 only");
            }
            FloquetSpec::new(a.veff, 0.0, 3)?;
            (0..=a.pulses)
                .map(|n| {
                    let (p0, p_plus) = populations_two_state(n as u32, a.veff);
                    (-kr..=kr)
                        .map(|k| match k.abs() {
                            0 => p0,
                            1 => p_plus / 2.0,
                            _ => 0.0,
                        })
                        .collect()
                })
                .collect()
        }
        method => {
            let basis = a.basis.unwrap_or(if method == SimMethod::Truncated {
                TRUNCATED_BASIS
            } else {
                FULL_BASIS
            });
            let mut spec = FloquetSpec::new(a.veff, a.beta, basis)?.with_scheme(a.scheme.into());
            if let Some(s) = a.substeps {
                spec = spec.with_substeps(s);
            }
            spec.validate()?;
            let method = if method == SimMethod::Splitstep {
                Method::SplitStep
            } else {
                Method::Eigen
            };
            let evo = evolve_window(0, &spec, a.pulses, method, (-kr, kr))?;
            (0..=a.pulses).map(|n| evo.populations.row(n).to_vec()).collect()
        }
    };
    let mut out = CsvOut::create(a.common.output.as_deref(), a.common.cutoff)?;
    let mut cols = vec!["N".to_string()];
    cols.extend(p_columns(kr));
    out.header(&cols)?;
    for (n, row) in rows.iter().enumerate() {
        out.row(&[Field::Int(n as i64)], row)?;
    }
    out.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn scan_beta(a: ScanBetaArgs) -> Result<ExitCode> {
    let scan = beta_scan(a.veff, a.nbeta, a.pulses, a.basis, a.method.into())?;
    let mut out = CsvOut::create(a.common.output.as_deref(), a.common.cutoff)?;
    out.header(&["beta".into(), "N".into(), "P0".into()])?;
    for (beta, series) in scan.betas.iter().zip(&scan.p0_surface) {
        for (n, p) in series.p0().iter().enumerate() {
            out.row(&[Field::Real(*beta), Field::Int(n as i64)], &[*p])?;
        }
    }
    out.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn thermal(a: ThermalArgs) -> Result<ExitCode> {
    let mut widths = a.w.clone();
    widths.sort_by(f64::total_cmp);
    let mut series = Vec::with_capacity(widths.len());
    for &w in &widths {
        let spec = ThermalSpec::new(w, a.nbeta)?;
        if w > lattice_depth::model::COLD_WIDTH_LIMIT {
            log::warn!("width {w} exceeds a quarter of the Brillouin zone; the k = 0 ensemble is a poor description");
        }
        series.push(thermal_p0(a.veff, &spec, a.pulses, a.basis, a.method.into())?);
    }
    let mut out = CsvOut::create(a.common.output.as_deref(), a.common.cutoff)?;
    out.header(&["w".into(), "N".into(), "P0".into()])?;
    for (w, s) in widths.iter().zip(&series) {
        for (n, p) in s.p0().iter().enumerate() {
            out.row(&[Field::Real(*w), Field::Int(n as i64)], &[*p])?;
        }
    }
    out.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn universal(a: UniversalArgs) -> Result<ExitCode> {
    if !(a.max_nv.is_finite() && a.max_nv > 0.0) {
        bail!("--max-nv must be positive");
    }
    let mut depths = a.veff.clone();
    depths.sort_by(f64::total_cmp);
    let mut out = CsvOut::create(a.common.output.as_deref(), a.common.cutoff)?;
    out.header(&[
        "v_eff".into(),
        "N".into(),
        "NV".into(),
        "P0".into(),
        "P0_analytic".into(),
        "P0_quadratic".into(),
    ])?;
    for &v in &depths {
        let pulses = match a.pulses {
            Some(p) => p,
            None if v > 0.0 => (a.max_nv / v).round() as usize,
            None => bail!("V_eff = 0 needs an explicit --pulses"),
        };
        let spec = FloquetSpec::new(v, 0.0, a.basis)?;
        let p0 = evolve_window(0, &spec, pulses, a.method.into(), (0, 0))?.populations.p0();
        for (n, p) in p0.iter().enumerate() {
            let analytic = populations_two_state(n as u32, v).0;
            let quadratic = 1.0 - herold_quadratic(n as u32, v).p_plus;
            out.row(
                &[Field::Real(v), Field::Int(n as i64), Field::Real(n as f64 * v)],
                &[*p, analytic, quadratic],
            )?;
        }
    }
    out.finish()?;
    Ok(ExitCode::SUCCESS)
}

fn fit(a: FitArgs) -> Result<ExitCode> {
    let data = ObservedSeries::from_csv_path(&a.input)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let model = match a.model {
        FitModel::Analytic => Model::Analytic,
        FitModel::Quadratic => Model::Quadratic,
        FitModel::Truncated => Model::Truncated(a.basis.unwrap_or(TRUNCATED_BASIS)),
        FitModel::Full => Model::Full,
        FitModel::BandEdge => Model::BandEdge,
    };
    let opts = FitOptions {
        tol: a.tol,
        max_evaluations: a.max_evals,
    };
    let result = if a.thermal {
        let tm = ThermalModel::new(model, a.nbeta)?;
        fit_depth_and_temperature(&data, &tm, (a.vmin, a.vmax), (a.wmin, a.wmax), &opts)?
    } else {
        fit_lattice_depth(&data, &model, (a.vmin, a.vmax), &opts)?
    };
    let predicted = match result.width {
        Some(w) => ThermalModel::new(model, a.nbeta)?.predict(result.v_eff, w, data.pulses())?,
        None => model.predict(result.v_eff, data.pulses())?,
    };
    report(&result);

    let mut out = CsvOut::create(a.output.as_deref(), None)?;
    out.header(&["N".into(), "P0_observed".into(), "P0_model".into(), "residual".into()])?;
    for ((&n, &obs), &pred) in data.pulses().iter().zip(data.p0()).zip(&predicted) {
        out.row(&[Field::Int(n as i64)], &[obs, pred, obs - pred])?;
    }
    out.finish()?;

    if result.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("warning: fit did not converge within {} evaluations", a.max_evals);
        Ok(ExitCode::from(EXIT_NOT_CONVERGED))
    }
}

fn report(r: &FitResult) {
    println!("# model = {}", r.model);
    println!("# v_eff = {}", output::num(r.v_eff));
    if let Some(w) = r.width {
        println!("# w = {}", output::num(w));
    }
    println!("# residual_rms = {}", output::num(r.residual_rms));
    println!("# evaluations = {}", r.evaluations);
    println!("# converged = {}", r.converged);
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn cutoff_flag_defaults_to_plotting_threshold() {
        let cli = Cli::try_parse_from(["x", "simulate", "--veff", "0.1", "--cutoff"]).unwrap();
        let Command::Simulate(a) = cli.command else { panic!() };
        assert_eq!(a.common.cutoff, Some(1e-11));
        let cli = Cli::try_parse_from(["x", "simulate", "--veff", "0.1"]).unwrap();
        let Command::Simulate(a) = cli.command else { panic!() };
        assert_eq!(a.common.cutoff, None);
    }

    #[test]
    fn width_lists_split_on_commas() {
        let cli = Cli::try_parse_from(["x", "thermal", "--veff", "0.01", "--w", "0.00125,0.0125,0.125"]).unwrap();
        let Command::Thermal(a) = cli.command else { panic!() };
        assert_eq!(a.w, vec![0.00125, 0.0125, 0.125]);
    }
}
