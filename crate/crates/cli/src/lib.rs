//! `lambertw` command-line front end.
//!
//! Subcommands: `fit`, `gaussianize`, `hill`, `bootstrap`, `whiteness` and
//! `simulate`. Exit codes: 0 on success, 1 for usage and input errors, 2 for
//! domain and moment-restriction errors, 3 for non-convergence under `--strict`.

// NaN-rejecting comparisons such as `!(x > 0.0)` are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ingest;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lambertw_core::distributions::{
    forward_transform, sample, Family, InputDist, Tail, Theta, TransformType, Variant,
};
use lambertw_core::estimators::{igmm, mle, EstimatorConfig, IgmmFit, MleFit, MleInit, Tau};
use lambertw_core::resampling::{acf_report, bootstrap_igmm, default_n_grid, sd_times_sqrt_n};
use lambertw_core::tail::{hill_curves_of, hill_study, HillEstimator, HillStudySpec};

pub use error::{CliError, Result};
use ingest::{ingest_csv, Column, Series};
use output::{emit, json_string, Cell, Format, Table};

#[derive(Parser, Debug)]
#[command(name = "lambertw", version, about = "Lambert W x F distributions: fitting, Gaussianizing and tail diagnostics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Root seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// IGMM stopping tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long = "max-iter", global = true, default_value_t = 100)]
    pub max_iter: usize,
    /// Transform type: s (skew), h (heavy tails) or hh (two-sided heavy tails).
    #[arg(long = "type", global = true, default_value = "s")]
    pub kind: TransformType,
    /// mean-variance or location-scale.
    #[arg(long, global = true, default_value = "mean-variance")]
    pub variant: Variant,
    #[arg(long = "target-skewness", global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub target_skewness: f64,
    /// Output format; reports default to json, tables to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Exit with code 3 when an estimator does not converge.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl GlobalOpts {
    fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            target_skewness: self.target_skewness,
            seed: self.seed,
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// CSV file holding the series.
    pub input: PathBuf,
    /// Column name (needs --header) or zero-based index.
    #[arg(long, default_value = "0")]
    pub column: Column,
    /// The first row is a header.
    #[arg(long)]
    pub header: bool,
}

impl InputArgs {
    fn load(&self) -> Result<Series> {
        ingest_csv(&self.input, &self.column, self.header)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Igmm,
    Mle,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate parameters by IGMM or maximum likelihood.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = Method::Igmm)]
        method: Method,
        /// Input family for mle: normal, student_t, cauchy or exponential.
        #[arg(long, default_value = "normal")]
        family: Family,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit IGMM and write the back-transformed series.
    Gaussianize {
        #[command(flatten)]
        input: InputArgs,
        /// Destination of the Gaussianized series (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Destination of the fit report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Hill curves of a data file and/or a simulated Student-t ensemble.
    Hill {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "0")]
        column: Column,
        #[arg(long)]
        header: bool,
        /// Add the simulated ensemble.
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = 1413)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        replications: usize,
        /// Student-t degrees of freedom, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,5,7.09")]
        nu: Vec<f64>,
        /// Lambert W x t cell as c,s,nu,gamma (mean-variance).
        #[arg(long, allow_hyphen_values = true)]
        lambert: Option<String>,
        /// Harmonic exponent for simulated samples (1 = classic Hill).
        #[arg(long = "beta-sim", default_value_t = 2.0)]
        beta_sim: f64,
        /// Harmonic exponent for the data file.
        #[arg(long = "beta-data", default_value_t = 1.001)]
        beta_data: f64,
        /// k values, comma separated (default: 10..n/2 per side, at most 400).
        #[arg(long = "k-grid", value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bootstrap IGMM estimates over subsample sizes.
    Bootstrap {
        #[command(flatten)]
        input: InputArgs,
        /// Subsample sizes, comma separated (default: 8 log-spaced sizes).
        #[arg(long = "n-grid", value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        /// Destination of the per-replicate estimates.
        #[arg(long = "trace-output")]
        trace_output: Option<PathBuf>,
        /// Destination of the sd * sqrt(n) table (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// ACF with bootstrap bands and Ljung-Box tests.
    Whiteness {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long = "max-lag", default_value_t = 30)]
        max_lag: usize,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw a sample from a Lambert W x F distribution.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "normal")]
        family: Family,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Degrees of freedom (student_t only).
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long = "delta-l")]
        delta_l: Option<f64>,
        #[arg(long = "delta-r")]
        delta_r: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        // only the first call in a process can size the global pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = g.estimator_config();
    cfg.validate()?;
    match &cli.command {
        Command::Fit { input, method, family, output } => cmd_fit(&input.load()?, *method, *family, g, output.as_deref()),
        Command::Gaussianize { input, output, report } => {
            cmd_gaussianize(&input.load()?, g, output.as_deref(), report.as_deref())
        }
        Command::Hill {
            input,
            column,
            header,
            simulate,
            n,
            replications,
            nu,
            lambert,
            beta_sim,
            beta_data,
            k_grid,
            output,
        } => {
            let series = input.as_ref().map(|p| ingest_csv(p, column, *header)).transpose()?;
            let lambert_theta = lambert.as_deref().map(parse_lambert).transpose()?;
            let spec = simulate.then(|| HillStudySpec {
                n: *n,
                replications: *replications,
                nu_grid: nu.clone(),
                lambert_theta,
                beta_sim: *beta_sim,
                beta_data: *beta_data,
                k_grid: k_grid.clone(),
                seed: g.seed,
            });
            let table = cmd_hill(series.as_ref(), spec.as_ref(), *beta_data, k_grid.as_deref())?;
            emit(output.as_deref(), &table.render(g.format.unwrap_or(Format::Csv)))
        }
        Command::Bootstrap { input, n_grid, replicates, trace_output, output } => {
            let series = input.load()?;
            let grid = n_grid.clone().unwrap_or_else(|| default_n_grid(series.values.len()));
            let (trace, sd) = cmd_bootstrap(&series, g, &grid, *replicates)?;
            let format = g.format.unwrap_or(Format::Csv);
            if let Some(p) = trace_output {
                emit(Some(p), &trace.render(format))?;
            }
            emit(output.as_deref(), &sd.render(format))?;
            if g.strict {
                let bad = trace.rows.iter().filter(|r| r[4] == Cell::Bool(false)).count();
                if bad > 0 {
                    return Err(CliError::NotConverged(format!("{bad} bootstrap replicate estimate(s)")));
                }
            }
            Ok(())
        }
        Command::Whiteness { input, max_lag, replicates, level, output } => {
            let table = cmd_whiteness(&input.load()?, *max_lag, *replicates, *level, g.seed)?;
            emit(output.as_deref(), &table.render(g.format.unwrap_or(Format::Csv)))
        }
        Command::Simulate { n, family, c, s, nu, gamma, delta, delta_l, delta_r, output } => {
            let input = match family {
                Family::StudentT => {
                    let nu = nu.ok_or_else(|| CliError::Usage("student_t needs --nu".into()))?;
                    InputDist::student_t(*c, *s, nu)
                }
                Family::Normal => InputDist::normal(*c, *s),
                Family::Cauchy => InputDist::cauchy(*c, *s),
                Family::Exponential => InputDist::exponential(*c, *s),
            };
            let tail = match g.kind {
                TransformType::S => Tail::S { gamma: *gamma },
                TransformType::H => Tail::H { delta: *delta },
                TransformType::Hh => Tail::Hh {
                    delta_l: delta_l.unwrap_or(*delta),
                    delta_r: delta_r.unwrap_or(*delta),
                },
            };
            let y = sample(*n, &Theta::new(input, tail), g.variant, g.seed)?;
            emit(output.as_deref(), &series_table("y", &y).render(g.format.unwrap_or(Format::Csv)))
        }
    }
}

fn parse_lambert(s: &str) -> Result<Theta> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--lambert expects c,s,nu,gamma, got '{s}'")))?;
    if v.len() != 4 {
        return Err(CliError::Usage(format!("--lambert expects 4 numbers, got {}", v.len())));
    }
    Ok(Theta::new(InputDist::student_t(v[0], v[1], v[2]), Tail::S { gamma: v[3] }))
}

fn series_table(header: &'static str, values: &[f64]) -> Table {
    let mut t = Table::new(&[header]);
    for &v in values {
        t.push(vec![v.into()]);
    }
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub t_value: Option<f64>,
}

/// Serialized fit of either method.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub method: &'static str,
    pub variant: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub family: Option<String>,
    pub series: String,
    pub n: usize,
    pub parameters: Vec<ParamRow>,
    pub loglik: Option<f64>,
    pub iterations: Option<usize>,
    pub evals: Option<usize>,
    pub converged: bool,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl FitReport {
    fn from_igmm(fit: &IgmmFit, series: &Series, g: &GlobalOpts) -> Self {
        let names = Tau::names(fit.kind);
        FitReport {
            method: "igmm",
            variant: Variant::MeanVariance.to_string(),
            kind: fit.kind.to_string(),
            family: None,
            series: series.label.clone(),
            n: series.values.len(),
            parameters: names
                .iter()
                .zip(fit.tau.values(fit.kind))
                .map(|(n, v)| ParamRow { name: n.to_string(), estimate: v, std_error: None, t_value: None })
                .collect(),
            loglik: None,
            iterations: Some(fit.iterations),
            evals: None,
            converged: fit.converged,
            seed: g.seed,
            tol: g.tol,
            max_iter: g.max_iter,
        }
    }

    fn from_mle(fit: &MleFit, family: Family, series: &Series, g: &GlobalOpts) -> Self {
        let se = |i: usize| fit.std_errors.as_ref().map(|v| v[i]);
        let tv = |i: usize| fit.t_values.as_ref().map(|v| v[i]);
        FitReport {
            method: "mle",
            variant: fit.variant.to_string(),
            kind: fit.theta.kind().to_string(),
            family: Some(family.to_string()),
            series: series.label.clone(),
            n: series.values.len(),
            parameters: fit
                .param_names
                .iter()
                .enumerate()
                .map(|(i, n)| ParamRow { name: n.clone(), estimate: fit.estimates[i], std_error: se(i), t_value: tv(i) })
                .collect(),
            loglik: Some(fit.loglik),
            iterations: None,
            evals: Some(fit.evals),
            converged: fit.converged,
            seed: g.seed,
            tol: g.tol,
            max_iter: g.max_iter,
        }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => json_string(self),
            Format::Csv => {
                let opt = |v: Option<f64>| Cell::Num(v.unwrap_or(f64::NAN));
                let mut t = Table::new(&["parameter", "estimate", "std_error", "t_value"]);
                for p in &self.parameters {
                    t.push(vec![p.name.clone().into(), p.estimate.into(), opt(p.std_error), opt(p.t_value)]);
                }
                t.to_csv()
            }
        }
    }
}

pub fn cmd_fit(series: &Series, method: Method, family: Family, g: &GlobalOpts, output: Option<&Path>) -> Result<()> {
    let cfg = g.estimator_config();
    let report = match method {
        Method::Igmm => FitReport::from_igmm(&igmm(&series.values, g.kind, &cfg)?, series, g),
        Method::Mle => {
            let fit = mle(&series.values, family, g.variant, g.kind, MleInit::Auto, &cfg)?;
            FitReport::from_mle(&fit, family, series, g)
        }
    };
    emit(output, &report.render(g.format.unwrap_or(Format::Json)))?;
    if g.strict && !report.converged {
        return Err(CliError::NotConverged(format!("{} fit", report.method)));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianizeReport {
    #[serde(flatten)]
    pub fit: FitReport,
    /// Largest `|forward(back(y)) - y| / max(1, |y|)`.
    pub round_trip_max_error: f64,
    pub round_trip_ok: bool,
}

/// Tolerance of the forward-after-backward check of `gaussianize`.
pub const ROUND_TRIP_TOL: f64 = 1e-8;

pub fn cmd_gaussianize(series: &Series, g: &GlobalOpts, output: Option<&Path>, report: Option<&Path>) -> Result<()> {
    let cfg = g.estimator_config();
    let fit = igmm(&series.values, g.kind, &cfg)?;
    let x = fit.back_transform(&series.values)?;
    let y_again = forward_transform(&x, &fit.tau, Variant::MeanVariance)?;
    let err = series
        .values
        .iter()
        .zip(&y_again)
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max);
    let rep = GaussianizeReport {
        fit: FitReport::from_igmm(&fit, series, g),
        round_trip_max_error: err,
        round_trip_ok: err <= ROUND_TRIP_TOL,
    };
    let format = g.format.unwrap_or(Format::Csv);
    emit(output, &series_table("x", &x).render(format))?;
    if let Some(p) = report {
        emit(Some(p), &json_string(&rep))?;
    }
    if g.strict && !fit.converged {
        return Err(CliError::NotConverged("igmm fit".into()));
    }
    Ok(())
}

/// Rows `(label, side, k, alpha_hat, replicate)`; pointwise averages have
/// replicate `mean`. `alpha_hat` is the tail index, not its reciprocal.
pub fn cmd_hill(
    series: Option<&Series>,
    spec: Option<&HillStudySpec>,
    beta_data: f64,
    k_grid: Option<&[usize]>,
) -> Result<Table> {
    if series.is_none() && spec.is_none() {
        return Err(CliError::Usage("hill needs --input, --simulate or both".into()));
    }
    let mut t = Table::new(&["label", "side", "k", "alpha_hat", "replicate"]);
    let mut push = |label: &str, c: &lambertw_core::tail::HillCurve, rep: Cell| {
        for (k, a) in c.k_values.iter().zip(&c.alpha_hat) {
            t.push(vec![label.into(), c.side.to_string().into(), (*k).into(), (*a).into(), rep.clone()]);
        }
    };
    if let Some(s) = series {
        if !(beta_data >= 1.0) {
            return Err(CliError::Usage("--beta-data must be >= 1".into()));
        }
        for c in hill_curves_of(&s.values, k_grid, HillEstimator::from_beta(beta_data), 0)? {
            push("data", &c, 0usize.into());
        }
    }
    if let Some(spec) = spec {
        for cell in hill_study(spec)? {
            for c in &cell.curves {
                push(&cell.label, c, c.replicate.into());
            }
            for c in &cell.averages {
                push(&cell.label, c, "mean".into());
            }
        }
    }
    Ok(t)
}

/// Returns the replicate table `(parameter, n, replicate, estimate, converged)`
/// and the summary `(parameter, n, sd_times_sqrt_n, used, excluded)`.
pub fn cmd_bootstrap(series: &Series, g: &GlobalOpts, n_grid: &[usize], replicates: usize) -> Result<(Table, Table)> {
    let cfg = g.estimator_config();
    let trace = bootstrap_igmm(&series.values, g.kind, n_grid, replicates, &cfg)?;
    let mut rows = Table::new(&["parameter", "n", "replicate", "estimate", "converged"]);
    for (p, name) in trace.param_names.iter().enumerate() {
        for (i, &n) in trace.n_grid.iter().enumerate() {
            for b in 0..trace.replicates {
                rows.push(vec![
                    name.clone().into(),
                    n.into(),
                    b.into(),
                    trace.estimates[p][i][b].into(),
                    trace.converged[i][b].into(),
                ]);
            }
        }
    }
    let mut sd = Table::new(&["parameter", "n", "sd_times_sqrt_n", "used", "excluded"]);
    for r in sd_times_sqrt_n(&trace)? {
        sd.push(vec![r.parameter.into(), r.n.into(), r.value.into(), r.used.into(), r.excluded.into()]);
    }
    Ok((rows, sd))
}

/// Rows `(lag, rho, band_lo, band_hi, ljung_box_q, ljung_box_p)` from lag 0.
pub fn cmd_whiteness(series: &Series, max_lag: usize, replicates: usize, level: f64, seed: u64) -> Result<Table> {
    let r = acf_report(&series.values, max_lag, replicates, level, seed)?;
    let mut t = Table::new(&["lag", "rho", "band_lo", "band_hi", "ljung_box_q", "ljung_box_p"]);
    for i in 0..r.lags.len() {
        t.push(vec![
            r.lags[i].into(),
            r.rho[i].into(),
            r.band_lo[i].into(),
            r.band_hi[i].into(),
            r.ljung_box_q[i].into(),
            r.ljung_box_p[i].into(),
        ]);
    }
    Ok(t)
}
