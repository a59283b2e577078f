//! `qbound`: bounds, simulations, figure data and the self-check suite from the command line.

mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use qbound::bounds::{
    asymptotic_continuous_bound, discrete_asymptotic_exponent, multiparam_bound, qhcrk_bound,
    qk_bound, BoundKind, BoundReport, BoundValue, Diagnostics, Flavor,
};
use qbound::estimators::{
    discrete_optimal_observable, exact_bias_mse, observable_to_pvm, simulate_concurrence_estimator,
    simulate_povm_sampling, EstimatorReport, Observable,
};
use qbound::matcore::HermMatrix;
use qbound::models::file::{builtin_model, load_model};
use qbound::models::{
    DerivativeOpts, DifferenceSpec, Domain, EstimandFunction, ParamPoint, ParametricModel, StepSpec,
};
use qbound::reproduce::{
    fig1, fig2, fig3, table_discrete, DiscreteTableConfig, Fig1Config, Fig2Config, Fig3Config,
    FigureId,
};
use qbound::validation::{all_passed, run_checks, CheckOptions};

use output::{write_bound_csv, write_estimator_csv, write_table_csv, Sink};

#[derive(Parser, Debug)]
#[command(
    name = "qbound",
    version,
    about = "Lower bounds for quantum parameter estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a bound at one or more parameter points.
    Bound(BoundArgs),
    /// Evaluate an estimator exactly or by Monte Carlo.
    Simulate(SimulateArgs),
    /// Write the data behind a figure or table.
    Reproduce(ReproduceArgs),
    /// Run the self-check suite.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Builtin name (concurrence, discrete, gaussian, gaussian2, gaussian_scalar_singular,
    /// gaussian_vector_singular) or a path to a JSON model file.
    #[arg(long)]
    model: String,
    #[arg(long)]
    sigma2: Option<f64>,
    /// Fock truncation N for the Gaussian models.
    #[arg(long)]
    truncation: Option<usize>,
    /// Basis size for the discrete model.
    #[arg(long)]
    dim_cut: Option<usize>,
}

#[derive(Args, Debug)]
struct PointArgs {
    /// Parameter point, comma separated for vector models. Repeatable.
    #[arg(long, allow_hyphen_values = true)]
    theta: Vec<String>,
    /// Scalar grid `lo:step:hi`, both ends inclusive.
    #[arg(long, allow_hyphen_values = true)]
    theta_grid: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Qcr,
    Qhcrk,
    Qk,
    Multi,
    AsymptDiscrete,
    AsymptCont,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FlavorArg {
    Sld,
    Rld,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Sld => Flavor::Sld,
            FlavorArg::Rld => Flavor::Rld,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EstimandArg {
    /// g(theta) = theta (first coordinate)
    Theta,
    /// g(theta) = |theta|
    Abs,
    /// g(theta) = theta^2
    Square,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    points: PointArgs,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "sld")]
    flavor: FlavorArg,
    /// Difference step, comma separated per coordinate for vector models.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Split weight in [0, 1], comma separated per coordinate.
    #[arg(long)]
    t: Option<String>,
    /// Koike order.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_enum, default_value = "theta")]
    g: EstimandArg,
    /// Weight matrix: `identity` or rows separated by `;`, e.g. `1,0;0,2`.
    #[arg(long = "G", default_value = "identity")]
    weight: String,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EstimatorArg {
    /// Two-step estimator of |theta| on the concurrence family.
    Concurrence,
    /// Block observable T on the discrete family, sample mean.
    DiscreteT,
    /// Diagonal observable given by --diag on any model, sample mean.
    Observable,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    estimator: EstimatorArg,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long)]
    dim_cut: Option<usize>,
    #[command(flatten)]
    points: PointArgs,
    /// Copies per trial.
    #[arg(long, default_value_t = 1)]
    n: u64,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact single-copy bias and MSE instead of sampling.
    #[arg(long)]
    exact: bool,
    /// Diagonal of the observable for `--estimator observable`.
    #[arg(long, allow_hyphen_values = true)]
    diag: Option<String>,
    #[arg(long, value_enum, default_value = "theta")]
    g: EstimandArg,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// fig1, fig2, fig3 or table_discrete.
    figure: String,
    /// Overrides sigma2 for fig1 and fig3.
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Skip Monte Carlo items.
    #[arg(long)]
    quick: bool,
    /// Additional model file that must load cleanly. Repeatable.
    #[arg(long)]
    extra_model: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// A failure with its machine-readable tag.
#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl From<qbound::Error> for CliError {
    fn from(e: qbound::Error) -> Self {
        CliError {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            kind: "io",
            message: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError {
        kind: "usage",
        message: msg.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match configure_threads().and_then(|_| run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind, e.message.replace('\n', " "));
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("QBOUND_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        usage(format!(
            "QBOUND_THREADS = '{raw}' is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

fn run(cmd: Command) -> CliResult<ExitCode> {
    match cmd {
        Command::Bound(a) => cmd_bound(a).map(|_| ExitCode::SUCCESS),
        Command::Simulate(a) => cmd_simulate(a).map(|_| ExitCode::SUCCESS),
        Command::Reproduce(a) => cmd_reproduce(a).map(|_| ExitCode::SUCCESS),
        Command::Check(a) => cmd_check(a),
    }
}

fn parse_list(raw: &str, what: &str) -> CliResult<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(format!("{what}: '{s}' is not a finite number")))
        })
        .collect()
}

fn resolve_model(
    name: &str,
    sigma2: Option<f64>,
    truncation: Option<usize>,
    dim_cut: Option<usize>,
) -> CliResult<ParametricModel> {
    let builtin = match name {
        "gaussian2" => Some("gaussian"),
        "gaussian-scalar-singular" => Some("gaussian_scalar_singular"),
        "gaussian-vector-singular" => Some("gaussian_vector_singular"),
        n if qbound::models::file::BUILTIN_NAMES.contains(&n) => Some(n),
        _ => None,
    };
    match builtin {
        Some(b) => {
            let mut params = BTreeMap::new();
            if let Some(s) = sigma2 {
                params.insert("sigma2".to_string(), s);
            }
            if let Some(n) = truncation {
                params.insert("truncation".to_string(), n as f64);
            }
            if let Some(d) = dim_cut {
                params.insert("dim_cut".to_string(), d as f64);
            }
            Ok(builtin_model(b, &params)?)
        }
        None if Path::new(name).exists() || name.ends_with(".json") => {
            Ok(load_model(Path::new(name))?)
        }
        None => Err(qbound::Error::ModelFile(format!("unknown builtin model '{name}'")).into()),
    }
}

/// `lo:step:hi` with both ends included (up to rounding).
fn parse_grid(raw: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("theta grid '{raw}' is not lo:step:hi")));
    }
    let v = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("theta grid '{raw}' is not numeric")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let (lo, step, hi) = (v[0], v[1], v[2]);
    if step.is_nan() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() {
        return Err(usage("theta grid needs finite ends and a positive step"));
    }
    if hi < lo {
        return Ok(Vec::new());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

fn resolve_points(args: &PointArgs, model: &ParametricModel) -> CliResult<Vec<ParamPoint>> {
    let m = model.param_dim();
    let mut points = Vec::new();
    for raw in &args.theta {
        let v = parse_list(raw, "theta")?;
        if v.len() != m {
            return Err(usage(format!(
                "theta '{raw}' has {} coordinates, model has {m}",
                v.len()
            )));
        }
        points.push(ParamPoint(v));
    }
    if let Some(raw) = &args.theta_grid {
        if m != 1 {
            return Err(usage("theta grid is only available for scalar models"));
        }
        points.extend(parse_grid(raw)?.into_iter().map(ParamPoint::scalar));
        if points.is_empty() {
            return Err(usage(format!("theta grid '{raw}' is empty")));
        }
    }
    if args.theta.is_empty() && args.theta_grid.is_none() {
        match model.domain() {
            Domain::Box(_) => points.push(ParamPoint(vec![0.0; m])),
            _ => return Err(usage("this model needs an explicit --theta")),
        }
    }
    Ok(points)
}

fn estimand(g: EstimandArg) -> EstimandFunction {
    match g {
        EstimandArg::Theta => EstimandFunction::coordinate(0),
        EstimandArg::Abs => EstimandFunction::abs(),
        EstimandArg::Square => EstimandFunction::new("theta^2", |p| p.0[0] * p.0[0]),
    }
}

fn parse_weight(raw: &str, m: usize) -> CliResult<DMatrix<f64>> {
    if raw == "identity" {
        return Ok(DMatrix::identity(m, m));
    }
    let rows = raw
        .split(';')
        .map(|r| parse_list(r, "G"))
        .collect::<CliResult<Vec<_>>>()?;
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(usage(format!("weight matrix must be {m}x{m}")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

/// Difference spec from `--delta`/`--t`, broadcasting a single value to all coordinates.
fn difference_spec(delta: &str, t: Option<&str>, m: usize) -> CliResult<DifferenceSpec> {
    let broadcast = |v: Vec<f64>, what: &str| -> CliResult<Vec<f64>> {
        match v.len() {
            1 => Ok(vec![v[0]; m]),
            n if n == m => Ok(v),
            n => Err(usage(format!(
                "{what} has {n} entries, model has {m} coordinates"
            ))),
        }
    };
    let d = broadcast(parse_list(delta, "delta")?, "delta")?;
    let t = broadcast(parse_list(t.unwrap_or("1"), "t")?, "t")?;
    Ok(DifferenceSpec::new(d, t)?)
}

fn single_f64(raw: &str, what: &str) -> CliResult<f64> {
    match parse_list(raw, what)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(usage(format!("{what} must be a single number here"))),
    }
}

fn bound_at(a: &BoundArgs, model: &ParametricModel, p: &ParamPoint) -> CliResult<BoundReport> {
    let flavor: Flavor = a.flavor.into();
    let g = estimand(a.g);
    let m = model.param_dim();
    let need_delta = || {
        a.delta
            .as_deref()
            .ok_or_else(|| usage("this bound needs --delta"))
    };
    let report = match a.kind {
        KindArg::Qcr => qhcrk_bound(model, p, &g, &StepSpec::derivative(), flavor)?,
        KindArg::Qhcrk => {
            let spec = difference_spec(need_delta()?, a.t.as_deref(), m)?;
            qhcrk_bound(model, p, &g, &StepSpec::Difference(spec), flavor)?
        }
        KindArg::Qk => {
            let r = a.r.ok_or_else(|| usage("qk needs --r"))?;
            qk_bound(model, p, &g, single_f64(need_delta()?, "delta")?, r, flavor)?
        }
        KindArg::Multi => {
            let step = match &a.delta {
                Some(d) => StepSpec::Difference(difference_spec(d, a.t.as_deref(), m)?),
                None => StepSpec::derivative(),
            };
            multiparam_bound(model, p, &parse_weight(&a.weight, m)?, &step, flavor)?
        }
        KindArg::AsymptDiscrete => {
            let delta = single_f64(need_delta()?, "delta")?;
            let rate = discrete_asymptotic_exponent(model, p.0[0], delta)?;
            BoundReport {
                kind: BoundKind::AsymptDiscrete,
                flavor: Some(Flavor::Rld),
                value: BoundValue::Finite(rate),
                theta: p.0.clone(),
                step: Some(StepSpec::Difference(DifferenceSpec::scalar(delta, 1.0)?)),
                order: None,
                weight: None,
                diagnostics: Diagnostics::default(),
            }
        }
        KindArg::AsymptCont => {
            let t = single_f64(a.t.as_deref().unwrap_or("1"), "t")?;
            asymptotic_continuous_bound(model, p, &g, t, &DerivativeOpts::default())?
        }
    };
    Ok(report)
}

fn cmd_bound(a: BoundArgs) -> CliResult<()> {
    let model = resolve_model(
        &a.model.model,
        a.model.sigma2,
        a.model.truncation,
        a.model.dim_cut,
    )?;
    let points = resolve_points(&a.points, &model)?;
    let reports = points
        .iter()
        .map(|p| bound_at(&a, &model, p))
        .collect::<CliResult<Vec<_>>>()?;
    let mut sink = Sink::open(a.output.as_deref())?;
    match a.format {
        Format::Json if reports.len() == 1 => sink.write_json(&reports[0])?,
        Format::Json => sink.write_json(&reports)?,
        Format::Csv => write_bound_csv(&mut sink, &reports, model.param_dim())?,
    }
    sink.finish()
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    if !a.exact && a.trials.is_none() {
        return Err(usage("simulate needs --trials (or --exact)"));
    }
    let model = match (a.estimator, &a.model) {
        (EstimatorArg::Concurrence, _) => resolve_model("concurrence", None, None, None)?,
        (EstimatorArg::DiscreteT, _) => {
            resolve_model("discrete", None, None, Some(a.dim_cut.unwrap_or(24)))?
        }
        (EstimatorArg::Observable, Some(name)) => {
            resolve_model(name, a.sigma2, a.truncation, a.dim_cut)?
        }
        (EstimatorArg::Observable, None) => {
            return Err(usage("--estimator observable needs --model"))
        }
    };
    let points = resolve_points(&a.points, &model)?;
    let pvm = match a.estimator {
        EstimatorArg::Concurrence => None,
        EstimatorArg::DiscreteT => Some(observable_to_pvm(&discrete_optimal_observable(
            model.dim(),
        )?)),
        EstimatorArg::Observable => {
            let diag = parse_list(
                a.diag
                    .as_deref()
                    .ok_or_else(|| usage("--estimator observable needs --diag"))?,
                "diag",
            )?;
            if diag.len() != model.dim() {
                return Err(usage(format!(
                    "--diag has {} entries, model dimension is {}",
                    diag.len(),
                    model.dim()
                )));
            }
            Some(observable_to_pvm(&Observable::new(
                HermMatrix::from_diagonal(&diag),
            )))
        }
    };
    let g = match a.estimator {
        EstimatorArg::Concurrence => EstimandFunction::abs(),
        _ => estimand(a.g),
    };
    let reports = points
        .iter()
        .map(|p| -> CliResult<EstimatorReport> {
            Ok(match (&pvm, a.exact) {
                (None, true) => return Err(usage("the two-step estimator has no exact mode")),
                (None, false) => {
                    simulate_concurrence_estimator(p.0[0], a.n, a.trials.unwrap_or(0), a.seed)?
                }
                (Some(pvm), true) => exact_bias_mse(&model, p, &g, pvm)?,
                (Some(pvm), false) => {
                    simulate_povm_sampling(&model, p, &g, pvm, a.n, a.trials.unwrap_or(0), a.seed)?
                }
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut sink = Sink::open(a.output.as_deref())?;
    match a.format {
        Format::Json if reports.len() == 1 => sink.write_json(&reports[0])?,
        Format::Json => sink.write_json(&reports)?,
        Format::Csv => write_estimator_csv(&mut sink, &reports)?,
    }
    sink.finish()
}

fn cmd_reproduce(a: ReproduceArgs) -> CliResult<()> {
    let id: FigureId = a.figure.parse()?;
    let table = match id {
        FigureId::Fig1 => fig1(&Fig1Config {
            sigma2: a.sigma2.unwrap_or(1.0),
            ..Default::default()
        })?,
        FigureId::Fig2 => fig2(&Fig2Config::default())?,
        FigureId::Fig3 => fig3(&Fig3Config {
            sigma2: a.sigma2.unwrap_or(1.0),
            ..Default::default()
        })?,
        FigureId::TableDiscrete => table_discrete(&DiscreteTableConfig::default())?,
    };
    let mut sink = Sink::open(a.output.as_deref())?;
    match a.format {
        Format::Json => sink.write_json(&table)?,
        Format::Csv => write_table_csv(&mut sink, &table, &a.figure)?,
    }
    sink.finish()
}

fn cmd_check(a: CheckArgs) -> CliResult<ExitCode> {
    let results = run_checks(&CheckOptions {
        quick: a.quick,
        extra_models: a.extra_model,
        seed: a.seed,
    });
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.id.as_str())
        .collect();
    if failed.is_empty() {
        println!("all {} checks passed", results.len());
    } else {
        println!(
            "{} of {} checks failed: {}",
            failed.len(),
            results.len(),
            failed.join(", ")
        );
    }
    if let Some(path) = a.json {
        let mut sink = Sink::open(Some(&path))?;
        sink.write_json(&results)?;
        sink.finish()?;
    }
    Ok(if all_passed(&results) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
