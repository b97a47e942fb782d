//! The `georel` command line: `fit`, `predict`, `evaluate`, `simulate` and
//! `compare`.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 numerical condition (a fit
//! that did not converge, an objective above the current intensity).

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::comparison::{fit_comparison, ModelKind, ModelSpec};
use crate::data::{read_dataset, DataFormat, FailureDataset, TimeConversionProfile, TimeUnit};
use crate::error::{Error, Result};
use crate::estimation;
use crate::evaluation::{
    aggregate_median, default_cut_points, number_of_failures_eval, outlier_report, ValidityCurve,
    DEFAULT_BINS, DEFAULT_CUTS,
};
use crate::geometric::GeometricModelParams;
use crate::optim::OptimizerConfig;
use crate::simulation::{simulate, SimulationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

const DELTA_T_NOTE: &str = "delta_t_raw = (ln objective - ln current) / sum(p - p^2) is negative whenever \
the objective lies below the current intensity; delta_t_abs is its magnitude, the additional time needed";

#[derive(Debug, Parser)]
#[command(
    name = "georel",
    version,
    about = "Software reliability growth modelling with geometric fault rates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a failure history and print the parameters as JSON.
    Fit(FitArgs),
    /// Print current mean, intensity and the time needed to reach an intensity objective.
    Predict(PredictArgs),
    /// Number-of-failures predictive validity over one or more datasets.
    Evaluate(EvaluateArgs),
    /// Write simulated failure histories from the geometric model.
    Simulate(SimulateArgs),
    /// Fit every model to one dataset and print the results keyed by model name.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Layout of the input CSV.
    #[arg(long, value_enum, default_value = "cumulative")]
    #[serde(serialize_with = "serialize_format")]
    pub format: DataFormat,
    /// Time unit of the input data.
    #[arg(long, value_enum, default_value = "incident")]
    pub unit: TimeUnit,
}

fn serialize_format<S: serde::Serializer>(
    f: &DataFormat,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match f {
        DataFormat::CumulativeCsv => "cumulative",
        DataFormat::TbfCsv => "tbf",
    })
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Stop once the simplex objective spread falls to this value.
    #[arg(long, default_value_t = OptimizerConfig::default().tolerance)]
    pub tolerance: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().max_iterations)]
    pub max_iterations: usize,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub data: InputArgs,
    /// Model to fit.
    #[arg(long, default_value = "geometric")]
    pub model: ModelKind,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub data: InputArgs,
    /// JSON file with `p1`, `d` and optionally `truncation` (the output of `fit` works).
    #[arg(long, conflicts_with_all = ["p1", "d"])]
    pub params: Option<PathBuf>,
    #[arg(long, requires = "d")]
    pub p1: Option<f64>,
    #[arg(long, requires = "p1")]
    pub d: Option<f64>,
    /// Number of faults modelled; defaults to the 1e-6 tail cut.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Failure intensity objective, failures per unit time.
    #[arg(long)]
    pub objective: f64,
    /// JSON time-conversion profile for calendar-day output.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub data: InputArgs,
    /// Comma-separated model names, or `all`.
    #[arg(long, default_value = "geometric")]
    pub models: String,
    /// Number of cut points, evenly spaced from 0.2 t_q to t_q.
    #[arg(long, default_value_t = DEFAULT_CUTS)]
    pub cuts: usize,
    /// Normalised-time cells used for median aggregation.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Report curves whose absolute relative error exceeds this.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p1: f64,
    #[arg(long)]
    pub d: f64,
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Last incident observed.
    #[arg(long)]
    pub horizon: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub data: InputArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config: Value,
    pub tool_version: String,
    pub seed: Option<u64>,
}

impl RunManifest {
    fn new(command: &str, inputs: &[PathBuf], config: Value, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
        }
    }
}

/// A failure and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }

    fn numerical(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::input(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e)
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(sink, "{rendered}");
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(
    command: Command,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<i32, Failure> {
    match command {
        Command::Fit(a) => cmd_fit(&a, out, err),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out, err),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
    }
}

fn load(path: &Path, data: &InputArgs) -> std::result::Result<FailureDataset, Failure> {
    read_dataset(path, data.format)
        .map(|ds| ds.with_unit(data.unit))
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let file = File::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(file).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> std::result::Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(Failure::input)?;
    writeln!(out)?;
    Ok(())
}

fn write_json_file(path: &Path, value: &impl Serialize) -> std::result::Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(Failure::input)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_fit(
    a: &FitArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<i32, Failure> {
    let ds = load(&a.input, &a.data)?;
    let config = a.optimizer.config();
    let converged = if a.model == ModelKind::Geometric {
        let fit = estimation::fit(&ds, &config)?;
        print_json(out, &fit.report())?;
        fit.converged
    } else {
        let fit = fit_comparison(a.model, &ds, &config)?;
        print_json(out, &fit)?;
        fit.converged
    };
    if converged {
        Ok(EXIT_OK)
    } else {
        writeln!(
            err,
            "warning: optimizer stopped after {} iterations without converging",
            config.max_iterations
        )?;
        Ok(EXIT_NUMERICAL)
    }
}

#[derive(Deserialize)]
struct ParamsFile {
    p1: f64,
    d: f64,
    truncation: Option<usize>,
}

fn build_params(p1: f64, d: f64, truncation: Option<usize>) -> Result<GeometricModelParams> {
    match truncation {
        Some(n) => GeometricModelParams::new(p1, d, n),
        None => GeometricModelParams::with_default_truncation(p1, d),
    }
}

fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let ds = load(&a.input, &a.data)?;
    if !(a.objective > 0.0 && a.objective.is_finite()) {
        return Err(Failure::input(format!(
            "objective must be positive, got {}",
            a.objective
        )));
    }
    let (params, source) = match (&a.params, a.p1, a.d) {
        (Some(path), _, _) => {
            let file: ParamsFile = read_json(path)?;
            (
                build_params(file.p1, file.d, a.truncation.or(file.truncation))?,
                "file",
            )
        }
        (None, Some(p1), Some(d)) => (build_params(p1, d, a.truncation)?, "flags"),
        _ => {
            let fit = estimation::fit(&ds, &a.optimizer.config())?;
            if !fit.converged {
                return Err(Failure::numerical("fit on the input did not converge"));
            }
            (fit.params, "fitted")
        }
    };
    let profile: Option<TimeConversionProfile> = match &a.profile {
        Some(path) => Some(read_json(path)?),
        None => None,
    };

    let now = ds.final_time();
    let lambda = params.failure_intensity(now);
    let delta = match params.additional_time(lambda, a.objective) {
        Ok(d) => d,
        Err(Error::OutOfRange(msg)) => {
            return Err(Failure::numerical(format!(
                "{msg}; the objective is already met at time {now}"
            )))
        }
        Err(e) => return Err(Failure::numerical(e)),
    };
    let mut report = json!({
        "params": { "p1": params.p1(), "d": params.d(), "truncation": params.truncation(), "source": source },
        "time": now,
        "unit": ds.unit(),
        "observed_failures": ds.final_count(),
        "mean_failures": params.mean_failures(now),
        "failure_intensity": lambda,
        "objective": a.objective,
        "delta_t_raw": delta.raw,
        "delta_t_abs": delta.abs(),
        "delta_t_note": DELTA_T_NOTE,
    });
    if let Some(profile) = profile {
        report["calendar"] = json!({
            "profile": profile,
            "delta_t_days": profile.convert(delta.abs(), ds.unit(), TimeUnit::CalendarDay),
            "time_days": profile.convert(now, ds.unit(), TimeUnit::CalendarDay),
        });
    }
    print_json(out, &report)?;
    Ok(EXIT_OK)
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Serialize)]
struct CurveDiagnostics<'a> {
    #[serde(flatten)]
    curve: &'a ValidityCurve,
    all_converged: bool,
}

fn cmd_evaluate(
    a: &EvaluateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<i32, Failure> {
    let kinds = ModelKind::parse_list(&a.models)?;
    if a.cuts == 0 {
        return Err(Failure::input("--cuts must be at least 1"));
    }
    if a.bins == 0 {
        return Err(Failure::input("--bins must be at least 1"));
    }
    if let Some(t) = a.threshold {
        if !(t > 0.0) {
            return Err(Failure::input(format!(
                "--threshold must be positive, got {t}"
            )));
        }
    }
    let config = a.optimizer.config();
    config.validate()?;

    let mut datasets = Vec::new();
    let mut labels = BTreeSet::new();
    for path in &a.inputs {
        let ds = load(path, &a.data)?;
        let label = file_safe(ds.label());
        if !labels.insert(label.clone()) {
            return Err(Failure::input(format!(
                "two inputs share the dataset name '{label}'"
            )));
        }
        datasets.push(ds.with_label(label));
    }

    fs::create_dir_all(&a.out)?;
    let mut written = Vec::new();
    let mut curves_json = Vec::new();
    let mut aggregates = Vec::new();
    let mut all_curves = Vec::new();
    for &kind in &kinds {
        let spec = ModelSpec {
            kind,
            config: config.clone(),
        };
        let mut curves = Vec::new();
        for ds in &datasets {
            let curve =
                number_of_failures_eval(&spec, ds, &default_cut_points(ds.final_time(), a.cuts))?;
            for gap in &curve.gaps {
                writeln!(
                    err,
                    "note: {} on {} at t_e = {}: no prediction ({})",
                    kind,
                    ds.label(),
                    gap.cut_time,
                    gap.reason
                )?;
            }
            let name = format!("curve_{}_{}.csv", kind, ds.label());
            curve.write_csv(BufWriter::new(File::create(a.out.join(&name))?))?;
            written.push(name);
            curves.push(curve);
        }
        let with_points: Vec<ValidityCurve> = curves
            .iter()
            .filter(|c| !c.points.is_empty())
            .cloned()
            .collect();
        if with_points.is_empty() {
            writeln!(
                err,
                "note: {kind} produced no predictions; no aggregate written"
            )?;
        } else {
            let agg = aggregate_median(&with_points, a.bins)?;
            let name = format!("aggregate_{kind}.csv");
            agg.write_csv(BufWriter::new(File::create(a.out.join(&name))?))?;
            written.push(name);
            aggregates.push(agg);
        }
        all_curves.extend(curves);
    }
    for curve in &all_curves {
        curves_json.push(CurveDiagnostics {
            curve,
            all_converged: curve.points.iter().all(|p| p.converged),
        });
    }
    let outliers = match a.threshold {
        Some(t) => Some(outlier_report(&all_curves, t)?),
        None => None,
    };
    write_json_file(
        &a.out.join("evaluation.json"),
        &json!({ "curves": curves_json, "aggregates": aggregates, "outliers": outliers }),
    )?;
    written.push("evaluation.json".into());

    let manifest = RunManifest::new(
        "evaluate",
        &a.inputs,
        json!({
            "data": a.data,
            "models": kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
            "cuts": a.cuts,
            "first_cut_fraction": crate::evaluation::DEFAULT_FIRST_CUT,
            "bins": a.bins,
            "threshold": a.threshold,
            "optimizer": config,
        }),
        None,
    );
    write_json_file(&a.out.join("manifest.json"), &manifest)?;
    written.push("manifest.json".into());

    print_json(out, &json!({ "written": written, "outliers": outliers }))?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let config = SimulationConfig {
        params: build_params(a.p1, a.d, a.truncation)?,
        horizon: a.horizon,
        seed: a.seed,
        replications: a.replications,
    };
    let histories = simulate(&config)?;
    fs::create_dir_all(&a.out)?;
    let width = (a.replications.saturating_sub(1)).to_string().len().max(3);
    let mut written = Vec::new();
    let mut counts = BTreeMap::new();
    for h in &histories {
        let name = format!("replication_{:0width$}.csv", h.replication);
        h.write_cumulative_csv(BufWriter::new(File::create(a.out.join(&name))?))?;
        counts.insert(name.clone(), h.failure_count());
        written.push(name);
    }
    let manifest = RunManifest::new(
        "simulate",
        &[],
        serde_json::to_value(config).map_err(Failure::input)?,
        Some(a.seed),
    );
    write_json_file(&a.out.join("manifest.json"), &manifest)?;
    written.push("manifest.json".into());
    print_json(
        out,
        &json!({ "written": written, "failure_counts": counts }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let ds = load(&a.input, &a.data)?;
    let config = a.optimizer.config();
    config.validate()?;
    let mut report = serde_json::Map::new();
    for kind in ModelKind::ALL {
        let entry = match fit_comparison(kind, &ds, &config) {
            Ok(fit) => json!({
                "parameters": fit.model,
                "objective": fit.objective,
                "converged": fit.converged,
                "iterations": fit.iterations,
                "predicted_final_count": crate::comparison::ReliabilityModel::predict_mean(&fit.model, ds.final_time()),
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        report.insert(kind.name().to_string(), entry);
    }
    print_json(
        out,
        &json!({ "dataset": ds.label(), "observed_failures": ds.final_count(), "models": report }),
    )?;
    Ok(EXIT_OK)
}
