//! `causalis` command line. Exit codes: 0 success, 1 user error (one line on
//! stderr), 2 internal error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use causalis::benchmark::{Axis, AxisValue, BenchmarkConfig, BenchmarkReport, DataKind};
use causalis::data::load_csv;
use causalis::datagen::{generate, GenerateOptions, InterventionValue, SemSpec};
use causalis::inference::PredictionModel;
use causalis::rca::RcaMode;
use causalis::{CausalGraph, PriorKnowledge, TabularDataset};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::ops::{self, DiscoverParams, InferRequest, RcaParams};
use crate::service::{self, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "causalis", version, about = "Causal discovery, effect estimation and root cause analysis")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "CAUSALIS_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample data from a structural equation model.
    Generate(GenerateArgs),
    /// Learn a causal graph (or Markov blanket) from data.
    Discover(DiscoverArgs),
    /// Estimate treatment effects or a counterfactual along a causal graph.
    Infer(InferArgs),
    /// Find root causes of an anomaly or a distribution shift.
    Rca(RcaArgs),
    /// Sweep discovery algorithms along a difficulty axis.
    Benchmark(BenchmarkArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// SEM specification (JSON).
    #[arg(long)]
    pub sem: PathBuf,
    /// Number of samples (time steps for time series).
    #[arg(long = "T", visible_alias = "samples")]
    pub samples: usize,
    /// `VAR=value`, repeatable.
    #[arg(long = "intervene")]
    pub interventions: Vec<String>,
    /// Quantile-bin every variable into this many states.
    #[arg(long)]
    pub discrete: Option<usize>,
    /// Also write the true graph here.
    #[arg(long)]
    pub graph_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    #[arg(long)]
    pub algo: String,
    #[arg(long)]
    pub data: PathBuf,
    /// Treat the data as a time series with this maximum lag.
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_cond: Option<usize>,
    /// No limit on conditioning set size.
    #[arg(long)]
    pub unbounded: bool,
    /// partial-correlation, pearson, log-likelihood, mod-log-likelihood, freeman-tukey or neyman.
    #[arg(long)]
    pub ci_test: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    /// Comma-separated GES phases.
    #[arg(long, value_delimiter = ',')]
    pub phases: Vec<String>,
    /// Prior knowledge (JSON).
    #[arg(long)]
    pub pk: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    /// `VAR=treat:control`, repeatable.
    #[arg(long = "treat")]
    pub treatments: Vec<String>,
    /// `VAR=value`, repeatable; gives a conditional effect.
    #[arg(long = "cond")]
    pub conditions: Vec<String>,
    #[arg(long, value_enum, default_value_t = Model::Linear)]
    pub model: Model,
    #[arg(long, value_enum, default_value_t = Model::Linear)]
    pub cond_model: Model,
    /// `VAR=value`, repeatable; the observed sample for a counterfactual.
    #[arg(long = "sample")]
    pub sample: Vec<String>,
    /// `VAR=value`, repeatable; the counterfactual intervention.
    #[arg(long = "set")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Linear,
    Nonlinear,
}

impl From<Model> for PredictionModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Linear => PredictionModel::Linear,
            Model::Nonlinear => PredictionModel::Nonlinear,
        }
    }
}

#[derive(Debug, Args)]
pub struct RcaArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub data: PathBuf,
    /// Context (time series) or domain index (tabular) column.
    #[arg(long)]
    pub context: String,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long, default_value_t = 4)]
    pub max_cond: usize,
    #[arg(long)]
    pub return_graph: bool,
    #[arg(long)]
    pub pk: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Timeseries,
    Tabular,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Full benchmark configuration (JSON); other flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub algos: Vec<String>,
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "causalis-store")]
    pub store: PathBuf,
    /// Directory of the built web client.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Jobs that may run at once.
    #[arg(long, default_value_t = 1)]
    pub job_slots: usize,
}

#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl From<causalis::Error> for CliError {
    fn from(e: causalis::Error) -> Self {
        CliError::User(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn user(msg: impl Into<String>) -> CliError {
    CliError::User(msg.into())
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| user(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| user(format!("invalid JSON in {}: {e}", path.display())))
}

fn read_data(path: &Path) -> CliResult<TabularDataset> {
    load_csv(path, true, None).map_err(|e| match e {
        causalis::Error::Io(io) => user(format!("cannot read {}: {io}", path.display())),
        other => user(format!("{}: {other}", path.display())),
    })
}

fn read_prior(path: &Option<PathBuf>) -> CliResult<PriorKnowledge> {
    path.as_deref().map_or(Ok(PriorKnowledge::default()), read_json)
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| user(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn assignments(items: &[String]) -> CliResult<BTreeMap<String, f64>> {
    items.iter().map(|s| ops::parse_assignment(s).map_err(CliError::from)).collect()
}

fn edges_csv(graph: &CausalGraph) -> String {
    ops::edge_table(graph).replace('\t', ",")
}

impl Cli {
    fn pool(&self) -> causalis::WorkerPool {
        ops::shared_pool(self.workers)
    }

    fn execute(&self) -> CliResult {
        match &self.command {
            Command::Generate(a) => self.generate(a),
            Command::Discover(a) => self.discover(a),
            Command::Infer(a) => self.infer(a),
            Command::Rca(a) => self.rca(a),
            Command::Benchmark(a) => self.benchmark(a),
            Command::Serve(a) => self.serve(a),
        }
    }

    fn generate(&self, a: &GenerateArgs) -> CliResult {
        let sem: SemSpec = read_json(&a.sem)?;
        let mut opts = GenerateOptions::new(a.samples, self.seed.unwrap_or(0));
        for (var, value) in assignments(&a.interventions)? {
            opts = opts.intervene(&var, InterventionValue::Constant(value));
        }
        if let Some(k) = a.discrete {
            opts = opts.discrete(k);
        }
        let g = generate(&sem, &opts)?;
        if let Some(path) = &a.graph_out {
            fs::write(path, g.graph.to_json_pretty()).map_err(|e| user(format!("cannot write {}: {e}", path.display())))?;
        }
        let table = g.data.to_tabular();
        let text = match self.format {
            Format::Csv => {
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                String::from_utf8(buf).map_err(|e| CliError::Internal(e.to_string()))?
            }
            Format::Json => {
                // a path ending in .csv always gets CSV
                if self.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv")) {
                    let mut buf = Vec::new();
                    table.write_csv(&mut buf)?;
                    String::from_utf8(buf).map_err(|e| CliError::Internal(e.to_string()))?
                } else {
                    let columns: BTreeMap<&str, &[f64]> = table
                        .var_names()
                        .iter()
                        .enumerate()
                        .map(|(j, n)| (n.as_str(), table.column(j)))
                        .collect();
                    pretty(&serde_json::json!({ "columns": columns, "graph": g.graph }))
                }
            }
        };
        emit(&self.out, &text)
    }

    fn discover(&self, a: &DiscoverArgs) -> CliResult {
        let params = DiscoverParams {
            pvalue_threshold: a.threshold,
            max_condition_set_size: a.max_cond,
            unbounded_condition_set: a.unbounded.then_some(true),
            max_lag: a.max_lag,
            ci_test: a.ci_test.clone(),
            target: a.target.clone(),
            seed: self.seed.filter(|_| matches!(a.algo.as_str(), "lingam" | "varlingam")),
            phases: (!a.phases.is_empty()).then(|| a.phases.clone()),
        };
        params.check(&a.algo)?;
        let pk = read_prior(&a.pk)?;
        ops::check_prior(&pk)?;
        let data = read_data(&a.data)?;
        let result = ops::discover(&data, &a.algo, &params, &pk, &self.pool())?;
        let graph: Option<CausalGraph> = result.get("graph").map(|g| serde_json::from_value(g.clone())).transpose().map_err(|e| CliError::Internal(e.to_string()))?;
        let text = match (self.format, &graph, &self.out) {
            (Format::Csv, Some(g), _) => edges_csv(g),
            (Format::Json, Some(g), None) => ops::edge_table(g),
            _ => pretty(&result),
        };
        emit(&self.out, &text)
    }

    fn infer(&self, a: &InferArgs) -> CliResult {
        let graph = CausalGraph::from_json(&read_text(&a.graph)?)?;
        let data = read_data(&a.data)?;
        let result = if !a.set.is_empty() {
            ops::counterfactual(
                &data,
                &graph,
                &a.target,
                &assignments(&a.sample)?,
                &assignments(&a.set)?,
                a.model.into(),
                &self.pool(),
            )?
        } else {
            if a.treatments.is_empty() {
                return Err(user("infer needs at least one --treat VAR=treat:control (or --set for a counterfactual)"));
            }
            let request = InferRequest {
                graph,
                target: a.target.clone(),
                treatments: a.treatments.iter().map(|t| ops::parse_treatment(t)).collect::<Result<_, _>>()?,
                conditions: assignments(&a.conditions)?,
                prediction_model: a.model.into(),
                condition_prediction_model: a.cond_model.into(),
            };
            ops::infer(&data, &request, &self.pool())?
        };
        if let Some(warnings) = result.get("warnings").and_then(Value::as_array) {
            for w in warnings {
                eprintln!("warning: {}", w.as_str().unwrap_or_default());
            }
        }
        emit(&self.out, &pretty(&result))
    }

    fn rca(&self, a: &RcaArgs) -> CliResult {
        let params = RcaParams {
            pvalue_threshold: a.threshold,
            max_condition_set_size: Some(a.max_cond),
            return_graph: a.return_graph,
            prior_knowledge: read_prior(&a.pk)?,
        };
        let mode = match a.mode {
            Mode::Timeseries => RcaMode::TimeSeries,
            Mode::Tabular => RcaMode::Tabular,
        };
        let data = read_data(&a.data)?;
        let result = ops::run_rca(&data, mode, &a.context, &params, &self.pool())?;
        emit(&self.out, &pretty(&result))
    }

    fn benchmark(&self, a: &BenchmarkArgs) -> CliResult {
        let mut config = match &a.config {
            Some(path) => read_json::<BenchmarkConfig>(path)?,
            None => BenchmarkConfig::new(DataKind::Continuous, Axis::Samples, Vec::new(), &[]),
        };
        if let Some(k) = &a.kind {
            config.kind = k.parse()?;
        }
        if let Some(axis) = &a.axis {
            config.axis = axis.parse()?;
        }
        if !a.values.is_empty() {
            config.values = a
                .values
                .iter()
                .map(|v| v.parse().map(AxisValue::Number).unwrap_or_else(|_| AxisValue::Name(v.clone())))
                .collect();
        }
        if !a.algos.is_empty() {
            config.algorithms = a.algos.clone();
        }
        if let Some(s) = a.seeds {
            config.seeds = s;
        }
        if let Some(s) = self.seed {
            config.first_seed = s;
        }
        if config.algorithms.is_empty() {
            return Err(user("benchmark needs --algos"));
        }
        if a.config.is_none() && a.axis.is_none() {
            return Err(user("benchmark needs --axis (or --config)"));
        }
        config.validate()?;
        let report = ops::benchmark(&config, &self.pool())?;
        let text = match self.format {
            Format::Json => pretty(&report),
            Format::Csv => {
                let report: BenchmarkReport = serde_json::from_value(report).map_err(|e| CliError::Internal(e.to_string()))?;
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                String::from_utf8(buf).map_err(|e| CliError::Internal(e.to_string()))?
            }
        };
        emit(&self.out, &text)
    }

    fn serve(&self, a: &ServeArgs) -> CliResult {
        let addr: SocketAddr = format!("{}:{}", a.host, a.port)
            .parse()
            .map_err(|e| user(format!("invalid address {}:{}: {e}", a.host, a.port)))?;
        let config = ServiceConfig {
            store_dir: a.store.clone(),
            static_dir: a.static_dir.clone(),
            workers: self.workers,
            job_slots: a.job_slots,
        };
        let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
        runtime
            .block_on(service::serve(config, addr))
            .map_err(|e| user(format!("service failed: {e}")))
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 1 } else { 0 };
            }
            let text = e.to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{line}");
            return 1;
        }
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| cli.execute()));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(CliError::User(msg))) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            1
        }
        Ok(Err(CliError::Internal(msg))) => {
            eprintln!("internal error: {}", msg.replace('\n', " "));
            2
        }
        Err(_) => {
            eprintln!("internal error: unexpected panic");
            2
        }
    }
}
