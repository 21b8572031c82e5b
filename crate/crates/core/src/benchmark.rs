//! Sweeps discovery algorithms over a difficulty axis and scores the learned
//! graphs against the generating graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ci::DiscreteCITest;
use crate::data::Dataset;
use crate::datagen::{
    generate, sparse_tabular_sem, sparse_timeseries_sem, var_names, GenerateOptions, NoiseKind, NoiseSpec, SemSpec,
    Transform,
};
use crate::error::{Error, Result};
use crate::ges::{ges, GesConfig};
use crate::graph::CausalGraph;
use crate::linalg::mean;
use crate::lingam::{lingam, LingamConfig};
use crate::pc::{pc_tabular, pc_timeseries, PcConfig};
use crate::pool::WorkerPool;
use crate::prior::PriorKnowledge;
use crate::var::{granger, varlingam, GrangerConfig, VarLingamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Edges are `(from, lag, to)` triples. An undirected predicted edge is one
/// prediction that matches either orientation.
pub fn edge_metrics(predicted: &CausalGraph, truth: &CausalGraph) -> Result<EdgeMetrics> {
    if predicted.kind() != truth.kind() || predicted.var_names() != truth.var_names() {
        return Err(Error::invalid("predicted and true graphs have different variables or kinds"));
    }
    let truth_edges: BTreeSet<(usize, i32, usize)> =
        truth.directed_edges().iter().map(|e| (e.from, e.lag, e.to)).collect();
    let undirected_truth = truth.undirected_edges();
    let truth_has = |a: usize, lag: i32, b: usize| {
        truth_edges.contains(&(a, lag, b)) || (lag == 0 && undirected_truth.contains(&(a.min(b), a.max(b))))
    };
    let directed = predicted.directed_edges();
    let undirected = predicted.undirected_edges();
    let n_pred = directed.len() + undirected.len();
    let n_truth = truth_edges.len() + undirected_truth.len();

    let pred_hits = directed.iter().filter(|e| truth_has(e.from, e.lag, e.to)).count()
        + undirected.iter().filter(|&&(a, b)| truth_has(a, 0, b) || truth_has(b, 0, a)).count();
    let truth_hits = truth_edges
        .iter()
        .filter(|&&(a, lag, b)| predicted.has_edge(a, lag, b) || (lag == 0 && predicted.has_undirected(a, b)))
        .count()
        + undirected_truth
            .iter()
            .filter(|&&(a, b)| predicted.is_adjacent(a, b))
            .count();

    let precision = if n_pred == 0 { 1.0 } else { pred_hits as f64 / n_pred as f64 };
    let recall = if n_truth == 0 { 1.0 } else { truth_hits as f64 / n_truth as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(EdgeMetrics { precision, recall, f1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Continuous,
    Discrete,
    TimeSeries,
}

impl FromStr for DataKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(DataKind::Continuous),
            "discrete" => Ok(DataKind::Discrete),
            "timeseries" | "time-series" => Ok(DataKind::TimeSeries),
            other => Err(Error::invalid(format!("unknown data kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Samples,
    Variables,
    Density,
    NoiseType,
    Snr,
    MaxLag,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Samples,
        Axis::Variables,
        Axis::Density,
        Axis::NoiseType,
        Axis::Snr,
        Axis::MaxLag,
    ];

    pub fn available_for(self, kind: DataKind) -> bool {
        match self {
            Axis::Samples | Axis::Variables | Axis::Density => true,
            Axis::NoiseType | Axis::Snr => kind != DataKind::Discrete,
            Axis::MaxLag => kind == DataKind::TimeSeries,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Samples => "samples",
            Axis::Variables => "variables",
            Axis::Density => "density",
            Axis::NoiseType => "noise_type",
            Axis::Snr => "snr",
            Axis::MaxLag => "max_lag",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown benchmark axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Name(String),
}

impl AxisValue {
    fn number(&self, axis: Axis) -> Result<f64> {
        match self {
            AxisValue::Number(x) => Ok(*x),
            AxisValue::Name(s) => s
                .parse()
                .map_err(|_| Error::invalid(format!("axis {axis} needs numeric values, got `{s}`"))),
        }
    }

    fn count(&self, axis: Axis) -> Result<usize> {
        let x = self.number(axis)?;
        if x < 0.0 || x.fract() != 0.0 {
            return Err(Error::invalid(format!("axis {axis} needs non-negative integers, got {x}")));
        }
        Ok(x as usize)
    }
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Number(x) => write!(f, "{x}"),
            AxisValue::Name(s) => f.write_str(s),
        }
    }
}

/// Parameters of one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSettings {
    pub samples: usize,
    pub variables: usize,
    pub density: f64,
    pub noise: NoiseKind,
    /// When set, noise is rescaled per variable to this signal-to-noise ratio.
    pub snr: Option<f64>,
    pub max_lag: usize,
    pub coef: f64,
    pub transform: Transform,
    pub states: usize,
}

impl Default for SyntheticSettings {
    fn default() -> Self {
        Self {
            samples: 1000,
            variables: 5,
            density: 0.3,
            noise: NoiseKind::Gaussian,
            snr: None,
            max_lag: 2,
            coef: 0.8,
            transform: Transform::Identity,
            states: 3,
        }
    }
}

impl SyntheticSettings {
    pub fn with_axis(&self, axis: Axis, value: &AxisValue) -> Result<Self> {
        let mut s = self.clone();
        match axis {
            Axis::Samples => s.samples = value.count(axis)?,
            Axis::Variables => s.variables = value.count(axis)?,
            Axis::Density => s.density = value.number(axis)?,
            Axis::Snr => s.snr = Some(value.number(axis)?),
            Axis::MaxLag => s.max_lag = value.count(axis)?,
            Axis::NoiseType => {
                s.noise = match value {
                    AxisValue::Name(n) => serde_json::from_value(serde_json::Value::String(n.clone()))
                        .map_err(|_| Error::invalid(format!("unknown noise type `{n}`")))?,
                    AxisValue::Number(_) => return Err(Error::invalid("noise_type values are names")),
                }
            }
        }
        Ok(s)
    }
}

/// Unit-variance noise of the given family.
pub fn unit_noise(kind: NoiseKind) -> NoiseSpec {
    match kind {
        NoiseKind::Gaussian => NoiseSpec::gaussian(0.0, 1.0),
        NoiseKind::Uniform => NoiseSpec::uniform(-3f64.sqrt(), 3f64.sqrt()),
        NoiseKind::Laplace => NoiseSpec::laplace(0.0, 0.5f64.sqrt()),
        NoiseKind::Exponential => NoiseSpec::exponential(1.0),
    }
}

fn noise_variance(spec: &NoiseSpec) -> f64 {
    let p = &spec.params;
    match spec.dist {
        NoiseKind::Gaussian => p[1] * p[1],
        NoiseKind::Uniform => (p[1] - p[0]).powi(2) / 12.0,
        NoiseKind::Laplace => 2.0 * p[1] * p[1],
        NoiseKind::Exponential => 1.0 / (p[0] * p[0]),
    }
}

/// Per-variable structural signal `sum coef * f(parent)` in generated data.
pub fn structural_signal(sem: &SemSpec, data: &Dataset) -> Result<BTreeMap<String, Vec<f64>>> {
    let table = data.to_tabular();
    let mut out = BTreeMap::new();
    for (child, terms) in &sem.equations {
        if terms.is_empty() {
            continue;
        }
        let max_lag = terms.iter().map(|t| t.lag.unsigned_abs() as usize).max().unwrap_or(0);
        let n = table.n_samples();
        let mut signal = vec![0.0; n.saturating_sub(max_lag)];
        for t in &terms[..] {
            let col = table.column(table.index_of(&t.parent)?);
            let lag = t.lag.unsigned_abs() as usize;
            for (k, s) in signal.iter_mut().enumerate() {
                *s += t.coef * t.transform.apply(col[k + max_lag - lag]);
            }
        }
        out.insert(child.clone(), signal);
    }
    Ok(out)
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len().max(1) as f64
}

/// Rescales each non-root variable's noise so that
/// `var(signal) / var(noise) = snr`, using pilot simulations.
pub fn calibrate_snr(sem: &SemSpec, snr: f64, pilot_samples: usize, seed: u64) -> Result<SemSpec> {
    if !(snr.is_finite() && snr > 0.0) {
        return Err(Error::invalid(format!("snr must be positive, got {snr}")));
    }
    let mut sem = sem.clone();
    // one pass fixes one more layer of the summary graph
    for _ in 0..=sem.variables.len() {
        let data = generate(&sem, &GenerateOptions::new(pilot_samples, seed))?.data;
        let signals = structural_signal(&sem, &data)?;
        let mut settled = true;
        for (child, signal) in signals {
            let current = sem.noise_of(&child);
            let (vs, vn) = (variance(&signal), noise_variance(&current));
            if vs <= 0.0 || vn <= 0.0 {
                continue;
            }
            let factor = (vs / (snr * vn)).sqrt();
            if (factor - 1.0).abs() > 1e-3 {
                settled = false;
                sem = sem.with_noise(&child, current.scaled(factor));
            }
        }
        if settled {
            break;
        }
    }
    Ok(sem)
}

pub fn synthetic_sem(kind: DataKind, settings: &SyntheticSettings, seed: u64) -> Result<SemSpec> {
    let names = var_names(settings.variables);
    let sem = match kind {
        DataKind::TimeSeries => sparse_timeseries_sem(
            &names,
            settings.density,
            settings.max_lag,
            seed,
            settings.transform,
            settings.coef,
        )?,
        _ => sparse_tabular_sem(&names, settings.density, seed, settings.transform, settings.coef)?,
    };
    let sem = sem.with_all_noise(unit_noise(settings.noise));
    match (kind, settings.snr) {
        (DataKind::Discrete, Some(_)) => Err(Error::invalid("snr is not available for discrete data")),
        (_, Some(snr)) => calibrate_snr(&sem, snr, settings.samples.max(2000), seed ^ 0x5eed),
        (_, None) => Ok(sem),
    }
}

/// Data and true graph for one synthetic trial.
pub fn synthetic_trial(kind: DataKind, settings: &SyntheticSettings, seed: u64) -> Result<(Dataset, CausalGraph)> {
    let sem = synthetic_sem(kind, settings, seed)?;
    let mut opts = GenerateOptions::new(settings.samples, seed);
    if kind == DataKind::Discrete {
        opts = opts.discrete(settings.states);
    }
    let g = generate(&sem, &opts)?;
    Ok((g.data, g.graph))
}

/// What an algorithm may know about the trial it is run on.
#[derive(Debug, Clone)]
pub struct TrialInfo {
    pub seed: u64,
    pub kind: DataKind,
    /// Present for synthetic trials.
    pub settings: Option<SyntheticSettings>,
}

pub type AlgorithmFn = Arc<dyn Fn(&Dataset, &TrialInfo) -> Result<CausalGraph> + Send + Sync>;
pub type MetricFn = Arc<dyn Fn(&CausalGraph, &CausalGraph) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Algorithm {
    pub name: String,
    pub run: AlgorithmFn,
}

impl fmt::Debug for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Algorithm").field("name", &self.name).finish()
    }
}

pub const BUILTIN_ALGORITHMS: [&str; 5] = ["pc", "ges", "lingam", "granger", "varlingam"];

impl Algorithm {
    pub fn custom(name: &str, run: impl Fn(&Dataset, &TrialInfo) -> Result<CausalGraph> + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_owned(),
            run: Arc::new(run),
        }
    }

    /// Single-worker built-in algorithm; errors when it cannot handle `kind`.
    pub fn builtin(name: &str, kind: DataKind) -> Result<Self> {
        let unavailable = || Error::invalid(format!("algorithm `{name}` is not available for {kind:?} data"));
        let lag_of = |info: &TrialInfo| info.settings.as_ref().map_or(1, |s| s.max_lag.max(1));
        let none = PriorKnowledge::default();
        let run: AlgorithmFn = match (name, kind) {
            ("pc", DataKind::Continuous) => {
                Arc::new(move |d: &Dataset, _: &TrialInfo| Ok(pc_tabular(&d.to_tabular(), &none, &PcConfig::default())?.graph))
            }
            ("pc", DataKind::Discrete) => Arc::new(move |d: &Dataset, _: &TrialInfo| {
                let config = PcConfig {
                    ci_test: Arc::new(DiscreteCITest::default()),
                    ..PcConfig::default()
                };
                Ok(pc_tabular(&d.to_tabular(), &none, &config)?.graph)
            }),
            ("pc", DataKind::TimeSeries) => Arc::new(move |d: &Dataset, info: &TrialInfo| {
                let config = PcConfig {
                    max_lag: lag_of(info),
                    ..PcConfig::default()
                };
                Ok(pc_timeseries(&d.to_timeseries(), &none, &config)?.graph)
            }),
            ("ges", DataKind::Continuous) => {
                Arc::new(|d: &Dataset, _: &TrialInfo| Ok(ges(&d.to_tabular(), &GesConfig::default())?.graph))
            }
            ("lingam", DataKind::Continuous) => {
                Arc::new(|d: &Dataset, _: &TrialInfo| Ok(lingam(&d.to_tabular(), &LingamConfig::default())?.graph))
            }
            ("granger", DataKind::TimeSeries) => Arc::new(move |d: &Dataset, info: &TrialInfo| {
                let config = GrangerConfig {
                    max_lag: lag_of(info),
                    ..GrangerConfig::default()
                };
                Ok(granger(&d.to_timeseries(), &none, &config)?.graph)
            }),
            ("varlingam", DataKind::TimeSeries) => Arc::new(move |d: &Dataset, info: &TrialInfo| {
                let config = VarLingamConfig {
                    max_lag: lag_of(info),
                    ..VarLingamConfig::default()
                };
                Ok(varlingam(&d.to_timeseries(), &none, &config)?.graph)
            }),
            (n, _) if BUILTIN_ALGORITHMS.contains(&n) => return Err(unavailable()),
            (n, _) => return Err(Error::invalid(format!("unknown algorithm `{n}`"))),
        };
        Ok(Self {
            name: name.to_owned(),
            run,
        })
    }
}

#[derive(Clone)]
pub struct Metric {
    pub name: String,
    /// `(predicted, truth) -> score`
    pub eval: MetricFn,
}

impl Metric {
    pub fn new(name: &str, eval: impl Fn(&CausalGraph, &CausalGraph) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.to_owned(),
            eval: Arc::new(eval),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub kind: DataKind,
    pub axis: Axis,
    pub values: Vec<AxisValue>,
    #[serde(default)]
    pub base: SyntheticSettings,
    pub algorithms: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub first_seed: u64,
}

fn default_seeds() -> usize {
    10
}

impl BenchmarkConfig {
    pub fn new(kind: DataKind, axis: Axis, values: Vec<AxisValue>, algorithms: &[&str]) -> Self {
        Self {
            kind,
            axis,
            values,
            base: SyntheticSettings::default(),
            algorithms: algorithms.iter().map(|s| s.to_string()).collect(),
            seeds: default_seeds(),
            first_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.axis.available_for(self.kind) {
            return Err(Error::invalid(format!(
                "axis {} is not available for {:?} data",
                self.axis, self.kind
            )));
        }
        if self.values.is_empty() || self.seeds == 0 {
            return Err(Error::invalid("a benchmark needs at least one axis value and one seed"));
        }
        for v in &self.values {
            self.base.with_axis(self.axis, v)?;
        }
        for a in &self.algorithms {
            Algorithm::builtin(a, self.kind)?;
        }
        Ok(())
    }

    pub fn builtin_algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algorithms.iter().map(|a| Algorithm::builtin(a, self.kind)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let m = mean(values);
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
        };
        Some(Self { mean: m, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmStats {
    pub seeds: usize,
    /// Seeds on which the algorithm returned an error.
    pub failures: usize,
    pub precision: Option<Stat>,
    pub recall: Option<Stat>,
    pub f1: Option<Stat>,
    pub wall_time_seconds: Option<Stat>,
    pub custom: BTreeMap<String, Stat>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPoint {
    pub value: AxisValue,
    pub algorithms: BTreeMap<String, AlgorithmStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub axis: String,
    pub points: Vec<ReportPoint>,
}

/// One trial of user-provided data.
#[derive(Debug, Clone)]
pub struct Trial {
    pub data: Dataset,
    pub truth: CausalGraph,
    pub seed: u64,
}

#[derive(Debug, Clone)]
struct Run {
    /// Errors are kept as messages.
    metrics: std::result::Result<(EdgeMetrics, f64, BTreeMap<String, f64>), String>,
}

fn evaluate(algorithms: &[Algorithm], metrics: &[Metric], trial: &Trial, info: &TrialInfo) -> Vec<Run> {
    algorithms
        .iter()
        .map(|a| {
            let start = Instant::now();
            let out = (a.run)(&trial.data, info);
            let secs = start.elapsed().as_secs_f64();
            let metrics = out.and_then(|g| {
                let m = edge_metrics(&g, &trial.truth)?;
                let custom = metrics.iter().map(|c| (c.name.clone(), (c.eval)(&g, &trial.truth))).collect();
                Ok((m, secs, custom))
            });
            let metrics = metrics.map_err(|e: Error| e.to_string());
            Run { metrics }
        })
        .collect()
}

fn aggregate(algorithms: &[Algorithm], metrics: &[Metric], runs: &[Vec<Run>]) -> BTreeMap<String, AlgorithmStats> {
    let mut out = BTreeMap::new();
    for (k, a) in algorithms.iter().enumerate() {
        let mut cols: [Vec<f64>; 4] = Default::default();
        let mut custom: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut errors = Vec::new();
        for seed_runs in runs {
            match &seed_runs[k].metrics {
                Ok((m, secs, c)) => {
                    cols[0].push(m.precision);
                    cols[1].push(m.recall);
                    cols[2].push(m.f1);
                    cols[3].push(*secs);
                    for (name, v) in c {
                        custom.entry(name.clone()).or_default().push(*v);
                    }
                }
                Err(e) => errors.push(e.clone()),
            }
        }
        let stats = AlgorithmStats {
            seeds: runs.len(),
            failures: errors.len(),
            precision: Stat::of(&cols[0]),
            recall: Stat::of(&cols[1]),
            f1: Stat::of(&cols[2]),
            wall_time_seconds: Stat::of(&cols[3]),
            custom: metrics
                .iter()
                .filter_map(|m| Some((m.name.clone(), Stat::of(custom.get(&m.name)?)?)))
                .collect(),
            errors,
        };
        out.insert(a.name.clone(), stats);
    }
    out
}

/// Runs every `(value, seed)` cell of a synthetic sweep on `pool`. Timings
/// cover only the algorithm call.
pub fn run_benchmark(
    config: &BenchmarkConfig,
    algorithms: &[Algorithm],
    metrics: &[Metric],
    pool: &WorkerPool,
) -> Result<BenchmarkReport> {
    if !config.axis.available_for(config.kind) {
        return Err(Error::invalid(format!(
            "axis {} is not available for {:?} data",
            config.axis, config.kind
        )));
    }
    if config.values.is_empty() || config.seeds == 0 {
        return Err(Error::invalid("a benchmark needs at least one axis value and one seed"));
    }
    if algorithms.is_empty() {
        return Err(Error::invalid("a benchmark needs at least one algorithm"));
    }
    let settings = config
        .values
        .iter()
        .map(|v| config.base.with_axis(config.axis, v))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, u64)> = (0..settings.len())
        .flat_map(|i| (0..config.seeds as u64).map(move |s| (i, s)))
        .collect();
    let results = pool.map(&cells, |&(i, s)| -> Result<Vec<Run>> {
        let seed = config.first_seed + s;
        let (data, truth) = synthetic_trial(config.kind, &settings[i], seed)?;
        let info = TrialInfo {
            seed,
            kind: config.kind,
            settings: Some(settings[i].clone()),
        };
        Ok(evaluate(algorithms, metrics, &Trial { data, truth, seed }, &info))
    });
    let mut per_point: Vec<Vec<Vec<Run>>> = vec![Vec::new(); settings.len()];
    for (&(i, _), r) in cells.iter().zip(results) {
        per_point[i].push(r?);
    }
    Ok(BenchmarkReport {
        axis: config.axis.to_string(),
        points: config
            .values
            .iter()
            .zip(&per_point)
            .map(|(v, runs)| ReportPoint {
                value: v.clone(),
                algorithms: aggregate(algorithms, metrics, runs),
            })
            .collect(),
    })
}

/// Same as [`run_benchmark`] over user-provided `(value, trials)` points.
pub fn run_custom_benchmark(
    axis: &str,
    kind: DataKind,
    points: &[(AxisValue, Vec<Trial>)],
    algorithms: &[Algorithm],
    metrics: &[Metric],
    pool: &WorkerPool,
) -> Result<BenchmarkReport> {
    if points.iter().any(|(_, t)| t.is_empty()) {
        return Err(Error::invalid("every benchmark point needs at least one trial"));
    }
    let cells: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, (_, t))| (0..t.len()).map(move |k| (i, k)))
        .collect();
    let results = pool.map(&cells, |&(i, k)| {
        let trial = &points[i].1[k];
        let info = TrialInfo {
            seed: trial.seed,
            kind,
            settings: None,
        };
        evaluate(algorithms, metrics, trial, &info)
    });
    let mut per_point: Vec<Vec<Vec<Run>>> = vec![Vec::new(); points.len()];
    for (&(i, _), r) in cells.iter().zip(results) {
        per_point[i].push(r);
    }
    Ok(BenchmarkReport {
        axis: axis.to_owned(),
        points: points
            .iter()
            .zip(&per_point)
            .map(|((v, _), runs)| ReportPoint {
                value: v.clone(),
                algorithms: aggregate(algorithms, metrics, runs),
            })
            .collect(),
    })
}

macro_rules! axis_sweep {
    ($($name:ident => $axis:expr),* $(,)?) => {$(
        /// Sweep along one axis with the config's built-in algorithms.
        pub fn $name(config: &BenchmarkConfig, pool: &WorkerPool) -> Result<BenchmarkReport> {
            let config = BenchmarkConfig { axis: $axis, ..config.clone() };
            run_benchmark(&config, &config.builtin_algorithms()?, &[], pool)
        }
    )*};
}

axis_sweep! {
    benchmark_sample_complexity => Axis::Samples,
    benchmark_variable_complexity => Axis::Variables,
    benchmark_graph_density => Axis::Density,
    benchmark_noise_type => Axis::NoiseType,
    benchmark_snr => Axis::Snr,
    benchmark_data_max_lag => Axis::MaxLag,
}

impl BenchmarkReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per (value, algorithm).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let custom: BTreeSet<&String> = self
            .points
            .iter()
            .flat_map(|p| p.algorithms.values().flat_map(|a| a.custom.keys()))
            .collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["value", "algorithm", "seeds", "failures"].map(String::from).to_vec();
        for m in ["precision", "recall", "f1", "wall_time_seconds"]
            .into_iter()
            .chain(custom.iter().map(|s| s.as_str()))
        {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_std"));
        }
        w.write_record(&header)?;
        let cell = |s: Option<&Stat>| match s {
            Some(s) => [s.mean.to_string(), s.std.to_string()],
            None => [String::new(), String::new()],
        };
        for p in &self.points {
            for (name, a) in &p.algorithms {
                let mut row = vec![p.value.to_string(), name.clone(), a.seeds.to_string(), a.failures.to_string()];
                for s in [&a.precision, &a.recall, &a.f1, &a.wall_time_seconds] {
                    row.extend(cell(s.as_ref()));
                }
                for m in &custom {
                    row.extend(cell(a.custom.get(*m)));
                }
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeInfo, GraphKind};

    fn graph(edges: &[(usize, usize)], undirected: &[(usize, usize)]) -> CausalGraph {
        let mut g = CausalGraph::new(GraphKind::Tabular, var_names(5));
        for &(a, b) in edges {
            g.add_edge(a, 0, b, EdgeInfo::default()).unwrap();
        }
        for &(a, b) in undirected {
            g.add_undirected(a, b, EdgeInfo::default()).unwrap();
        }
        g
    }

    #[test]
    fn metric_conventions() {
        let truth = graph(&[(0, 1), (1, 2), (2, 3), (3, 4)], &[]);
        let m = edge_metrics(&truth, &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let m = edge_metrics(&graph(&[], &[]), &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 0.0, 0.0));
        let m = edge_metrics(&graph(&[], &[]), &graph(&[], &[])).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        // 4 predicted, 2 correct
        let m = edge_metrics(&graph(&[(0, 1), (2, 1), (2, 3), (0, 4)], &[]), &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
        // an undirected prediction counts once and matches either orientation
        let m = edge_metrics(&graph(&[], &[(1, 0)]), &truth).unwrap();
        assert_eq!((m.precision, m.recall), (1.0, 0.25));
        let other = CausalGraph::new(GraphKind::Tabular, var_names(4));
        assert!(edge_metrics(&other, &truth).is_err());
    }

    #[test]
    fn axis_availability() {
        let bad = BenchmarkConfig::new(DataKind::Discrete, Axis::Snr, vec![AxisValue::Number(1.0)], &["pc"]);
        assert!(bad.validate().is_err());
        let lag = BenchmarkConfig::new(DataKind::Continuous, Axis::MaxLag, vec![AxisValue::Number(1.0)], &["pc"]);
        assert!(lag.validate().is_err());
        let algo = BenchmarkConfig::new(DataKind::Discrete, Axis::Samples, vec![AxisValue::Number(100.0)], &["lingam"]);
        assert!(algo.validate().is_err());
        let ok = BenchmarkConfig::new(
            DataKind::TimeSeries,
            Axis::NoiseType,
            vec![AxisValue::Name("laplace".into())],
            &["granger"],
        );
        ok.validate().unwrap();
    }

    #[test]
    fn zero_density_gives_empty_truth() {
        let mut config = BenchmarkConfig::new(DataKind::Continuous, Axis::Density, vec![AxisValue::Number(0.0)], &[]);
        config.seeds = 3;
        let empty = Algorithm::custom("empty", |d, _| Ok(CausalGraph::new(GraphKind::Tabular, d.var_names().to_vec())));
        let edges = Metric::new("predicted_edges", |p, _| p.edge_count() as f64);
        let report = run_benchmark(&config, &[empty], &[edges], &WorkerPool::sequential()).unwrap();
        let stats = &report.points[0].algorithms["empty"];
        assert_eq!(stats.recall.unwrap().mean, 1.0);
        assert_eq!(stats.custom["predicted_edges"].mean, 0.0);

        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("value,algorithm,seeds,failures,precision_mean"));
        assert!(text.contains("predicted_edges_mean"));
    }

    #[test]
    fn snr_calibration_oracle() {
        let sem = synthetic_sem(
            DataKind::Continuous,
            &SyntheticSettings {
                variables: 6,
                density: 0.5,
                snr: Some(3.0),
                samples: 5000,
                ..Default::default()
            },
            11,
        )
        .unwrap();
        let data = generate(&sem, &GenerateOptions::new(5000, 99)).unwrap().data;
        let signals = structural_signal(&sem, &data).unwrap();
        assert!(!signals.is_empty());
        for (child, signal) in signals {
            let ratio = variance(&signal) / noise_variance(&sem.noise_of(&child));
            assert!((ratio / 3.0 - 1.0).abs() < 0.2, "{child}: {ratio}");
        }
    }

    #[test]
    fn reports_are_deterministic_across_workers() {
        let mut config = BenchmarkConfig::new(
            DataKind::Continuous,
            Axis::Samples,
            vec![AxisValue::Number(200.0), AxisValue::Number(400.0)],
            &["pc", "ges"],
        );
        config.seeds = 2;
        let algos = config.builtin_algorithms().unwrap();
        let strip = |mut r: BenchmarkReport| {
            for p in &mut r.points {
                for a in p.algorithms.values_mut() {
                    a.wall_time_seconds = None;
                }
            }
            r
        };
        let a = strip(run_benchmark(&config, &algos, &[], &WorkerPool::sequential()).unwrap());
        let b = strip(run_benchmark(&config, &algos, &[], &WorkerPool::new(2)).unwrap());
        assert_eq!(a, b);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<BenchmarkReport>(&json).unwrap(), a);
    }
}
