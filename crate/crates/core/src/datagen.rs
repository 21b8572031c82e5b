//! Additive-noise structural equation models and synthetic data.
//!
//! Every variable owns an independent noise stream keyed by `(seed, index)`
//! and draws exactly one value per sample, so an intervention never shifts the
//! noise seen by any other variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{quantile_bin, Dataset, TabularDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, EdgeInfo, GraphKind};

/// Burn-in length as a multiple of the maximum lag.
const BURN_IN_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Linear,
    Sin,
    Tanh,
    Cube,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Identity | Transform::Linear => x,
            Transform::Sin => x.sin(),
            Transform::Tanh => x.tanh(),
            Transform::Cube => x * x * x,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::Linear => "linear",
            Transform::Sin => "sin",
            Transform::Tanh => "tanh",
            Transform::Cube => "cube",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::invalid(format!("unknown transform `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// `(mean, std)`; `std = 0` gives a constant.
    Gaussian,
    /// `(low, high)`
    Uniform,
    /// `(location, scale)`
    Laplace,
    /// `(rate)`
    Exponential,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::invalid(format!("unknown noise distribution `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub dist: NoiseKind,
    pub params: Vec<f64>,
}

impl NoiseSpec {
    pub fn gaussian(mean: f64, std: f64) -> Self {
        Self { dist: NoiseKind::Gaussian, params: vec![mean, std] }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Self { dist: NoiseKind::Uniform, params: vec![low, high] }
    }

    pub fn laplace(location: f64, scale: f64) -> Self {
        Self { dist: NoiseKind::Laplace, params: vec![location, scale] }
    }

    pub fn exponential(rate: f64) -> Self {
        Self { dist: NoiseKind::Exponential, params: vec![rate] }
    }

    /// Rescales the spread of the distribution by `factor`, keeping its location.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match self.dist {
            NoiseKind::Gaussian | NoiseKind::Laplace => out.params[1] *= factor,
            NoiseKind::Uniform => {
                let mid = (self.params[0] + self.params[1]) / 2.0;
                let half = (self.params[1] - self.params[0]) / 2.0 * factor;
                out.params = vec![mid - half, mid + half];
            }
            NoiseKind::Exponential => out.params[0] /= factor,
        }
        out
    }

    fn sampler(&self) -> Result<Sampler> {
        let arity = if self.dist == NoiseKind::Exponential { 1 } else { 2 };
        if self.params.len() != arity || self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid(format!(
                "{:?} noise takes {arity} finite parameter(s), got {:?}",
                self.dist, self.params
            )));
        }
        let p = &self.params;
        let bad = || Error::invalid(format!("invalid {:?} noise parameters {:?}", self.dist, p));
        Ok(match self.dist {
            NoiseKind::Gaussian => Sampler::Gaussian(Normal::new(p[0], p[1]).map_err(|_| bad())?),
            NoiseKind::Uniform if p[0] <= p[1] => Sampler::Uniform(p[0], p[1]),
            NoiseKind::Laplace if p[1] >= 0.0 => Sampler::Laplace(p[0], p[1]),
            NoiseKind::Exponential => Sampler::Exponential(Exp::new(p[0]).map_err(|_| bad())?),
            _ => return Err(bad()),
        })
    }
}

enum Sampler {
    Gaussian(Normal<f64>),
    Uniform(f64, f64),
    Laplace(f64, f64),
    Exponential(Exp<f64>),
}

impl Sampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Gaussian(d) => d.sample(rng),
            Sampler::Uniform(a, b) => a + (b - a) * rng.random::<f64>(),
            Sampler::Laplace(mu, b) => {
                let u: f64 = rng.random::<f64>() - 0.5;
                mu - b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            }
            Sampler::Exponential(d) => d.sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub parent: String,
    #[serde(default)]
    pub lag: i32,
    pub coef: f64,
    #[serde(rename = "fn", default = "default_transform")]
    pub transform: Transform,
}

fn default_transform() -> Transform {
    Transform::Identity
}

/// An additive-noise SEM: `child = sum coef * f(parent[t + lag]) + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemSpec {
    pub kind: GraphKind,
    pub variables: Vec<String>,
    #[serde(default)]
    pub equations: BTreeMap<String, Vec<Term>>,
    /// Variables without an entry get standard Gaussian noise.
    #[serde(default)]
    pub noise: BTreeMap<String, NoiseSpec>,
    #[serde(default)]
    pub max_lag: usize,
}

impl SemSpec {
    pub fn new(kind: GraphKind, variables: Vec<String>) -> Self {
        Self {
            kind,
            variables,
            equations: BTreeMap::new(),
            noise: BTreeMap::new(),
            max_lag: 0,
        }
    }

    pub fn tabular<S: AsRef<str>>(variables: &[S]) -> Self {
        Self::new(GraphKind::Tabular, variables.iter().map(|v| v.as_ref().to_owned()).collect())
    }

    pub fn timeseries<S: AsRef<str>>(variables: &[S], max_lag: usize) -> Self {
        let mut s = Self::new(GraphKind::TimeSeries, variables.iter().map(|v| v.as_ref().to_owned()).collect());
        s.max_lag = max_lag;
        s
    }

    /// Adds `coef * f(parent[t + lag])` to the equation of `child`. `lag` is
    /// zero or negative.
    pub fn with_term(mut self, child: &str, parent: &str, lag: i32, coef: f64, transform: Transform) -> Self {
        self.add_term(child, parent, lag, coef, transform);
        self
    }

    pub fn add_term(&mut self, child: &str, parent: &str, lag: i32, coef: f64, transform: Transform) {
        self.equations.entry(child.to_owned()).or_default().push(Term {
            parent: parent.to_owned(),
            lag,
            coef,
            transform,
        });
        if self.kind == GraphKind::TimeSeries {
            self.max_lag = self.max_lag.max(lag.unsigned_abs() as usize);
        }
    }

    pub fn with_noise(mut self, var: &str, noise: NoiseSpec) -> Self {
        self.noise.insert(var.to_owned(), noise);
        self
    }

    /// Noise for every variable.
    pub fn with_all_noise(mut self, noise: NoiseSpec) -> Self {
        for v in &self.variables {
            self.noise.insert(v.clone(), noise.clone());
        }
        self
    }

    pub fn noise_of(&self, var: &str) -> NoiseSpec {
        self.noise.get(var).cloned().unwrap_or_else(|| NoiseSpec::gaussian(0.0, 1.0))
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_owned()))
    }

    /// The parent relation as a graph, with coefficients as edge strengths.
    pub fn graph(&self) -> Result<CausalGraph> {
        let mut seen = BTreeSet::new();
        for v in &self.variables {
            if !seen.insert(v) {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        let mut g = CausalGraph::new(self.kind, self.variables.clone());
        for (child, terms) in &self.equations {
            let c = self.index_of(child)?;
            for t in terms {
                let p = self.index_of(&t.parent)?;
                if self.kind == GraphKind::TimeSeries && t.lag.unsigned_abs() as usize > self.max_lag {
                    return Err(Error::invalid(format!(
                        "lag {} of {} -> {} exceeds max_lag {}",
                        t.lag, t.parent, child, self.max_lag
                    )));
                }
                if g.has_edge(p, t.lag, c) {
                    return Err(Error::invalid(format!(
                        "duplicate term {}(t{}) in equation of {}",
                        t.parent, t.lag, child
                    )));
                }
                g.add_edge(p, t.lag, c, EdgeInfo { strength: Some(t.coef), pvalue: None })?;
            }
        }
        for v in self.noise.keys() {
            self.index_of(v)?;
        }
        Ok(g)
    }
}

/// Values forced onto variables during generation: a constant, or one value
/// per returned sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterventionValue {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl InterventionValue {
    fn at(&self, t: usize) -> f64 {
        match self {
            InterventionValue::Constant(v) => *v,
            InterventionValue::Sequence(s) => s[t],
        }
    }
}

pub type Intervention = BTreeMap<String, InterventionValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub samples: usize,
    pub seed: u64,
    pub intervention: Intervention,
    /// Quantile-bin every column into this many states.
    pub discrete_states: Option<usize>,
}

impl GenerateOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            intervention: Intervention::new(),
            discrete_states: None,
        }
    }

    pub fn intervene(mut self, var: &str, value: InterventionValue) -> Self {
        self.intervention.insert(var.to_owned(), value);
        self
    }

    pub fn discrete(mut self, nstates: usize) -> Self {
        self.discrete_states = Some(nstates);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub data: Dataset,
    pub graph: CausalGraph,
}

impl Generated {
    pub fn tabular(&self) -> TabularDataset {
        self.data.to_tabular()
    }

    pub fn timeseries(&self) -> TimeSeriesDataset {
        self.data.to_timeseries()
    }
}

pub fn generate(sem: &SemSpec, opts: &GenerateOptions) -> Result<Generated> {
    let graph = sem.graph()?;
    let n = sem.variables.len();
    let t_out = opts.samples;
    if t_out == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if let Some(k) = opts.discrete_states {
        if k < 2 {
            return Err(Error::invalid("nstates must be at least 2"));
        }
    }
    let order = graph.topological_order()?;

    let samplers = sem
        .variables
        .iter()
        .map(|v| sem.noise_of(v).sampler())
        .collect::<Result<Vec<_>>>()?;
    let mut forced: Vec<Option<&InterventionValue>> = vec![None; n];
    for (var, value) in &opts.intervention {
        let i = sem.index_of(var)?;
        if let InterventionValue::Sequence(s) = value {
            if s.len() != t_out {
                return Err(Error::invalid(format!(
                    "intervention on {var} has {} values, expected {t_out}",
                    s.len()
                )));
            }
        }
        forced[i] = Some(value);
    }

    let terms: Vec<Vec<(usize, usize, f64, Transform)>> = (0..n)
        .map(|c| {
            graph
                .parents(c)
                .map(|(p, _)| {
                    let term = sem.equations[&sem.variables[c]]
                        .iter()
                        .find(|t| t.parent == sem.variables[p.var] && t.lag == p.lag)
                        .expect("graph built from equations");
                    (p.var, p.lag.unsigned_abs() as usize, term.coef, term.transform)
                })
                .collect()
        })
        .collect();

    let (warmup, burn) = match sem.kind {
        GraphKind::Tabular => (0, 0),
        GraphKind::TimeSeries => (sem.max_lag, BURN_IN_FACTOR * sem.max_lag),
    };
    let total = t_out + burn;
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(opts.seed);
            r.set_stream(i as u64);
            r
        })
        .collect();

    // series[v][t], time-major generation
    let mut series = vec![vec![0.0; total]; n];
    for t in 0..total {
        for &v in &order {
            let noise = samplers[v].draw(&mut rngs[v]);
            let mut value = noise;
            if t >= warmup {
                for &(p, lag, coef, f) in &terms[v] {
                    value += coef * f.apply(series[p][t - lag]);
                }
            }
            if let Some(iv) = forced[v] {
                value = iv.at(t.saturating_sub(burn));
            }
            series[v][t] = value;
        }
    }

    let mut columns: Vec<Vec<f64>> = series.into_iter().map(|s| s[burn..].to_vec()).collect();
    if let Some(k) = opts.discrete_states {
        for col in &mut columns {
            *col = quantile_bin(col, k);
        }
    }
    let table = TabularDataset::from_columns(sem.variables.clone(), columns)?;
    let data = match sem.kind {
        GraphKind::Tabular => Dataset::Tabular(table),
        GraphKind::TimeSeries => Dataset::TimeSeries(TimeSeriesDataset::single(table)),
    };
    Ok(Generated { data, graph })
}

/// How many parents each node receives.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ParentRule {
    /// Uniform count in `0..=min(max, available)`.
    UpTo(usize),
    /// Each candidate independently with this probability.
    Density(f64),
}

fn random_sem(
    kind: GraphKind,
    var_names: &[String],
    rule: ParentRule,
    max_lag: usize,
    seed: u64,
    transform: Transform,
    coef: f64,
) -> Result<SemSpec> {
    if let ParentRule::Density(d) = rule {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::invalid(format!("graph density {d} is outside [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..var_names.len()).collect();
    order.shuffle(&mut rng);

    let mut sem = SemSpec::new(kind, var_names.to_vec());
    sem.max_lag = max_lag;
    for (pos, &child) in order.iter().enumerate() {
        let earlier = &order[..pos];
        let parents: Vec<usize> = match rule {
            ParentRule::UpTo(max) => {
                let k = rng.random_range(0..=max.min(earlier.len()));
                let mut pool = earlier.to_vec();
                pool.shuffle(&mut rng);
                pool.truncate(k);
                pool.sort_unstable_by_key(|p| order.iter().position(|o| o == p));
                pool
            }
            ParentRule::Density(d) => earlier.iter().copied().filter(|_| rng.random_bool(d)).collect(),
        };
        for p in parents {
            let lag = match kind {
                GraphKind::Tabular => 0,
                GraphKind::TimeSeries => -(rng.random_range(1..=max_lag) as i32),
            };
            sem.add_term(&var_names[child], &var_names[p], lag, coef, transform);
        }
    }
    Ok(sem)
}

/// Random DAG where each node gets a uniformly drawn number of parents, at most
/// `max_num_parents`, among nodes earlier in a random order.
pub fn random_tabular_sem(
    var_names: &[String],
    max_num_parents: usize,
    seed: u64,
    transform: Transform,
    coef: f64,
) -> Result<SemSpec> {
    random_sem(GraphKind::Tabular, var_names, ParentRule::UpTo(max_num_parents), 0, seed, transform, coef)
}

/// Random DAG where each ordered pair under a random order is an edge with
/// probability `density`.
pub fn sparse_tabular_sem(
    var_names: &[String],
    density: f64,
    seed: u64,
    transform: Transform,
    coef: f64,
) -> Result<SemSpec> {
    random_sem(GraphKind::Tabular, var_names, ParentRule::Density(density), 0, seed, transform, coef)
}

/// Time-series counterpart of [`random_tabular_sem`]; every edge is lagged by
/// a uniform draw from `1..=max_lag`.
pub fn random_timeseries_sem(
    var_names: &[String],
    max_num_parents: usize,
    max_lag: usize,
    seed: u64,
    transform: Transform,
    coef: f64,
) -> Result<SemSpec> {
    if max_lag < 1 {
        return Err(Error::invalid("max_lag must be at least 1"));
    }
    random_sem(GraphKind::TimeSeries, var_names, ParentRule::UpTo(max_num_parents), max_lag, seed, transform, coef)
}

pub fn sparse_timeseries_sem(
    var_names: &[String],
    density: f64,
    max_lag: usize,
    seed: u64,
    transform: Transform,
    coef: f64,
) -> Result<SemSpec> {
    if max_lag < 1 {
        return Err(Error::invalid("max_lag must be at least 1"));
    }
    random_sem(GraphKind::TimeSeries, var_names, ParentRule::Density(density), max_lag, seed, transform, coef)
}

/// `["X0", "X1", ...]`
pub fn var_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("X{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> SemSpec {
        SemSpec::tabular(&["A", "B"])
            .with_term("B", "A", 0, 2.0, Transform::Identity)
            .with_noise("B", NoiseSpec::gaussian(0.0, 0.0))
    }

    #[test]
    fn noise_free_child_is_exact() {
        let g = generate(&chain(), &GenerateOptions::new(4, 1)).unwrap();
        let d = g.tabular();
        for t in 0..4 {
            assert_eq!(d.column(1)[t], 2.0 * d.column(0)[t]);
        }
        assert!(g.graph.has_edge(0, 0, 1));
        assert_eq!(g.graph.edge_count(), 1);
    }

    #[test]
    fn same_seed_same_data() {
        let sem = chain().with_noise("B", NoiseSpec::laplace(0.0, 1.0));
        let a = generate(&sem, &GenerateOptions::new(50, 7)).unwrap().tabular();
        let b = generate(&sem, &GenerateOptions::new(50, 7)).unwrap().tabular();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn intervened_mean() {
        let sem = chain().with_noise("B", NoiseSpec::gaussian(0.0, 1.0));
        let n = 20_000;
        let opts = GenerateOptions::new(n, 3).intervene("A", InterventionValue::Constant(1.0));
        let d = generate(&sem, &opts).unwrap().tabular();
        assert!(d.column(0).iter().all(|&v| v == 1.0));
        let mean = d.column(1).iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn non_descendants_unchanged_by_intervention() {
        let sem = SemSpec::tabular(&["A", "B", "C"])
            .with_term("B", "A", 0, 1.0, Transform::Sin)
            .with_term("C", "B", 0, 0.5, Transform::Identity);
        let base = generate(&sem, &GenerateOptions::new(100, 11)).unwrap().tabular();
        let opts = GenerateOptions::new(100, 11).intervene("B", InterventionValue::Constant(3.0));
        let treated = generate(&sem, &opts).unwrap().tabular();
        assert_eq!(base.column(0), treated.column(0));
        assert_ne!(base.column(2), treated.column(2));
    }

    #[test]
    fn rejects_bad_specs() {
        let cyclic = SemSpec::tabular(&["A", "B"])
            .with_term("B", "A", 0, 1.0, Transform::Identity)
            .with_term("A", "B", 0, 1.0, Transform::Identity);
        assert!(matches!(generate(&cyclic, &GenerateOptions::new(5, 0)), Err(Error::Cyclic(_))));
        assert!("relu".parse::<Transform>().is_err());
        let json = r#"{"kind":"tabular","variables":["A"],"noise":{"A":{"dist":"cauchy","params":[0,1]}}}"#;
        assert!(serde_json::from_str::<SemSpec>(json).is_err());
        let short = chain();
        let opts = GenerateOptions::new(5, 0).intervene("A", InterventionValue::Sequence(vec![1.0; 4]));
        assert!(generate(&short, &opts).is_err());
    }

    #[test]
    fn json_shape() {
        let json = r#"{"kind":"timeseries","variables":["A","B"],
            "equations":{"B":[{"parent":"A","lag":-1,"coef":0.5,"fn":"tanh"}]},
            "noise":{"A":{"dist":"uniform","params":[-1,1]}},"max_lag":1}"#;
        let sem: SemSpec = serde_json::from_str(json).unwrap();
        let g = generate(&sem, &GenerateOptions::new(30, 2)).unwrap();
        assert!(g.graph.has_edge(0, -1, 1));
        let d = g.timeseries();
        assert_eq!(d.total_samples(), 30);
        let a = d.blocks()[0].column(0);
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn discrete_output() {
        let opts = GenerateOptions::new(40, 5).discrete(3);
        let d = generate(&chain(), &opts).unwrap().tabular();
        assert!(d.column(1).iter().all(|v| [0.0, 1.0, 2.0].contains(v)));
    }

    #[test]
    fn random_sem_examples() {
        let names = var_names(5);
        let empty = random_tabular_sem(&names, 0, 1, Transform::Identity, 1.0).unwrap();
        assert!(empty.graph().unwrap().is_empty());

        let names = var_names(10);
        let sem = random_tabular_sem(&names, 2, 9, Transform::Tanh, 0.7).unwrap();
        let g = sem.graph().unwrap();
        assert!(g.topological_order().is_ok());
        assert!((0..10).all(|c| g.parent_refs(c).len() <= 2));
        assert_eq!(sem, random_tabular_sem(&names, 2, 9, Transform::Tanh, 0.7).unwrap());

        let names = var_names(4);
        assert!(sparse_tabular_sem(&names, 0.0, 1, Transform::Identity, 1.0).unwrap().graph().unwrap().is_empty());
        assert_eq!(sparse_tabular_sem(&names, 1.0, 1, Transform::Identity, 1.0).unwrap().graph().unwrap().edge_count(), 6);
        assert!(sparse_tabular_sem(&names, 1.5, 1, Transform::Identity, 1.0).is_err());
    }

    #[test]
    fn density_matches_binomial() {
        let names = var_names(20);
        let trials = 200;
        let total: usize = (0..trials)
            .map(|s| sparse_tabular_sem(&names, 0.3, s, Transform::Identity, 1.0).unwrap().graph().unwrap().edge_count())
            .sum();
        let mean = total as f64 / trials as f64;
        let pairs = 190.0;
        // sd of the mean of `trials` Binomial(190, 0.3) counts
        let sd = (pairs * 0.3 * 0.7 / trials as f64).sqrt();
        assert!((mean - 57.0).abs() < 3.0 * sd, "mean edge count {mean}");
    }

    #[test]
    fn timeseries_lags() {
        let names = var_names(6);
        assert!(random_timeseries_sem(&names, 2, 0, 1, Transform::Identity, 0.5).is_err());
        let sem = sparse_timeseries_sem(&names, 0.5, 1, 4, Transform::Identity, 0.5).unwrap();
        assert!(sem.equations.values().flatten().all(|t| t.lag == -1));
        let mut seen = BTreeSet::new();
        for seed in 0..30 {
            let sem = sparse_timeseries_sem(&names, 0.5, 3, seed, Transform::Identity, 0.5).unwrap();
            seen.extend(sem.equations.values().flatten().map(|t| t.lag));
        }
        assert_eq!(seen, BTreeSet::from([-3, -2, -1]));
        assert!(sparse_timeseries_sem(&names, 0.0, 2, 1, Transform::Identity, 0.5).unwrap().equations.is_empty());
    }
}
