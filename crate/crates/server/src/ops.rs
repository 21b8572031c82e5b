//! Requests shared by the CLI and the HTTP service, and their execution.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use causalis::benchmark::{run_benchmark, BenchmarkConfig};
use causalis::ci::ci_test_by_name;
use causalis::ges::{ges, GesConfig, GesPhase};
use causalis::grow_shrink::{grow_shrink, GrowShrinkConfig};
use causalis::inference::{FittedScm, InferenceConfig, PredictionModel, Treatment};
use causalis::lingam::{lingam, LingamConfig};
use causalis::pc::{pc_single_tabular, pc_single_timeseries, pc_tabular, pc_timeseries, PcConfig};
use causalis::rca::{rca, RcaConfig, RcaMode};
use causalis::var::{granger, granger_single, varlingam, GrangerConfig, VarLingamConfig};
use causalis::{CausalGraph, Dataset, DiscoveryResult, Error, PriorKnowledge, Result, TabularDataset, TimeSeriesDataset, WorkerPool};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const ALGORITHMS: [&str; 6] = ["pc", "granger", "varlingam", "lingam", "ges", "grow-shrink"];

/// Union of all algorithm parameters; [`DiscoverParams::check`] rejects the
/// ones an algorithm does not use.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pvalue_threshold: Option<f64>,
    /// Absent means 4.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_condition_set_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unbounded_condition_set: Option<bool>,
    /// Presence makes PC treat the data as a time series.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_test: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<String>>,
}

impl DiscoverParams {
    fn set_fields(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut mark = |set: bool, name| {
            if set {
                out.push(name)
            }
        };
        mark(self.pvalue_threshold.is_some(), "pvalue_threshold");
        mark(self.max_condition_set_size.is_some(), "max_condition_set_size");
        mark(self.unbounded_condition_set.is_some(), "unbounded_condition_set");
        mark(self.max_lag.is_some(), "max_lag");
        mark(self.ci_test.is_some(), "ci_test");
        mark(self.target.is_some(), "target");
        mark(self.seed.is_some(), "seed");
        mark(self.phases.is_some(), "phases");
        out
    }

    /// Validates the parameters for `algorithm` without touching data.
    pub fn check(&self, algorithm: &str) -> Result<()> {
        let allowed: &[&str] = match algorithm {
            "pc" => &[
                "pvalue_threshold",
                "max_condition_set_size",
                "unbounded_condition_set",
                "max_lag",
                "ci_test",
                "target",
            ],
            "granger" => &["pvalue_threshold", "max_lag", "target"],
            "varlingam" => &["pvalue_threshold", "max_lag", "seed"],
            "lingam" => &["pvalue_threshold", "seed"],
            "ges" => &["phases"],
            "grow-shrink" => &["pvalue_threshold", "ci_test", "target"],
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown algorithm `{other}` (expected one of {})",
                    ALGORITHMS.join(", ")
                )))
            }
        };
        for f in self.set_fields() {
            if !allowed.contains(&f) {
                return Err(Error::InvalidArgument(format!("parameter `{f}` is not used by `{algorithm}`")));
            }
        }
        if let Some(p) = self.pvalue_threshold {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidArgument(format!("pvalue_threshold must be in (0, 1), got {p}")));
            }
        }
        if let Some(t) = &self.ci_test {
            ci_test_by_name(t)?;
        }
        if let Some(phases) = &self.phases {
            for p in phases {
                p.parse::<GesPhase>()?;
            }
        }
        if algorithm == "grow-shrink" && self.target.is_none() {
            return Err(Error::InvalidArgument("grow-shrink needs a target".into()));
        }
        if matches!(self.max_lag, Some(0)) && matches!(algorithm, "granger" | "varlingam") {
            return Err(Error::InvalidArgument("max_lag must be at least 1".into()));
        }
        Ok(())
    }

    pub fn is_timeseries(&self, algorithm: &str) -> bool {
        matches!(algorithm, "granger" | "varlingam") || (algorithm == "pc" && self.max_lag.is_some())
    }

    fn pc_config(&self, pool: &WorkerPool) -> Result<PcConfig> {
        let mut config = PcConfig {
            pool: pool.clone(),
            ..PcConfig::default()
        };
        if let Some(p) = self.pvalue_threshold {
            config.pvalue_threshold = p;
        }
        if let Some(m) = self.max_condition_set_size {
            config.max_condition_set_size = Some(m);
        }
        if self.unbounded_condition_set == Some(true) {
            config.max_condition_set_size = None;
        }
        if let Some(l) = self.max_lag {
            config.max_lag = l;
        }
        if let Some(t) = &self.ci_test {
            config.ci_test = ci_test_by_name(t)?;
        }
        Ok(config)
    }
}

/// Errors from prior knowledge that contradicts itself.
pub fn check_prior(pk: &PriorKnowledge) -> Result<()> {
    let found = pk.validate();
    if found.is_empty() {
        Ok(())
    } else {
        Err(Error::Contradictions(found))
    }
}

fn discovery_json(algorithm: &str, r: &DiscoveryResult) -> Value {
    json!({
        "algorithm": algorithm,
        "graph": r.graph,
        "removed_by": r.removed_by,
        "wall_time": r.wall_time,
    })
}

/// Runs a discovery algorithm; the JSON always carries `graph` except for
/// grow-shrink, which reports a Markov blanket.
pub fn discover(
    data: &TabularDataset,
    algorithm: &str,
    params: &DiscoverParams,
    pk: &PriorKnowledge,
    pool: &WorkerPool,
) -> Result<Value> {
    params.check(algorithm)?;
    check_prior(pk)?;
    let series = || TimeSeriesDataset::single(data.clone());
    let threshold = params.pvalue_threshold.unwrap_or(0.05);
    Ok(match algorithm {
        "pc" => {
            let config = params.pc_config(pool)?;
            let r = match (params.is_timeseries(algorithm), &params.target) {
                (true, Some(t)) => pc_single_timeseries(&series(), t, pk, &config)?,
                (true, None) => pc_timeseries(&series(), pk, &config)?,
                (false, Some(t)) => pc_single_tabular(data, t, pk, &config)?,
                (false, None) => pc_tabular(data, pk, &config)?,
            };
            discovery_json(algorithm, &r)
        }
        "granger" => {
            let config = GrangerConfig {
                max_lag: params.max_lag.unwrap_or(1),
                pvalue_threshold: threshold,
                pool: pool.clone(),
            };
            let r = match &params.target {
                Some(t) => granger_single(&series(), t, pk, &config)?,
                None => granger(&series(), pk, &config)?,
            };
            discovery_json(algorithm, &r)
        }
        "varlingam" => {
            let config = VarLingamConfig {
                max_lag: params.max_lag.unwrap_or(1),
                pvalue_threshold: threshold,
                lingam: LingamConfig {
                    seed: params.seed.unwrap_or(0),
                    ..LingamConfig::default()
                },
                ..VarLingamConfig::default()
            };
            discovery_json(algorithm, &varlingam(&series(), pk, &config)?)
        }
        "lingam" => {
            if pk != &PriorKnowledge::default() {
                return Err(Error::InvalidArgument("lingam does not use prior knowledge".into()));
            }
            let config = LingamConfig {
                pvalue_threshold: threshold,
                seed: params.seed.unwrap_or(0),
                ..LingamConfig::default()
            };
            let r = lingam(data, &config)?;
            let order: Vec<&str> = r.causal_order.iter().map(|&v| data.var_names()[v].as_str()).collect();
            let mut out = discovery_json(algorithm, &r.clone().into_discovery());
            out["causal_order"] = json!(order);
            out
        }
        "ges" => {
            if pk != &PriorKnowledge::default() {
                return Err(Error::InvalidArgument("ges does not use prior knowledge".into()));
            }
            let mut config = GesConfig {
                pool: pool.clone(),
                ..GesConfig::default()
            };
            if let Some(phases) = &params.phases {
                config.phases = phases.iter().map(|p| p.parse()).collect::<Result<_>>()?;
            }
            let r = ges(data, &config)?;
            let score = r.score;
            let mut out = discovery_json(algorithm, &r.into_discovery());
            out["score"] = json!(score);
            out
        }
        "grow-shrink" => {
            let mut config = GrowShrinkConfig {
                pvalue_threshold: threshold,
                ..GrowShrinkConfig::default()
            };
            if let Some(t) = &params.ci_test {
                config.ci_test = ci_test_by_name(t)?;
            }
            let target = params.target.as_deref().expect("checked");
            let r = grow_shrink(data, target, pk, &config)?;
            json!({
                "algorithm": algorithm,
                "target": r.target,
                "markov_blanket": r.blanket,
                "trace": r.trace,
                "wall_time": r.wall_time,
            })
        }
        _ => unreachable!("checked"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferRequest {
    pub graph: CausalGraph,
    pub target: String,
    pub treatments: Vec<Treatment>,
    /// Condition values for a conditional effect.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub conditions: BTreeMap<String, f64>,
    #[serde(default)]
    pub prediction_model: PredictionModel,
    #[serde(default)]
    pub condition_prediction_model: PredictionModel,
}

/// ATE, or CATE when conditions are given. The data kind follows the graph.
pub fn infer(data: &TabularDataset, request: &InferRequest, pool: &WorkerPool) -> Result<Value> {
    if request.treatments.is_empty() {
        return Err(Error::InvalidArgument("at least one treatment is required".into()));
    }
    let dataset = match request.graph.kind() {
        causalis::GraphKind::Tabular => Dataset::Tabular(data.clone()),
        causalis::GraphKind::TimeSeries => Dataset::TimeSeries(TimeSeriesDataset::single(data.clone())),
    };
    let config = InferenceConfig {
        prediction_model: request.prediction_model,
        pool: pool.clone(),
        ..InferenceConfig::default()
    };
    let vars: Vec<&str> = request.treatments.iter().map(|t| t.var_name.as_str()).collect();
    let scm = FittedScm::fit(&request.graph, &dataset, &request.target, &vars, &config)?;
    let warnings = scm.support_warnings(&request.treatments);
    if request.conditions.is_empty() {
        let r = scm.ate(&request.treatments)?;
        Ok(json!({
            "target": request.target,
            "ate": r.ate,
            "treated_mean": r.treated_mean,
            "control_mean": r.control_mean,
            "warnings": warnings,
        }))
    } else {
        let conditions: Vec<(String, f64)> = request.conditions.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let r = scm.cate(&request.treatments, &conditions, request.condition_prediction_model)?;
        Ok(json!({
            "target": request.target,
            "conditions": request.conditions,
            "cate": r.cate,
            "treated": r.treated,
            "control": r.control,
            "warnings": warnings,
        }))
    }
}

pub fn counterfactual(
    data: &TabularDataset,
    graph: &CausalGraph,
    target: &str,
    sample: &BTreeMap<String, f64>,
    intervention: &BTreeMap<String, f64>,
    model: PredictionModel,
    pool: &WorkerPool,
) -> Result<Value> {
    let config = InferenceConfig {
        prediction_model: model,
        pool: pool.clone(),
        ..InferenceConfig::default()
    };
    let value = causalis::inference::counterfactual(graph, data, target, sample, intervention, &config)?;
    Ok(json!({ "target": target, "counterfactual": value }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcaParams {
    #[serde(default = "default_threshold")]
    pub pvalue_threshold: f64,
    #[serde(default = "default_max_cond")]
    pub max_condition_set_size: Option<usize>,
    #[serde(default)]
    pub return_graph: bool,
    #[serde(default)]
    pub prior_knowledge: PriorKnowledge,
}

impl Default for RcaParams {
    fn default() -> Self {
        Self {
            pvalue_threshold: default_threshold(),
            max_condition_set_size: default_max_cond(),
            return_graph: false,
            prior_knowledge: PriorKnowledge::default(),
        }
    }
}

fn default_threshold() -> f64 {
    0.05
}

fn default_max_cond() -> Option<usize> {
    Some(4)
}

pub fn run_rca(data: &TabularDataset, mode: RcaMode, context: &str, params: &RcaParams, pool: &WorkerPool) -> Result<Value> {
    check_prior(&params.prior_knowledge)?;
    let config = RcaConfig {
        pvalue_threshold: params.pvalue_threshold,
        max_condition_set_size: params.max_condition_set_size,
        return_graph: params.return_graph,
        pool: pool.clone(),
        ..RcaConfig::default()
    };
    let r = rca(data, context, mode, &params.prior_knowledge, &config)?;
    Ok(serde_json::to_value(r).expect("rca result serializes"))
}

/// Cells run on `pool`; each algorithm call is single-worker.
pub fn benchmark(config: &BenchmarkConfig, pool: &WorkerPool) -> Result<Value> {
    config.validate()?;
    let report = run_benchmark(config, &config.builtin_algorithms()?, &[], pool)?;
    Ok(serde_json::to_value(report).expect("report serializes"))
}

/// `VAR=treat:control`
pub fn parse_treatment(text: &str) -> Result<Treatment> {
    let bad = || Error::InvalidArgument(format!("treatment `{text}` is not of the form VAR=treat:control"));
    let (var, values) = text.split_once('=').ok_or_else(bad)?;
    let (t, c) = values.split_once(':').ok_or_else(bad)?;
    Ok(Treatment::new(
        var.trim(),
        t.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    ))
}

/// `VAR=value`
pub fn parse_assignment(text: &str) -> Result<(String, f64)> {
    let bad = || Error::InvalidArgument(format!("`{text}` is not of the form VAR=value"));
    let (var, value) = text.split_once('=').ok_or_else(bad)?;
    Ok((var.trim().to_owned(), value.trim().parse().map_err(|_| bad())?))
}

/// Lines `from -> to [lag] strength pvalue`, plus undirected edges.
pub fn edge_table(graph: &CausalGraph) -> String {
    let names = graph.var_names();
    let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    let mut out = String::from("from\tto\tlag\ttype\tstrength\tpvalue\n");
    for e in graph.directed_edges() {
        let info = graph.edge_info(e.from, e.lag, e.to).cloned().unwrap_or_default();
        out.push_str(&format!(
            "{}\t{}\t{}\tdirected\t{}\t{}\n",
            names[e.from],
            names[e.to],
            e.lag,
            fmt(info.strength),
            fmt(info.pvalue)
        ));
    }
    for (a, b) in graph.undirected_edges() {
        let info = graph.undirected_info(a, b).cloned().unwrap_or_default();
        out.push_str(&format!(
            "{}\t{}\t0\tundirected\t{}\t{}\n",
            names[a],
            names[b],
            fmt(info.strength),
            fmt(info.pvalue)
        ));
    }
    out
}

/// Variables named anywhere in the prior knowledge but absent from the data.
pub fn unknown_prior_variables(pk: &PriorKnowledge, names: &[String]) -> BTreeSet<String> {
    let known: BTreeSet<&String> = names.iter().collect();
    let mut all: BTreeSet<String> = BTreeSet::new();
    for rel in [&pk.forbidden_links, &pk.existing_links, &pk.forbidden_co_parents, &pk.existing_co_parents] {
        for (k, vs) in rel {
            all.insert(k.clone());
            all.extend(vs.iter().cloned());
        }
    }
    all.extend(pk.root_variables.iter().cloned());
    all.extend(pk.leaf_variables.iter().cloned());
    all.into_iter().filter(|v| !known.contains(v)).collect()
}

pub fn shared_pool(workers: usize) -> WorkerPool {
    if workers == 1 {
        WorkerPool::sequential()
    } else {
        WorkerPool::new(workers)
    }
}

pub type SharedData = Arc<TabularDataset>;
