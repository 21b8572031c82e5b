//! Root cause analysis. A context (or domain) variable is treated as an
//! intervention on the root cause, so the root causes are its neighbours in
//! the learned skeleton.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ci::{DiscreteCITest, PartialCorrelation, SharedCITest};
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::kmeans::kmeans_1d;
use crate::pc::{pc_tabular, PcConfig};
use crate::pool::WorkerPool;
use crate::prior::PriorKnowledge;

#[derive(Debug, Clone)]
pub struct RcaConfig {
    pub pvalue_threshold: f64,
    pub max_condition_set_size: Option<usize>,
    pub return_graph: bool,
    /// Clusters per continuous column in the tabular detector.
    pub clusters: usize,
    pub seed: u64,
    pub pool: WorkerPool,
}

impl Default for RcaConfig {
    fn default() -> Self {
        Self {
            pvalue_threshold: 0.05,
            max_condition_set_size: Some(4),
            return_graph: false,
            clusters: 5,
            seed: 0,
            pool: WorkerPool::sequential(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcaResult {
    pub root_causes: BTreeSet<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub graph: Option<CausalGraph>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RcaMode {
    TimeSeries,
    Tabular,
}

impl std::str::FromStr for RcaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "timeseries" | "time-series" => Ok(RcaMode::TimeSeries),
            "tabular" => Ok(RcaMode::Tabular),
            other => Err(Error::invalid(format!("unknown rca mode `{other}`"))),
        }
    }
}

pub fn rca(data: &TabularDataset, context: &str, mode: RcaMode, pk: &PriorKnowledge, config: &RcaConfig) -> Result<RcaResult> {
    match mode {
        RcaMode::TimeSeries => root_cause_timeseries(data, context, pk, config),
        RcaMode::Tabular => distribution_shift_tabular(data, context, pk, config),
    }
}

/// Aligned metric samples plus a context column (e.g. an anomaly indicator).
pub fn root_cause_timeseries(
    data: &TabularDataset,
    context: &str,
    pk: &PriorKnowledge,
    config: &RcaConfig,
) -> Result<RcaResult> {
    let c = data.index_of(context)?;
    let observed: Vec<f64> = data.column(c).iter().copied().filter(|v| !v.is_nan()).collect();
    if observed.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("context variable `{context}` is constant")));
    }
    run(data, context, pk, config, Arc::new(PartialCorrelation))
}

/// Samples pooled from several domains, indexed by a discrete domain column.
pub fn distribution_shift_tabular(
    data: &TabularDataset,
    domain: &str,
    pk: &PriorKnowledge,
    config: &RcaConfig,
) -> Result<RcaResult> {
    let d = data.index_of(domain)?;
    let mut domains: Vec<f64> = data.column(d).iter().copied().filter(|v| !v.is_nan()).collect();
    if domains.iter().any(|v| v.fract() != 0.0) {
        return Err(Error::invalid(format!("domain index `{domain}` must be discrete")));
    }
    domains.sort_by(f64::total_cmp);
    domains.dedup();
    if domains.len() < 2 {
        return Err(Error::invalid(format!("domain index `{domain}` has a single value")));
    }
    if config.clusters < 2 {
        return Err(Error::invalid("at least two clusters are required"));
    }
    let columns: Vec<Vec<f64>> = (0..data.n_vars())
        .map(|j| {
            if j == d {
                data.column(j).to_vec()
            } else {
                kmeans_1d(data.column(j), config.clusters, config.seed)
            }
        })
        .collect();
    let discrete = TabularDataset::from_columns(data.var_names().to_vec(), columns)?;
    run(&discrete, domain, pk, config, Arc::new(DiscreteCITest::default()))
}

fn run(data: &TabularDataset, context: &str, pk: &PriorKnowledge, config: &RcaConfig, ci_test: SharedCITest) -> Result<RcaResult> {
    let mut pk = pk.clone();
    pk.root_variables.insert(context.to_owned());
    if !pk.var_names.is_empty() {
        pk.var_names.insert(context.to_owned());
    }
    let pc = PcConfig {
        pvalue_threshold: config.pvalue_threshold,
        max_condition_set_size: config.max_condition_set_size,
        ci_test,
        pool: config.pool.clone(),
        ..PcConfig::default()
    };
    let graph = pc_tabular(data, &pk, &pc)?.graph;
    let c = graph.index_of(context)?;
    let root_causes = graph
        .neighbors(c)
        .into_iter()
        .filter(|&v| v != c)
        .map(|v| graph.var_names()[v].clone())
        .collect();
    Ok(RcaResult {
        root_causes,
        graph: config.return_graph.then_some(graph),
    })
}
