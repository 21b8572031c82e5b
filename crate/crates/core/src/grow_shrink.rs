//! Markov blanket discovery by growth and shrink phases.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ci::{PartialCorrelation, SharedCITest};
use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::prior::{Constraints, PriorKnowledge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Grow,
    Shrink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub phase: Phase,
    pub variable: String,
    pub pvalue: f64,
    /// Whether the variable is in the blanket after this step.
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovBlanketResult {
    pub target: String,
    /// In insertion order.
    pub blanket: Vec<String>,
    pub trace: Vec<TraceStep>,
    pub wall_time: f64,
}

impl MarkovBlanketResult {
    pub fn blanket_set(&self) -> BTreeSet<&str> {
        self.blanket.iter().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GrowShrinkConfig {
    pub pvalue_threshold: f64,
    /// Shrink conditions on the blanket as it shrinks rather than on the
    /// blanket at shrink start.
    pub update_shrink: bool,
    pub ci_test: SharedCITest,
}

impl Default for GrowShrinkConfig {
    fn default() -> Self {
        Self {
            pvalue_threshold: 0.05,
            update_shrink: true,
            ci_test: std::sync::Arc::new(PartialCorrelation),
        }
    }
}

pub fn grow_shrink(
    data: &TabularDataset,
    target: &str,
    pk: &PriorKnowledge,
    config: &GrowShrinkConfig,
) -> Result<MarkovBlanketResult> {
    let start = Instant::now();
    let t = data.index_of(target)?;
    let names = data.var_names();
    let constraints = Constraints::build(pk, names)?;
    let test = |v: usize, z: &[usize]| {
        config.ci_test.test(data, t, v, z).map_err(|e| Error::CiTest {
            x: names[t].clone(),
            y: names[v].clone(),
            source: Box::new(e),
        })
    };

    let mut locked: BTreeSet<usize> = constraints.existing_co_parents(t).clone();
    for v in 0..data.n_vars() {
        if constraints.required(v, t) || constraints.required(t, v) {
            locked.insert(v);
        }
    }
    locked.remove(&t);
    let mut blanket: Vec<usize> = locked.iter().copied().collect();

    let excluded = |v: usize| {
        constraints.forbidden_co_parents(t).contains(&v) && !constraints.allowed(v, t) && !constraints.allowed(t, v)
    };
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for v in 0..data.n_vars() {
        if v != t && !locked.contains(&v) && !excluded(v) {
            candidates.push((v, test(v, &[])?.statistic.abs()));
        }
    }
    candidates.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| names[a.0].cmp(&names[b.0]))
    });

    let mut trace = Vec::new();
    loop {
        let mut added = false;
        for &(v, _) in &candidates {
            if blanket.contains(&v) {
                continue;
            }
            let p = test(v, &blanket)?.pvalue;
            let dependent = p <= config.pvalue_threshold;
            trace.push(TraceStep {
                phase: Phase::Grow,
                variable: names[v].clone(),
                pvalue: p,
                kept: dependent,
            });
            if dependent {
                blanket.push(v);
                added = true;
            }
        }
        if !added {
            break;
        }
    }

    let frozen = blanket.clone();
    for &v in &frozen {
        if locked.contains(&v) {
            continue;
        }
        let basis = if config.update_shrink { &blanket } else { &frozen };
        let others: Vec<usize> = basis.iter().copied().filter(|&u| u != v).collect();
        let p = test(v, &others)?.pvalue;
        let independent = p > config.pvalue_threshold;
        trace.push(TraceStep {
            phase: Phase::Shrink,
            variable: names[v].clone(),
            pvalue: p,
            kept: !independent,
        });
        if independent {
            blanket.retain(|&u| u != v);
        }
    }

    Ok(MarkovBlanketResult {
        target: target.to_owned(),
        blanket: blanket.iter().map(|&v| names[v].clone()).collect(),
        trace,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
