use serde::{Deserialize, Serialize};

use crate::graph::CausalGraph;

/// A pair found independent, with the conditioning set that separated it.
/// Time-series conditioning variables use lagged names such as `x(t-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub from: String,
    pub lag: i32,
    pub to: String,
    pub sepset: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct DiscoveryResult {
    pub graph: CausalGraph,
    pub removed_by: Vec<Separation>,
    /// Seconds.
    pub wall_time: f64,
}

impl DiscoveryResult {
    pub fn new(graph: CausalGraph) -> Self {
        Self {
            graph,
            removed_by: Vec::new(),
            wall_time: 0.0,
        }
    }

    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &DiscoveryResult) -> bool {
        self.graph == other.graph && self.removed_by == other.removed_by
    }
}
