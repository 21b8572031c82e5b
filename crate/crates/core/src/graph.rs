//! Causal graphs over a fixed, ordered variable universe.
//!
//! Edges point from parent to child. Time-series edges carry a lag `<= 0`
//! (the parent is observed at `t + lag`); tabular edges always have lag 0 and
//! may be undirected when orientation is not identifiable.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    #[serde(rename = "tabular")]
    Tabular,
    #[serde(rename = "timeseries")]
    TimeSeries,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Tabular => "tabular",
            GraphKind::TimeSeries => "timeseries",
        })
    }
}

/// A parent of some child: variable index and lag (`<= 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParentRef {
    pub var: usize,
    pub lag: i32,
}

impl ParentRef {
    pub fn new(var: usize, lag: i32) -> Self {
        Self { var, lag }
    }
}

/// Strength and p-value attached to an edge by the algorithm that found it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeInfo {
    pub strength: Option<f64>,
    pub pvalue: Option<f64>,
}

impl EdgeInfo {
    pub fn new(strength: f64, pvalue: f64) -> Self {
        Self {
            strength: Some(strength),
            pvalue: Some(pvalue),
        }
    }
}

/// Identity of a directed edge: `(parent, lag, child)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub from: usize,
    pub lag: i32,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CausalGraph {
    kind: GraphKind,
    var_names: Vec<String>,
    parents: Vec<BTreeMap<ParentRef, EdgeInfo>>,
    undirected: BTreeMap<(usize, usize), EdgeInfo>,
}

impl CausalGraph {
    pub fn new(kind: GraphKind, var_names: Vec<String>) -> Self {
        let n = var_names.len();
        Self {
            kind,
            var_names,
            parents: vec![BTreeMap::new(); n],
            undirected: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.var_names
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    fn check_var(&self, v: usize) -> Result<()> {
        if v < self.n_vars() {
            Ok(())
        } else {
            Err(Error::invalid(format!("variable index {v} out of range")))
        }
    }

    /// Adds `parent(t+lag) -> child(t)`, replacing any undirected edge
    /// between the two.
    pub fn add_edge(&mut self, parent: usize, lag: i32, child: usize, info: EdgeInfo) -> Result<()> {
        self.check_var(parent)?;
        self.check_var(child)?;
        if lag > 0 {
            return Err(Error::invalid(format!(
                "edge {} -> {} has positive lag {lag}",
                self.var_names[parent], self.var_names[child]
            )));
        }
        if self.kind == GraphKind::Tabular && lag != 0 {
            return Err(Error::invalid("tabular edges must have lag 0"));
        }
        if lag == 0 && parent == child {
            return Err(Error::invalid(format!(
                "instantaneous self-loop on `{}`",
                self.var_names[parent]
            )));
        }
        if lag == 0 {
            self.undirected.remove(&ordered(parent, child));
        }
        self.parents[child].insert(ParentRef::new(parent, lag), info);
        Ok(())
    }

    /// Adds `a -- b` (tabular only), replacing directed edges in either direction.
    pub fn add_undirected(&mut self, a: usize, b: usize, info: EdgeInfo) -> Result<()> {
        self.check_var(a)?;
        self.check_var(b)?;
        if self.kind != GraphKind::Tabular {
            return Err(Error::invalid("undirected edges are only allowed in tabular graphs"));
        }
        if a == b {
            return Err(Error::invalid("undirected self-loop"));
        }
        self.parents[a].remove(&ParentRef::new(b, 0));
        self.parents[b].remove(&ParentRef::new(a, 0));
        self.undirected.insert(ordered(a, b), info);
        Ok(())
    }

    pub fn remove_edge(&mut self, parent: usize, lag: i32, child: usize) -> bool {
        self.parents
            .get_mut(child)
            .is_some_and(|p| p.remove(&ParentRef::new(parent, lag)).is_some())
    }

    pub fn parents(&self, child: usize) -> impl Iterator<Item = (ParentRef, &EdgeInfo)> + '_ {
        self.parents[child].iter().map(|(p, i)| (*p, i))
    }

    pub fn parent_refs(&self, child: usize) -> Vec<ParentRef> {
        self.parents[child].keys().copied().collect()
    }

    /// Parents at lag 0 only.
    pub fn instantaneous_parents(&self, child: usize) -> Vec<usize> {
        self.parents[child]
            .keys()
            .filter(|p| p.lag == 0)
            .map(|p| p.var)
            .collect()
    }

    pub fn has_edge(&self, parent: usize, lag: i32, child: usize) -> bool {
        self.parents
            .get(child)
            .is_some_and(|p| p.contains_key(&ParentRef::new(parent, lag)))
    }

    pub fn has_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains_key(&ordered(a, b))
    }

    pub fn edge_info(&self, parent: usize, lag: i32, child: usize) -> Option<&EdgeInfo> {
        self.parents.get(child)?.get(&ParentRef::new(parent, lag))
    }

    /// Any lag-0 connection between `a` and `b`, directed either way or undirected.
    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, 0, b) || self.has_edge(b, 0, a) || self.has_undirected(a, b)
    }

    /// Lag-0 neighbours regardless of edge marks.
    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        (0..self.n_vars())
            .filter(|&u| u != v && self.is_adjacent(u, v))
            .collect()
    }

    pub fn directed_edges(&self) -> Vec<EdgeKey> {
        let mut edges = Vec::new();
        for (child, ps) in self.parents.iter().enumerate() {
            for p in ps.keys() {
                edges.push(EdgeKey {
                    from: p.var,
                    lag: p.lag,
                    to: child,
                });
            }
        }
        edges
    }

    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        self.undirected.keys().copied().collect()
    }

    pub fn undirected_info(&self, a: usize, b: usize) -> Option<&EdgeInfo> {
        self.undirected.get(&ordered(a, b))
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(BTreeMap::len).sum::<usize>() + self.undirected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count() == 0
    }

    pub fn max_lag(&self) -> usize {
        self.parents
            .iter()
            .flat_map(|p| p.keys())
            .map(|p| p.lag.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Variables reachable from `sources` along directed edges of any lag
    /// (the summary graph), excluding the sources unless they reach themselves.
    pub fn descendants(&self, sources: &[usize]) -> BTreeSet<usize> {
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.n_vars()];
        for e in self.directed_edges() {
            children[e.from].push(e.to);
        }
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = sources.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &c in &children[v] {
                if seen.insert(c) {
                    queue.push_back(c);
                }
            }
        }
        seen
    }

    /// Variables from which `target` is reachable along directed edges.
    pub fn ancestors(&self, target: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([target]);
        while let Some(v) = queue.pop_front() {
            for p in self.parents[v].keys() {
                if seen.insert(p.var) {
                    queue.push_back(p.var);
                }
            }
        }
        seen
    }

    /// Topological order of the lag-0 directed subgraph (Kahn's algorithm,
    /// smallest index first). Undirected and lagged edges are ignored.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.n_vars();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (child, ps) in self.parents.iter().enumerate() {
            for p in ps.keys().filter(|p| p.lag == 0) {
                indegree[child] += 1;
                children[p.var].push(child);
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&v| indegree[v] > 0).unwrap_or(0);
            return Err(Error::Cyclic(self.var_names[stuck].clone()));
        }
        Ok(order)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_model()).expect("graph serialization is infallible")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_model()).expect("graph serialization is infallible")
    }

    pub fn to_json_model(&self) -> GraphJson {
        let mut edges = Vec::with_capacity(self.edge_count());
        for e in self.directed_edges() {
            let info = self.parents[e.to][&ParentRef::new(e.from, e.lag)];
            edges.push(EdgeJson {
                directed: true,
                from: self.var_names[e.from].clone(),
                lag: e.lag as i64,
                pvalue: info.pvalue,
                strength: info.strength,
                to: self.var_names[e.to].clone(),
            });
        }
        for (&(a, b), info) in &self.undirected {
            let (a, b) = if self.var_names[a] <= self.var_names[b] { (a, b) } else { (b, a) };
            edges.push(EdgeJson {
                directed: false,
                from: self.var_names[a].clone(),
                lag: 0,
                pvalue: info.pvalue,
                strength: info.strength,
                to: self.var_names[b].clone(),
            });
        }
        edges.sort_by(|x, y| {
            (&x.to, &x.from, x.lag, !x.directed).cmp(&(&y.to, &y.from, y.lag, !y.directed))
        });
        GraphJson {
            edges,
            kind: self.kind,
            variables: self.var_names.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: GraphJson = serde_json::from_str(text)?;
        Self::from_json_model(&model)
    }

    pub fn from_json_model(model: &GraphJson) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &model.variables {
            if !seen.insert(v) {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        let mut g = CausalGraph::new(model.kind, model.variables.clone());
        for e in &model.edges {
            let from = g.index_of(&e.from)?;
            let to = g.index_of(&e.to)?;
            if e.lag > 0 {
                return Err(Error::invalid(format!(
                    "edge {} -> {} has positive lag {}",
                    e.from, e.to, e.lag
                )));
            }
            let lag = i32::try_from(e.lag).map_err(|_| Error::invalid("lag out of range"))?;
            let info = EdgeInfo {
                strength: e.strength,
                pvalue: e.pvalue,
            };
            if e.directed {
                g.add_edge(from, lag, to, info)?;
            } else {
                if lag != 0 {
                    return Err(Error::invalid("undirected edges must have lag 0"));
                }
                g.add_undirected(from, to, info)?;
            }
        }
        Ok(g)
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Serialize for CausalGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_model().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CausalGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let model = GraphJson::deserialize(deserializer)?;
        Self::from_json_model(&model).map_err(serde::de::Error::custom)
    }
}

/// Wire form of a graph. Field order is alphabetical so that serialized
/// objects have sorted keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub edges: Vec<EdgeJson>,
    pub kind: GraphKind,
    pub variables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    #[serde(default = "default_true")]
    pub directed: bool,
    pub from: String,
    #[serde(default)]
    pub lag: i64,
    #[serde(default)]
    pub pvalue: Option<f64>,
    #[serde(default)]
    pub strength: Option<f64>,
    pub to: String,
}

fn default_true() -> bool {
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("V{i}")).collect()
    }

    #[test]
    fn empty_graph_json() {
        let g = CausalGraph::new(GraphKind::Tabular, vec!["a".into(), "b".into()]);
        assert_eq!(g.to_json(), r#"{"edges":[],"kind":"tabular","variables":["a","b"]}"#);
    }

    #[test]
    fn three_edge_round_trip() {
        let mut g = CausalGraph::new(GraphKind::TimeSeries, vars(3));
        g.add_edge(0, -1, 1, EdgeInfo::new(0.8, 1e-9)).unwrap();
        g.add_edge(1, -2, 2, EdgeInfo::default()).unwrap();
        g.add_edge(0, 0, 2, EdgeInfo::new(-0.3, 0.01)).unwrap();
        let text = g.to_json();
        let back = CausalGraph::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_bad_input() {
        let positive = r#"{"kind":"timeseries","variables":["a","b"],"edges":[{"from":"a","to":"b","lag":1}]}"#;
        assert!(CausalGraph::from_json(positive).unwrap_err().to_string().contains("positive lag"));
        let unknown = r#"{"kind":"tabular","variables":["a"],"edges":[{"from":"a","to":"z"}]}"#;
        assert!(matches!(CausalGraph::from_json(unknown), Err(Error::UnknownVariable(v)) if v == "z"));
        assert!(matches!(CausalGraph::from_json("{"), Err(Error::Json(_))));
    }

    #[test]
    fn lag_defaults_to_zero() {
        let text = r#"{"kind":"tabular","variables":["a","b"],"edges":[{"from":"a","to":"b","directed":true,"strength":null,"pvalue":null}]}"#;
        let g = CausalGraph::from_json(text).unwrap();
        assert!(g.has_edge(0, 0, 1));
    }

    #[test]
    fn directed_and_undirected_are_exclusive() {
        let mut g = CausalGraph::new(GraphKind::Tabular, vars(2));
        g.add_edge(0, 0, 1, EdgeInfo::default()).unwrap();
        g.add_undirected(0, 1, EdgeInfo::default()).unwrap();
        assert!(!g.has_edge(0, 0, 1));
        g.add_edge(1, 0, 0, EdgeInfo::default()).unwrap();
        assert!(!g.has_undirected(0, 1));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn topological_order_detects_cycles() {
        let mut g = CausalGraph::new(GraphKind::Tabular, vars(3));
        g.add_edge(2, 0, 1, EdgeInfo::default()).unwrap();
        g.add_edge(1, 0, 0, EdgeInfo::default()).unwrap();
        assert_eq!(g.topological_order().unwrap(), vec![2, 1, 0]);
        g.add_edge(0, 0, 2, EdgeInfo::default()).unwrap();
        assert!(matches!(g.topological_order(), Err(Error::Cyclic(_))));
    }
}
