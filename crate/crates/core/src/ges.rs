//! Greedy equivalence search over CPDAGs with a Gaussian BIC score.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, EdgeInfo, GraphKind};
use crate::linalg::RIDGE;
use crate::pdag::Pdag;
use crate::pool::WorkerPool;
use crate::result::DiscoveryResult;

/// Minimum score gain for an operator to count as an improvement.
const MIN_GAIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GesPhase {
    Forward,
    Backward,
    Turning,
}

impl GesPhase {
    pub const ALL: [GesPhase; 3] = [GesPhase::Forward, GesPhase::Backward, GesPhase::Turning];
}

impl fmt::Display for GesPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GesPhase::Forward => "forward",
            GesPhase::Backward => "backward",
            GesPhase::Turning => "turning",
        })
    }
}

impl FromStr for GesPhase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "forward" => Ok(GesPhase::Forward),
            "backward" => Ok(GesPhase::Backward),
            "turning" => Ok(GesPhase::Turning),
            other => Err(Error::invalid(format!("unknown GES phase `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GesConfig {
    /// Run once each, in the given order.
    pub phases: Vec<GesPhase>,
    /// Starting CPDAG as an adjacency matrix: `[i][j] != 0` alone is `i -> j`,
    /// both directions nonzero is `i - j`.
    pub initial: Option<Vec<Vec<i64>>>,
    pub pool: WorkerPool,
}

impl Default for GesConfig {
    fn default() -> Self {
        Self {
            phases: GesPhase::ALL.to_vec(),
            initial: None,
            pool: WorkerPool::sequential(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GesResult {
    pub adjacency: Vec<Vec<i64>>,
    pub score: f64,
    pub graph: CausalGraph,
    /// Total score after every accepted operator.
    pub trace: Vec<f64>,
    pub wall_time: f64,
}

impl GesResult {
    pub fn into_discovery(self) -> DiscoveryResult {
        DiscoveryResult {
            graph: self.graph,
            removed_by: Vec::new(),
            wall_time: self.wall_time,
        }
    }
}

/// Gaussian BIC from the sample covariance: `-n ln(RSS/n) - |parents| ln n`.
#[derive(Debug, Clone)]
pub struct BicScore {
    cov: DMatrix<f64>,
    samples: f64,
}

impl BicScore {
    pub fn new(data: &TabularDataset) -> Result<Self> {
        let cols: Vec<usize> = (0..data.n_vars()).collect();
        let rows = data.complete_rows(&cols);
        let t = rows.len();
        if t < 2 {
            return Err(Error::InsufficientSamples {
                context: "GES".into(),
                required: 2,
                available: t,
            });
        }
        let n = cols.len();
        let means: Vec<f64> = cols
            .iter()
            .map(|&c| rows.iter().map(|&r| data.column(c)[r]).sum::<f64>() / t as f64)
            .collect();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            rows.iter()
                .map(|&r| (data.column(i)[r] - means[i]) * (data.column(j)[r] - means[j]))
                .sum::<f64>()
                / t as f64
        });
        Ok(Self { cov, samples: t as f64 })
    }

    pub fn local(&self, node: usize, parents: &BTreeSet<usize>) -> f64 {
        let n = self.samples;
        let var = self.cov[(node, node)];
        let resid = if parents.is_empty() {
            var
        } else {
            let p: Vec<usize> = parents.iter().copied().collect();
            let k = p.len();
            let mut s_pp = DMatrix::from_fn(k, k, |a, b| self.cov[(p[a], p[b])]);
            let s_py = DVector::from_fn(k, |a, _| self.cov[(p[a], node)]);
            let chol = s_pp.clone().cholesky().or_else(|| {
                for i in 0..k {
                    s_pp[(i, i)] += RIDGE;
                }
                s_pp.cholesky()
            });
            match chol {
                Some(c) => var - s_py.dot(&c.solve(&s_py)),
                None => var,
            }
        };
        -n * resid.max(1e-300).ln() - parents.len() as f64 * n.ln()
    }

    /// Sum of local scores of a DAG.
    pub fn total(&self, dag: &Pdag) -> f64 {
        (0..dag.n()).map(|v| self.local(v, &dag.parents(v))).sum()
    }
}

#[derive(Debug, Clone)]
struct Operator {
    gain: f64,
    from: usize,
    to: usize,
    /// `T` for insert, `H` for delete.
    set: BTreeSet<usize>,
}

fn better(candidate: &Option<Operator>, gain: f64) -> bool {
    gain > MIN_GAIN && candidate.as_ref().is_none_or(|c| gain > c.gain)
}

fn subsets(items: &BTreeSet<usize>) -> impl Iterator<Item = BTreeSet<usize>> + '_ {
    (0..=items.len()).flat_map(move |k| items.iter().copied().combinations(k).map(BTreeSet::from_iter))
}

fn best_insert(g: &Pdag, score: &BicScore, x: usize, y: usize) -> Option<Operator> {
    let adj_x = g.adjacents(x);
    let ny = g.neighbors(y);
    let na: BTreeSet<usize> = ny.intersection(&adj_x).copied().collect();
    let free: BTreeSet<usize> = ny.difference(&adj_x).copied().filter(|&t| t != x).collect();
    let pa = g.parents(y);
    let mut best: Option<Operator> = None;
    for t in subsets(&free) {
        let cond: BTreeSet<usize> = na.union(&t).copied().collect();
        if !g.is_clique(&cond) || g.has_semi_directed_path(y, x, &cond) {
            continue;
        }
        let mut base: BTreeSet<usize> = cond.union(&pa).copied().collect();
        let without = score.local(y, &base);
        base.insert(x);
        let gain = score.local(y, &base) - without;
        if better(&best, gain) {
            best = Some(Operator { gain, from: x, to: y, set: t });
        }
    }
    best
}

fn best_delete(g: &Pdag, score: &BicScore, x: usize, y: usize) -> Option<Operator> {
    let na: BTreeSet<usize> = g.neighbors(y).intersection(&g.adjacents(x)).copied().collect();
    let mut pa = g.parents(y);
    pa.remove(&x);
    let mut best: Option<Operator> = None;
    for h in subsets(&na) {
        let rest: BTreeSet<usize> = na.difference(&h).copied().collect();
        if !g.is_clique(&rest) {
            continue;
        }
        let mut base: BTreeSet<usize> = rest.union(&pa).copied().collect();
        let without = score.local(y, &base);
        base.insert(x);
        let gain = without - score.local(y, &base);
        if better(&best, gain) {
            best = Some(Operator { gain, from: x, to: y, set: h });
        }
    }
    best
}

fn pick(ops: Vec<Option<Operator>>) -> Option<Operator> {
    // candidates arrive in (from, to) order, so strict comparison keeps the
    // lexicographically smallest among ties
    let mut best: Option<Operator> = None;
    for op in ops.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| op.gain > b.gain) {
            best = Some(op);
        }
    }
    best
}

fn complete(g: &Pdag) -> Result<Pdag> {
    g.to_cpdag()
        .ok_or_else(|| Error::invalid("GES produced a PDAG without a consistent extension"))
}

fn forward(g: &mut Pdag, score: &BicScore, pool: &WorkerPool, trace: &mut Vec<f64>) -> Result<()> {
    let n = g.n();
    loop {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| x != y && !g.adjacent(x, y))
            .collect();
        let Some(op) = pick(pool.map(&pairs, |&(x, y)| best_insert(g, score, x, y))) else {
            return Ok(());
        };
        g.add_directed(op.from, op.to);
        for &t in &op.set {
            g.add_directed(t, op.to);
        }
        *g = complete(g)?;
        trace.push(total(g, score)?);
    }
}

fn backward(g: &mut Pdag, score: &BicScore, pool: &WorkerPool, trace: &mut Vec<f64>) -> Result<()> {
    let n = g.n();
    loop {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| g.directed(x, y) || g.undirected(x, y))
            .collect();
        let Some(op) = pick(pool.map(&pairs, |&(x, y)| best_delete(g, score, x, y))) else {
            return Ok(());
        };
        let (x, y) = (op.from, op.to);
        g.remove(x, y);
        for &h in &op.set {
            g.add_directed(y, h);
            if g.undirected(x, h) {
                g.add_directed(x, h);
            }
        }
        *g = complete(g)?;
        trace.push(total(g, score)?);
    }
}

/// Single-edge reversals in a consistent extension, accepted while the score
/// strictly improves.
fn turning(g: &mut Pdag, score: &BicScore, pool: &WorkerPool, trace: &mut Vec<f64>) -> Result<()> {
    let n = g.n();
    loop {
        let dag = g
            .dag_extension()
            .ok_or_else(|| Error::invalid("GES state has no consistent extension"))?;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .filter(|&(x, y)| dag.directed(x, y))
            .collect();
        let ops = pool.map(&edges, |&(x, y)| {
            let mut without = dag.clone();
            without.remove(x, y);
            if without.has_directed_path(x, y) {
                return None;
            }
            let pa_y = dag.parents(y);
            let pa_x = dag.parents(x);
            let mut pa_y_rev = pa_y.clone();
            pa_y_rev.remove(&x);
            let mut pa_x_rev = pa_x.clone();
            pa_x_rev.insert(y);
            let gain = score.local(y, &pa_y_rev) + score.local(x, &pa_x_rev)
                - score.local(y, &pa_y)
                - score.local(x, &pa_x);
            (gain > MIN_GAIN).then(|| Operator { gain, from: x, to: y, set: BTreeSet::new() })
        });
        let Some(op) = pick(ops) else {
            return Ok(());
        };
        let mut next = dag;
        next.add_directed(op.to, op.from);
        *g = Pdag::cpdag_of_dag(&next);
        trace.push(total(g, score)?);
    }
}

fn total(g: &Pdag, score: &BicScore) -> Result<f64> {
    let dag = g
        .dag_extension()
        .ok_or_else(|| Error::invalid("GES state has no consistent extension"))?;
    Ok(score.total(&dag))
}

pub fn ges(data: &TabularDataset, config: &GesConfig) -> Result<GesResult> {
    let start = Instant::now();
    let n = data.n_vars();
    let score = BicScore::new(data)?;
    let mut g = match &config.initial {
        None => Pdag::new(n),
        Some(adj) => {
            let g = Pdag::from_adjacency(adj)
                .filter(|g| g.n() == n)
                .ok_or_else(|| Error::invalid("initial graph must be a square adjacency matrix over the dataset's variables with a zero diagonal"))?;
            if g.to_cpdag().as_ref() != Some(&g) {
                return Err(Error::invalid("initial graph is not a valid CPDAG"));
            }
            g
        }
    };
    let mut trace = vec![total(&g, &score)?];
    for phase in &config.phases {
        match phase {
            GesPhase::Forward => forward(&mut g, &score, &config.pool, &mut trace)?,
            GesPhase::Backward => backward(&mut g, &score, &config.pool, &mut trace)?,
            GesPhase::Turning => turning(&mut g, &score, &config.pool, &mut trace)?,
        }
    }

    let mut graph = CausalGraph::new(GraphKind::Tabular, data.var_names().to_vec());
    for x in 0..n {
        for y in 0..n {
            if g.directed(x, y) {
                graph.add_edge(x, 0, y, EdgeInfo::default())?;
            } else if x < y && g.undirected(x, y) {
                graph.add_undirected(x, y, EdgeInfo::default())?;
            }
        }
    }
    Ok(GesResult {
        adjacency: g.to_adjacency(),
        score: *trace.last().expect("trace starts non-empty"),
        graph,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
