//! PC-stable skeleton search with collider and Meek orientation (tabular),
//! and lagged parent search per target (time series).
//!
//! Within a level every CI test reads the adjacency frozen at the level start,
//! and conditioning sets are enumerated in lexicographic index order, so the
//! output does not depend on the number of workers.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use itertools::Itertools;

use crate::ci::{CITestResult, PartialCorrelation, SharedCITest};
use crate::data::{TabularDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, EdgeInfo, GraphKind};
use crate::pdag::Pdag;
use crate::pool::WorkerPool;
use crate::prior::{Constraints, PriorKnowledge};
use crate::result::{DiscoveryResult, Separation};

#[derive(Debug, Clone)]
pub struct PcConfig {
    pub pvalue_threshold: f64,
    /// `None` removes the bound.
    pub max_condition_set_size: Option<usize>,
    /// Time series only.
    pub max_lag: usize,
    pub ci_test: SharedCITest,
    /// Time series only.
    pub full_ci_fallback: bool,
    /// Tabular only.
    pub meek: bool,
    pub pool: WorkerPool,
}

impl Default for PcConfig {
    fn default() -> Self {
        Self {
            pvalue_threshold: 0.05,
            max_condition_set_size: Some(4),
            max_lag: 1,
            ci_test: std::sync::Arc::new(PartialCorrelation),
            full_ci_fallback: true,
            meek: true,
            pool: WorkerPool::sequential(),
        }
    }
}

impl PcConfig {
    fn validate(&self) -> Result<()> {
        if !(self.pvalue_threshold > 0.0 && self.pvalue_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "pvalue threshold {} is outside (0, 1)",
                self.pvalue_threshold
            )));
        }
        Ok(())
    }
}

enum Verdict {
    Kept(Option<CITestResult>),
    Removed(Vec<usize>),
}

fn run_test(
    config: &PcConfig,
    data: &TabularDataset,
    x: usize,
    y: usize,
    z: &[usize],
) -> Result<CITestResult> {
    config.ci_test.test(data, x, y, z).map_err(|e| Error::CiTest {
        x: data.var_names()[x].clone(),
        y: data.var_names()[y].clone(),
        source: Box::new(e),
    })
}

/// Tests `x` against `y` given each size-`level` subset of every pool in
/// turn, stopping at the first subset that separates them. A kept pair
/// reports its weakest (largest p-value) test of the level.
fn search_separation(
    config: &PcConfig,
    data: &TabularDataset,
    x: usize,
    y: usize,
    pools: &[Vec<usize>],
    level: usize,
) -> Result<Verdict> {
    let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut weakest: Option<CITestResult> = None;
    for pool in pools {
        for subset in pool.iter().copied().combinations(level) {
            if !tried.insert(subset.clone()) {
                continue;
            }
            let res = run_test(config, data, x, y, &subset)?;
            if res.pvalue > config.pvalue_threshold {
                return Ok(Verdict::Removed(subset));
            }
            if weakest.as_ref().is_none_or(|w| res.pvalue > w.pvalue) {
                weakest = Some(res);
            }
        }
    }
    Ok(Verdict::Kept(weakest))
}

struct Skeleton {
    adjacent: Vec<Vec<bool>>,
    info: BTreeMap<(usize, usize), CITestResult>,
    sepsets: BTreeMap<(usize, usize), Vec<usize>>,
}

fn tabular_skeleton(
    data: &TabularDataset,
    constraints: &Constraints,
    config: &PcConfig,
    focus: Option<usize>,
) -> Result<Skeleton> {
    let n = data.n_vars();
    let mut adjacent = vec![vec![false; n]; n];
    let mut locked = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                adjacent[i][j] = constraints.allowed(i, j) || constraints.allowed(j, i);
                locked[i][j] = constraints.required(i, j) || constraints.required(j, i);
            }
        }
    }
    let max_level = config
        .max_condition_set_size
        .unwrap_or(usize::MAX)
        .min(n.saturating_sub(2));

    let mut info = BTreeMap::new();
    let mut sepsets = BTreeMap::new();
    for level in 0..=max_level {
        let neighbours: Vec<Vec<usize>> = (0..n)
            .map(|v| (0..n).filter(|&u| adjacent[v][u]).collect())
            .collect();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .filter(|&(x, y)| adjacent[x][y] && !locked[x][y])
            .filter(|&(x, y)| focus.is_none_or(|t| t == x || t == y))
            .filter(|&(x, y)| neighbours[x].len() > level || neighbours[y].len() > level)
            .collect();
        if pairs.is_empty() {
            break;
        }
        let verdicts = config.pool.map(&pairs, |&(x, y)| {
            let pools: Vec<Vec<usize>> = [(x, y), (y, x)]
                .iter()
                .map(|&(a, b)| neighbours[a].iter().copied().filter(|&v| v != b).collect())
                .collect();
            search_separation(config, data, x, y, &pools, level)
        });
        for (&(x, y), verdict) in pairs.iter().zip(verdicts) {
            match verdict? {
                Verdict::Removed(sepset) => {
                    adjacent[x][y] = false;
                    adjacent[y][x] = false;
                    info.remove(&(x, y));
                    sepsets.insert((x, y), sepset);
                }
                Verdict::Kept(Some(res)) => {
                    info.insert((x, y), res);
                }
                Verdict::Kept(None) => {}
            }
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            if adjacent[x][y] && !info.contains_key(&(x, y)) && focus.is_none_or(|t| t == x || t == y) {
                info.insert((x, y), run_test(config, data, x, y, &[])?);
            }
        }
    }
    Ok(Skeleton { adjacent, info, sepsets })
}

fn edge_info(res: Option<&CITestResult>) -> EdgeInfo {
    res.map(|r| EdgeInfo::new(r.strength, r.pvalue)).unwrap_or_default()
}

/// Tabular PC. Edges that cannot be oriented remain undirected.
pub fn pc_tabular(data: &TabularDataset, pk: &PriorKnowledge, config: &PcConfig) -> Result<DiscoveryResult> {
    let start = Instant::now();
    config.validate()?;
    let n = data.n_vars();
    if n < 2 {
        return Err(Error::invalid("PC needs at least two variables"));
    }
    let constraints = Constraints::build(pk, data.var_names())?;
    let sk = tabular_skeleton(data, &constraints, config, None)?;

    let mut g = Pdag::new(n);
    for x in 0..n {
        for y in x + 1..n {
            if sk.adjacent[x][y] {
                g.add_undirected(x, y);
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            if !g.undirected(x, y) {
                continue;
            }
            let forced = constraints.required(x, y)
                || (constraints.allowed(x, y) && !constraints.allowed(y, x));
            if forced {
                g.add_directed(x, y);
            }
        }
    }
    for z in 0..n {
        let adj: Vec<usize> = g.adjacents(z).into_iter().collect();
        for (i, &x) in adj.iter().enumerate() {
            for &y in &adj[i + 1..] {
                if g.adjacent(x, y) {
                    continue;
                }
                let Some(sepset) = sk.sepsets.get(&(x.min(y), x.max(y))) else {
                    continue;
                };
                if sepset.contains(&z) {
                    continue;
                }
                if constraints.allowed(x, z) {
                    g.orient(x, z);
                }
                if constraints.allowed(y, z) {
                    g.orient(y, z);
                }
            }
        }
    }
    if config.meek {
        g.meek_closure();
    }

    let mut graph = CausalGraph::new(GraphKind::Tabular, data.var_names().to_vec());
    for x in 0..n {
        for y in 0..n {
            let info = edge_info(sk.info.get(&(x.min(y), x.max(y))));
            if g.directed(x, y) {
                graph.add_edge(x, 0, y, info)?;
            } else if x < y && g.undirected(x, y) {
                graph.add_undirected(x, y, info)?;
            }
        }
    }
    let names = data.var_names();
    let removed_by = sk
        .sepsets
        .iter()
        .map(|(&(x, y), s)| Separation {
            from: names[x].clone(),
            lag: 0,
            to: names[y].clone(),
            sepset: s.iter().map(|&v| names[v].clone()).collect(),
        })
        .collect();
    Ok(DiscoveryResult {
        graph,
        removed_by,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Candidate parents of one target as columns of the lagged design.
struct TargetSearch {
    target: usize,
    candidates: Vec<usize>,
    info: BTreeMap<usize, CITestResult>,
    sepsets: BTreeMap<usize, Vec<usize>>,
}

fn timeseries_search(
    design: &TabularDataset,
    n_vars: usize,
    constraints: &Constraints,
    targets: &[usize],
    config: &PcConfig,
) -> Result<Vec<TargetSearch>> {
    let mut searches: Vec<TargetSearch> = targets
        .iter()
        .map(|&y| TargetSearch {
            target: y,
            candidates: (1..=config.max_lag)
                .flat_map(|lag| (0..n_vars).map(move |x| (lag, x)))
                .filter(|&(_, x)| constraints.allowed(x, y))
                .map(|(lag, x)| lag * n_vars + x)
                .collect(),
            info: BTreeMap::new(),
            sepsets: BTreeMap::new(),
        })
        .collect();

    if let Some(max_level) = config.max_condition_set_size {
        for level in 0..=max_level {
            let tasks: Vec<(usize, usize)> = searches
                .iter()
                .enumerate()
                .filter(|(_, s)| s.candidates.len() > level)
                .flat_map(|(k, s)| s.candidates.iter().map(move |&c| (k, c)))
                .collect();
            if tasks.is_empty() {
                break;
            }
            let verdicts = config.pool.map(&tasks, |&(k, c)| {
                let s = &searches[k];
                let others: Vec<usize> = s.candidates.iter().copied().filter(|&o| o != c).collect();
                search_separation(config, design, c, s.target, &[others], level)
            });
            for (&(k, c), verdict) in tasks.iter().zip(verdicts) {
                let s = &mut searches[k];
                match verdict? {
                    Verdict::Removed(sepset) => {
                        s.candidates.retain(|&o| o != c);
                        s.info.remove(&c);
                        s.sepsets.insert(c, sepset);
                    }
                    Verdict::Kept(Some(res)) => {
                        s.info.insert(c, res);
                    }
                    Verdict::Kept(None) => {}
                }
            }
        }
    }

    let needs_full = |s: &TargetSearch| match config.max_condition_set_size {
        None => !s.candidates.is_empty(),
        Some(m) => config.full_ci_fallback && s.candidates.len() > m + 1,
    };
    let tasks: Vec<(usize, usize)> = searches
        .iter()
        .enumerate()
        .filter(|(_, s)| needs_full(s))
        .flat_map(|(k, s)| s.candidates.iter().map(move |&c| (k, c)))
        .collect();
    let results = config.pool.map(&tasks, |&(k, c)| {
        let s = &searches[k];
        let others: Vec<usize> = s.candidates.iter().copied().filter(|&o| o != c).collect();
        run_test(config, design, c, s.target, &others).map(|r| (r, others))
    });
    for (&(k, c), res) in tasks.iter().zip(results) {
        let (res, others) = res?;
        let s = &mut searches[k];
        if res.pvalue > config.pvalue_threshold {
            s.info.remove(&c);
            s.sepsets.insert(c, others);
        } else {
            s.info.insert(c, res);
        }
    }
    for s in &mut searches {
        let removed: BTreeSet<usize> = s.sepsets.keys().copied().collect();
        s.candidates.retain(|c| !removed.contains(c));
    }
    Ok(searches)
}

fn timeseries_result(
    data: &TimeSeriesDataset,
    pk: &PriorKnowledge,
    config: &PcConfig,
    targets: Option<&[usize]>,
) -> Result<DiscoveryResult> {
    let start = Instant::now();
    config.validate()?;
    if config.max_lag < 1 {
        return Err(Error::invalid("max_lag must be at least 1"));
    }
    let n = data.n_vars();
    let mut pk = pk.clone();
    pk.existing_links.clear();
    let constraints = Constraints::build(&pk, data.var_names())?;
    let design = data.lagged_design(config.max_lag)?;
    let all: Vec<usize> = (0..n).collect();
    let searches = timeseries_search(&design, n, &constraints, targets.unwrap_or(&all), config)?;

    let names = data.var_names();
    let design_names = design.var_names();
    let mut graph = CausalGraph::new(GraphKind::TimeSeries, names.to_vec());
    let mut removed_by = Vec::new();
    for s in &searches {
        for &c in &s.candidates {
            let (lag, x) = (c / n, c % n);
            graph.add_edge(x, -(lag as i32), s.target, edge_info(s.info.get(&c)))?;
        }
        for (&c, sepset) in &s.sepsets {
            removed_by.push(Separation {
                from: names[c % n].clone(),
                lag: -((c / n) as i32),
                to: names[s.target].clone(),
                sepset: sepset.iter().map(|&v| design_names[v].clone()).collect(),
            });
        }
    }
    Ok(DiscoveryResult {
        graph,
        removed_by,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Lagged-only PC over all targets.
pub fn pc_timeseries(data: &TimeSeriesDataset, pk: &PriorKnowledge, config: &PcConfig) -> Result<DiscoveryResult> {
    timeseries_result(data, pk, config, None)
}

/// Parents of a single time-series target; equal to that target's row of
/// [`pc_timeseries`].
pub fn pc_single_timeseries(
    data: &TimeSeriesDataset,
    target: &str,
    pk: &PriorKnowledge,
    config: &PcConfig,
) -> Result<DiscoveryResult> {
    let t = data.index_of(target)?;
    timeseries_result(data, pk, config, Some(&[t]))
}

/// Neighbourhood of a tabular target, reported as undirected edges.
pub fn pc_single_tabular(
    data: &TabularDataset,
    target: &str,
    pk: &PriorKnowledge,
    config: &PcConfig,
) -> Result<DiscoveryResult> {
    let start = Instant::now();
    config.validate()?;
    let t = data.index_of(target)?;
    let constraints = Constraints::build(pk, data.var_names())?;
    let sk = tabular_skeleton(data, &constraints, config, Some(t))?;
    let mut graph = CausalGraph::new(GraphKind::Tabular, data.var_names().to_vec());
    for v in 0..data.n_vars() {
        if v != t && sk.adjacent[t][v] {
            graph.add_undirected(t, v, edge_info(sk.info.get(&(t.min(v), t.max(v)))))?;
        }
    }
    let names = data.var_names();
    let removed_by = sk
        .sepsets
        .iter()
        .map(|(&(x, y), s)| Separation {
            from: names[x].clone(),
            lag: 0,
            to: names[y].clone(),
            sepset: s.iter().map(|&v| names[v].clone()).collect(),
        })
        .collect();
    Ok(DiscoveryResult {
        graph,
        removed_by,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
