//! ICA-based discovery of a linear non-Gaussian acyclic model `x = Bx + e`.

use std::time::Instant;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, EdgeInfo, GraphKind};
use crate::linalg::{design, ols_with_inference, std_dev};
use crate::result::DiscoveryResult;

/// Largest variable count for which the causal order is searched exhaustively.
const EXHAUSTIVE_ORDER_LIMIT: usize = 8;

#[derive(Debug, Clone)]
pub struct LingamConfig {
    pub pvalue_threshold: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for LingamConfig {
    fn default() -> Self {
        Self {
            pvalue_threshold: 0.05,
            seed: 0,
            max_iter: 2000,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LingamResult {
    /// Variable indices, causes first.
    pub causal_order: Vec<usize>,
    /// `b[(i, j)]` is the direct effect of `j` on `i`; zero unless `j`
    /// precedes `i` in `causal_order`.
    pub b: DMatrix<f64>,
    /// P-values of the entries of `b`; 1 where no regression coefficient exists.
    pub pvalues: DMatrix<f64>,
    pub graph: CausalGraph,
    pub wall_time: f64,
}

impl LingamResult {
    pub fn into_discovery(self) -> DiscoveryResult {
        DiscoveryResult {
            graph: self.graph,
            removed_by: Vec::new(),
            wall_time: self.wall_time,
        }
    }
}

pub fn lingam(data: &TabularDataset, config: &LingamConfig) -> Result<LingamResult> {
    let start = Instant::now();
    let n = data.n_vars();
    let cols: Vec<usize> = (0..n).collect();
    let rows = data.complete_rows(&cols);
    let x = design(&cols.iter().map(|&c| data.column(c)).collect::<Vec<_>>(), &rows, false);
    let (causal_order, b, pvalues) = fit(&x, config)?;

    let mut graph = CausalGraph::new(GraphKind::Tabular, data.var_names().to_vec());
    for i in 0..n {
        for j in 0..n {
            if b[(i, j)] != 0.0 {
                graph.add_edge(j, 0, i, EdgeInfo::new(b[(i, j)], pvalues[(i, j)]))?;
            }
        }
    }
    Ok(LingamResult {
        causal_order,
        b,
        pvalues,
        graph,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Order, pruned coefficients and p-values for a samples-by-variables matrix.
pub(crate) fn fit(x: &DMatrix<f64>, config: &LingamConfig) -> Result<(Vec<usize>, DMatrix<f64>, DMatrix<f64>)> {
    let (t, n) = x.shape();
    if n == 0 {
        return Err(Error::invalid("LiNGAM needs at least one variable"));
    }
    if n == 1 {
        return Ok((vec![0], DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.0)));
    }
    if t <= n + 1 {
        return Err(Error::InsufficientSamples {
            context: "LiNGAM".into(),
            required: n + 2,
            available: t,
        });
    }
    // order search on unit-variance columns, so rescaling a column cannot change it
    let mut scaled = x.clone();
    for mut col in scaled.column_iter_mut() {
        let sd = std_dev(col.as_slice());
        if sd > 0.0 {
            col.scale_mut(1.0 / sd);
        }
    }
    let unmixing = ica_unmixing(&scaled, config)?;
    let order = causal_order(&unmixing);
    let (b, pvalues) = regress_on_predecessors(x, &order, config.pvalue_threshold)?;
    Ok((order, b, pvalues))
}

/// Unmixing matrix `W` with `s = W x` for centered `x`.
fn ica_unmixing(x: &DMatrix<f64>, config: &LingamConfig) -> Result<DMatrix<f64>> {
    let (t, n) = x.shape();
    let means = DVector::from_iterator(n, x.column_iter().map(|c| c.mean()));
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let cov = centered.transpose() * &centered / t as f64;
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    if eig.eigenvalues.iter().any(|&v| v <= 1e-12 * top.max(f64::MIN_POSITIVE)) {
        return Err(Error::invalid("LiNGAM input has linearly dependent columns"));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let whitening = inv_sqrt * eig.eigenvectors.transpose();
    let z = &whitening * centered.transpose();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut components: Vec<DVector<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut w = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        orthogonalize(&mut w, &components);
        w.normalize_mut();
        let mut converged = false;
        for _ in 0..config.max_iter {
            let projected = w.transpose() * &z;
            let g = projected.map(f64::tanh);
            let mean_dg = g.iter().map(|v| 1.0 - v * v).sum::<f64>() / t as f64;
            let mut next = &z * g.transpose() / t as f64 - &w * mean_dg;
            orthogonalize(&mut next, &components);
            next.normalize_mut();
            let change = (next.dot(&w).abs() - 1.0).abs();
            w = next;
            if change < config.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                algorithm: "FastICA",
                iterations: config.max_iter,
            });
        }
        components.push(w);
    }
    let rotation = DMatrix::from_fn(n, n, |i, j| components[i][j]);
    Ok(rotation * whitening)
}

fn orthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for b in basis {
        let d = w.dot(b);
        *w -= b * d;
    }
}

/// Causal order from an unmixing matrix: permute rows so the diagonal has no
/// small entries, normalize to a unit diagonal, and find the variable order
/// that makes `B = I - W` closest to lower triangular.
fn causal_order(unmixing: &DMatrix<f64>) -> Vec<usize> {
    let n = unmixing.nrows();
    let cost = DMatrix::from_fn(n, n, |i, j| 1.0 / unmixing[(i, j)].abs().max(1e-300));
    let assignment = min_cost_assignment(&cost);
    let mut permuted = DMatrix::zeros(n, n);
    for (row, &col) in assignment.iter().enumerate() {
        permuted.set_row(col, &unmixing.row(row));
    }
    for i in 0..n {
        let d = permuted[(i, i)];
        permuted.row_mut(i).scale_mut(1.0 / d);
    }
    let b = DMatrix::identity(n, n) - permuted;
    if n <= EXHAUSTIVE_ORDER_LIMIT {
        exhaustive_order(&b)
    } else {
        greedy_order(&b)
    }
}

/// Sum of squared entries `b[(order[i], order[j])]` with `j > i`.
fn upper_mass(b: &DMatrix<f64>, order: &[usize]) -> f64 {
    let mut s = 0.0;
    for (i, &r) in order.iter().enumerate() {
        for &c in &order[i + 1..] {
            s += b[(r, c)].powi(2);
        }
    }
    s
}

fn exhaustive_order(b: &DMatrix<f64>) -> Vec<usize> {
    let n = b.nrows();
    let mut best = (f64::INFINITY, Vec::new());
    for order in (0..n).permutations(n) {
        let cost = upper_mass(b, &order);
        if cost < best.0 {
            best = (cost, order);
        }
    }
    best.1
}

fn greedy_order(b: &DMatrix<f64>) -> Vec<usize> {
    let n = b.nrows();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(k, &r)| (k, remaining.iter().filter(|&&c| c != r).map(|&c| b[(r, c)].powi(2)).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        order.push(remaining.remove(pos));
    }
    order
}

/// Hungarian algorithm: `result[row] = column` minimizing the total cost.
fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    // 1-based potentials; column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(r - 1, j - 1)] - u[r] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[owner[j] - 1] = j - 1;
    }
    result
}

/// Regresses every variable on all of its predecessors and keeps the
/// coefficients whose t-test p-value is at most `threshold`.
fn regress_on_predecessors(
    x: &DMatrix<f64>,
    order: &[usize],
    threshold: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (t, n) = x.shape();
    let mut b = DMatrix::zeros(n, n);
    let mut pvalues = DMatrix::from_element(n, n, 1.0);
    for (pos, &child) in order.iter().enumerate() {
        let preds = &order[..pos];
        if preds.is_empty() {
            continue;
        }
        let reg = DMatrix::from_fn(t, preds.len() + 1, |r, c| if c == 0 { 1.0 } else { x[(r, preds[c - 1])] });
        let y = x.column(child).into_owned();
        let fit = ols_with_inference(&reg, &y)?;
        for (k, &p) in preds.iter().enumerate() {
            let pv = fit.pvalues[k + 1];
            pvalues[(child, p)] = pv;
            if pv <= threshold {
                b[(child, p)] = fit.fit.coefficients[k + 1];
            }
        }
    }
    Ok((b, pvalues))
}
