//! Deterministic gradient-boosted regression trees (squared loss), started
//! from a quadratic least-squares fit.

use nalgebra::{DMatrix, DVector};

use crate::linalg::least_squares;

/// Above this many features the base fit is linear only.
const MAX_QUADRATIC_FEATURES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Start boosting from a fit on features, squares and pairwise products
    /// instead of the mean.
    pub quadratic_base: bool,
    /// Every `k`-th sample is held out for early stopping; 0 disables it.
    pub holdout_every: usize,
    /// Rounds without holdout improvement before stopping.
    pub patience: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            rounds: 200,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 5,
            quadratic_base: true,
            holdout_every: 5,
            patience: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BaseFit {
    quadratic: bool,
    /// Intercept first.
    coefficients: Vec<f64>,
}

impl BaseFit {
    fn expand(quadratic: bool, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        out.extend_from_slice(x);
        if quadratic {
            for i in 0..x.len() {
                for j in i..x.len() {
                    out.push(x[i] * x[j]);
                }
            }
        }
    }

    fn fit(rows: &[Vec<f64>], y: &[f64], config: &BoostConfig) -> Self {
        let n_features = rows.first().map_or(0, Vec::len);
        let quadratic = config.quadratic_base && n_features <= MAX_QUADRATIC_FEATURES;
        let mut buf = Vec::new();
        let expanded: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                Self::expand(quadratic, r, &mut buf);
                buf.clone()
            })
            .collect();
        let width = expanded.first().map_or(1, Vec::len);
        let x = DMatrix::from_fn(y.len(), width, |r, c| expanded[r][c]);
        let coefficients = match least_squares(&x, &DVector::from_column_slice(y)) {
            Ok(fit) if fit.coefficients.iter().all(|c| c.is_finite()) => fit.coefficients.iter().copied().collect(),
            _ => {
                let mut c = vec![0.0; width];
                c[0] = y.iter().sum::<f64>() / y.len() as f64;
                c
            }
        };
        Self { quadratic, coefficients }
    }

    fn constant(value: f64) -> Self {
        Self {
            quadratic: false,
            coefficients: vec![value],
        }
    }

    fn predict(&self, x: &[f64]) -> f64 {
        if self.coefficients.len() == 1 {
            return self.coefficients[0];
        }
        let mut buf = Vec::new();
        Self::expand(self.quadratic, x, &mut buf);
        buf.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedTrees {
    base: BaseFit,
    learning_rate: f64,
    trees: Vec<Tree>,
}

impl BoostedTrees {
    /// `rows[i]` is the feature vector of sample `i`.
    pub fn fit(rows: &[Vec<f64>], y: &[f64], config: &BoostConfig) -> Self {
        let n_all = y.len();
        let n_features = rows.first().map_or(0, Vec::len);
        if n_all == 0 || n_features == 0 {
            let mean = if n_all == 0 { 0.0 } else { y.iter().sum::<f64>() / n_all as f64 };
            return Self {
                base: BaseFit::constant(mean),
                learning_rate: config.learning_rate,
                trees: Vec::new(),
            };
        }
        let k = config.holdout_every;
        let held = |i: usize| k > 1 && n_all >= 4 * k && i % k == k - 1;
        let (train, valid): (Vec<usize>, Vec<usize>) = (0..n_all).partition(|&i| !held(i));
        let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
        let train_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let (all_rows, rows) = (rows, &train_rows[..]);
        let n = train_y.len();

        let mut model = Self {
            base: BaseFit::fit(rows, &train_y, config),
            learning_rate: config.learning_rate,
            trees: Vec::with_capacity(config.rounds),
        };
        // per-feature sample order, computed once and partitioned down the tree
        let sorted: Vec<Vec<usize>> = (0..n_features)
            .map(|f| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        let mut pred: Vec<f64> = rows.iter().map(|r| model.base.predict(r)).collect();
        let mut valid_pred: Vec<f64> = valid.iter().map(|&i| model.base.predict(&all_rows[i])).collect();
        let valid_loss = |p: &[f64]| valid.iter().zip(p).map(|(&i, v)| (y[i] - v).powi(2)).sum::<f64>();
        let mut best = (valid_loss(&valid_pred), 0);
        let mut residual = vec![0.0; n];
        for round in 1..=config.rounds {
            for i in 0..n {
                residual[i] = train_y[i] - pred[i];
            }
            let mut builder = Builder {
                rows,
                residual: &residual,
                config,
                nodes: Vec::new(),
                side: vec![false; n],
            };
            builder.grow(sorted.clone(), 0);
            let tree = Tree { nodes: builder.nodes };
            for i in 0..n {
                pred[i] += config.learning_rate * tree.predict(&rows[i]);
            }
            model.trees.push(tree);
            if valid.is_empty() {
                continue;
            }
            let tree = model.trees.last().expect("just pushed");
            for (v, &i) in valid_pred.iter_mut().zip(&valid) {
                *v += config.learning_rate * tree.predict(&all_rows[i]);
            }
            let loss = valid_loss(&valid_pred);
            if loss < best.0 {
                best = (loss, round);
            } else if round - best.1 >= config.patience {
                break;
            }
        }
        if !valid.is_empty() {
            model.trees.truncate(best.1);
        }
        model
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base.predict(x) + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    residual: &'a [f64],
    config: &'a BoostConfig,
    nodes: Vec<Node>,
    side: Vec<bool>,
}

impl Builder<'_> {
    /// Builds the subtree for the samples listed (per feature, in sorted
    /// order) in `sorted` and returns its node index.
    fn grow(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let members = &sorted[0];
        let count = members.len();
        let total: f64 = members.iter().map(|&i| self.residual[i]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(total / count as f64));
        if depth >= self.config.max_depth || count < 2 * self.config.min_leaf {
            return id;
        }

        // maximize sum_l^2 / n_l + sum_r^2 / n_r
        let parent_gain = total * total / count as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for (f, order) in sorted.iter().enumerate() {
            let mut left_sum = 0.0;
            for k in 0..count - 1 {
                let i = order[k];
                left_sum += self.residual[i];
                let left_n = k + 1;
                let (a, b) = (self.rows[i][f], self.rows[order[k + 1]][f]);
                if a == b || left_n < self.config.min_leaf || count - left_n < self.config.min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / left_n as f64
                    + right_sum * right_sum / (count - left_n) as f64
                    - parent_gain;
                if best.is_none_or(|(g, _, _)| gain > g + 1e-12) {
                    best = Some((gain, f, a + (b - a) / 2.0));
                }
            }
        }
        let Some((gain, feature, threshold)) = best else {
            return id;
        };
        if gain <= 1e-12 {
            return id;
        }
        for &i in members {
            self.side[i] = self.rows[i][feature] <= threshold;
        }
        let (left, right): (Vec<Vec<usize>>, Vec<Vec<usize>>) = sorted
            .into_iter()
            .map(|order| order.into_iter().partition(|&i| self.side[i]))
            .unzip();
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left: l, right: r };
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_a_step_and_an_interaction() {
        let rows: Vec<Vec<f64>> = (0..400).map(|i| vec![(i % 2) as f64, ((i / 2) % 2) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] * r[1] + 0.5 * r[0] * (1.0 - r[1])).collect();
        let m = BoostedTrees::fit(&rows, &y, &BoostConfig::default());
        for r in &rows[..4] {
            let truth = 2.0 * r[0] * r[1] + 0.5 * r[0] * (1.0 - r[1]);
            assert!((m.predict(r) - truth).abs() < 1e-3);
        }
    }

    #[test]
    fn smooth_function() {
        let rows: Vec<Vec<f64>> = (0..500).map(|i| vec![i as f64 / 100.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0].sin()).collect();
        let m = BoostedTrees::fit(&rows, &y, &BoostConfig::default());
        let mse = rows.iter().zip(&y).map(|(r, t)| (m.predict(r) - t).powi(2)).sum::<f64>() / 500.0;
        assert!(mse < 1e-3, "{mse}");
        assert_eq!(m, BoostedTrees::fit(&rows, &y, &BoostConfig::default()));
    }
}
