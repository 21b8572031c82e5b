//! Vector autoregression, Granger causality and VARLINGAM.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::data::{TabularDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, EdgeInfo, GraphKind};
use crate::linalg::{design, least_squares, ols_with_inference, std_dev};
use crate::lingam::{self, LingamConfig};
use crate::pool::WorkerPool;
use crate::prior::{Constraints, PriorKnowledge};
use crate::result::DiscoveryResult;

/// Time-series constraints: existing links are not enforced.
fn timeseries_constraints(pk: &PriorKnowledge, names: &[String]) -> Result<Constraints> {
    let mut pk = pk.clone();
    pk.existing_links.clear();
    Constraints::build(&pk, names)
}

/// `(lag, var)` regressors of `target` allowed by `constraints`, as lagged
/// design columns.
fn lagged_regressors(n: usize, max_lag: usize, target: usize, constraints: &Constraints) -> Vec<usize> {
    (1..=max_lag)
        .flat_map(|lag| (0..n).map(move |x| lag * n + x))
        .filter(|&c| constraints.allowed(c % n, target))
        .collect()
}

#[derive(Debug, Clone)]
pub struct VarModel {
    pub order: usize,
    /// `lag_matrices[tau - 1][(i, j)]`: effect of `j` at `t - tau` on `i` at `t`.
    pub lag_matrices: Vec<DMatrix<f64>>,
    pub intercept: DVector<f64>,
    /// Rows are the usable time steps, columns the variables.
    pub residuals: DMatrix<f64>,
    /// Lagged design restricted to the usable rows.
    pub design: TabularDataset,
}

/// Least-squares VAR of order `max_lag`. Regressors forbidden by `pk` are
/// left out, so their coefficients are exactly zero.
pub fn fit_var(data: &TimeSeriesDataset, pk: &PriorKnowledge, max_lag: usize) -> Result<VarModel> {
    if max_lag < 1 {
        return Err(Error::invalid("max_lag must be at least 1"));
    }
    let n = data.n_vars();
    let constraints = timeseries_constraints(pk, data.var_names())?;
    let lagged = data.lagged_design(max_lag)?;
    let all: Vec<usize> = (0..lagged.n_vars()).collect();
    let rows = lagged.complete_rows(&all);
    let lagged = lagged.select_rows(&rows);
    let t = lagged.n_samples();

    let mut lag_matrices = vec![DMatrix::zeros(n, n); max_lag];
    let mut intercept = DVector::zeros(n);
    let mut residuals = DMatrix::zeros(t, n);
    let every_row: Vec<usize> = (0..t).collect();
    for target in 0..n {
        let regs = lagged_regressors(n, max_lag, target, &constraints);
        if t <= regs.len() + 1 {
            return Err(Error::InsufficientSamples {
                context: format!("VAR regression for `{}`", data.var_names()[target]),
                required: regs.len() + 2,
                available: t,
            });
        }
        let cols: Vec<&[f64]> = regs.iter().map(|&c| lagged.column(c)).collect();
        let x = design(&cols, &every_row, true);
        let y = DVector::from_column_slice(lagged.column(target));
        let fit = least_squares(&x, &y)?;
        intercept[target] = fit.coefficients[0];
        for (k, &c) in regs.iter().enumerate() {
            lag_matrices[c / n - 1][(target, c % n)] = fit.coefficients[k + 1];
        }
        residuals.set_column(target, &fit.residuals);
    }
    Ok(VarModel {
        order: max_lag,
        lag_matrices,
        intercept,
        residuals,
        design: lagged,
    })
}

#[derive(Debug, Clone)]
pub struct GrangerConfig {
    pub max_lag: usize,
    pub pvalue_threshold: f64,
    pub pool: WorkerPool,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        Self {
            max_lag: 1,
            pvalue_threshold: 0.05,
            pool: WorkerPool::sequential(),
        }
    }
}

/// `(parent, lag, child, info)` for one target.
type Row = Vec<(usize, i32, EdgeInfo)>;

fn granger_row(
    lagged: &TabularDataset,
    names: &[String],
    constraints: &Constraints,
    config: &GrangerConfig,
    target: usize,
) -> Result<Row> {
    let n = names.len();
    let regs = lagged_regressors(n, config.max_lag, target, constraints);
    if regs.is_empty() {
        return Ok(Vec::new());
    }
    let mut cols = regs.clone();
    cols.push(target);
    let rows = lagged.complete_rows(&cols);
    if rows.len() <= regs.len() + 1 {
        return Err(Error::InsufficientSamples {
            context: format!("Granger regression for target `{}`", names[target]),
            required: regs.len() + 2,
            available: rows.len(),
        });
    }
    let slices: Vec<&[f64]> = regs.iter().map(|&c| lagged.column(c)).collect();
    let x = design(&slices, &rows, true);
    let y_values = lagged.gather(target, &rows);
    let y = DVector::from_column_slice(&y_values);
    let fit = ols_with_inference(&x, &y)?;
    let y_sd = std_dev(&y_values);

    let mut out = Vec::new();
    for (k, &c) in regs.iter().enumerate() {
        let pvalue = fit.pvalues[k + 1];
        if pvalue <= config.pvalue_threshold {
            let coef = fit.fit.coefficients[k + 1];
            let x_sd = std_dev(&lagged.gather(c, &rows));
            let strength = if y_sd > 0.0 { coef * x_sd / y_sd } else { 0.0 };
            out.push((c % n, -((c / n) as i32), EdgeInfo::new(strength, pvalue)));
        }
    }
    Ok(out)
}

fn granger_targets(
    data: &TimeSeriesDataset,
    pk: &PriorKnowledge,
    config: &GrangerConfig,
    targets: &[usize],
) -> Result<DiscoveryResult> {
    let start = Instant::now();
    if config.max_lag < 1 {
        return Err(Error::invalid("max_lag must be at least 1"));
    }
    let names = data.var_names();
    let constraints = timeseries_constraints(pk, names)?;
    let lagged = data.lagged_design(config.max_lag)?;
    let rows = config
        .pool
        .map(targets, |&t| granger_row(&lagged, names, &constraints, config, t));
    let mut graph = CausalGraph::new(GraphKind::TimeSeries, names.to_vec());
    for (&target, row) in targets.iter().zip(rows) {
        for (parent, lag, info) in row? {
            graph.add_edge(parent, lag, target, info)?;
        }
    }
    let mut result = DiscoveryResult::new(graph);
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Per-target lagged regressions; an edge is kept when its coefficient's
/// t-test p-value is at most the threshold. Strength is the standardized
/// coefficient.
pub fn granger(data: &TimeSeriesDataset, pk: &PriorKnowledge, config: &GrangerConfig) -> Result<DiscoveryResult> {
    let targets: Vec<usize> = (0..data.n_vars()).collect();
    granger_targets(data, pk, config, &targets)
}

pub fn granger_single(
    data: &TimeSeriesDataset,
    target: &str,
    pk: &PriorKnowledge,
    config: &GrangerConfig,
) -> Result<DiscoveryResult> {
    let t = data.index_of(target)?;
    granger_targets(data, pk, config, &[t])
}

#[derive(Debug, Clone)]
pub struct VarLingamConfig {
    pub max_lag: usize,
    pub pvalue_threshold: f64,
    /// An edge is kept when `|coef| > prune_factor * sd(child residual) / sd(parent)`.
    pub prune_factor: f64,
    pub lingam: LingamConfig,
}

impl Default for VarLingamConfig {
    fn default() -> Self {
        Self {
            max_lag: 1,
            pvalue_threshold: 0.05,
            prune_factor: 0.05,
            lingam: LingamConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarLingamModel {
    pub var: VarModel,
    pub causal_order: Vec<usize>,
    /// `instantaneous[(i, j)]`: effect of `j` at `t` on `i` at `t`.
    pub instantaneous: DMatrix<f64>,
    /// `(I - instantaneous) * A_tau` for each lag.
    pub lagged: Vec<DMatrix<f64>>,
}

pub fn varlingam_model(data: &TimeSeriesDataset, pk: &PriorKnowledge, config: &VarLingamConfig) -> Result<VarLingamModel> {
    let var = fit_var(data, pk, config.max_lag)?;
    let n = data.n_vars();
    let mut lingam_config = config.lingam.clone();
    lingam_config.pvalue_threshold = config.pvalue_threshold;
    let (causal_order, mut b0, _) = lingam::fit(&var.residuals, &lingam_config)?;
    let constraints = timeseries_constraints(pk, data.var_names())?;
    for i in 0..n {
        for j in 0..n {
            if !constraints.allowed(j, i) {
                b0[(i, j)] = 0.0;
            }
        }
    }
    let correction = DMatrix::identity(n, n) - &b0;
    let lagged = var.lag_matrices.iter().map(|a| &correction * a).collect();
    Ok(VarLingamModel {
        var,
        causal_order,
        instantaneous: b0,
        lagged,
    })
}

/// VAR fit, LiNGAM on the VAR residuals for instantaneous effects, and
/// corrected lagged effects. Edge p-values come from regressing each child
/// on its instantaneous parents and all lagged regressors.
pub fn varlingam(data: &TimeSeriesDataset, pk: &PriorKnowledge, config: &VarLingamConfig) -> Result<DiscoveryResult> {
    let start = Instant::now();
    let model = varlingam_model(data, pk, config)?;
    let n = data.n_vars();
    let design_data = &model.var.design;
    let resid_sd: Vec<f64> = (0..n)
        .map(|i| std_dev(model.var.residuals.column(i).as_slice()))
        .collect();
    let series_sd: Vec<f64> = (0..n).map(|j| std_dev(design_data.column(j))).collect();
    let keep = |coef: f64, child: usize, parent: usize| {
        series_sd[parent] > 0.0 && coef.abs() > config.prune_factor * resid_sd[child] / series_sd[parent]
    };

    let constraints = timeseries_constraints(pk, data.var_names())?;
    let rows: Vec<usize> = (0..design_data.n_samples()).collect();
    let mut graph = CausalGraph::new(GraphKind::TimeSeries, data.var_names().to_vec());
    for child in 0..n {
        let inst: Vec<usize> = (0..n)
            .filter(|&p| p != child && keep(model.instantaneous[(child, p)], child, p))
            .collect();
        let regs = lagged_regressors(n, config.max_lag, child, &constraints);
        let mut cols: Vec<&[f64]> = inst.iter().map(|&p| design_data.column(p)).collect();
        cols.extend(regs.iter().map(|&c| design_data.column(c)));
        let x = design(&cols, &rows, true);
        let y = DVector::from_column_slice(design_data.column(child));
        let pvalues = ols_with_inference(&x, &y)?.pvalues;

        for (k, &p) in inst.iter().enumerate() {
            graph.add_edge(p, 0, child, EdgeInfo::new(model.instantaneous[(child, p)], pvalues[k + 1]))?;
        }
        for (k, &c) in regs.iter().enumerate() {
            let (lag, parent) = (c / n, c % n);
            let coef = model.lagged[lag - 1][(child, parent)];
            if keep(coef, child, parent) {
                graph.add_edge(parent, -(lag as i32), child, EdgeInfo::new(coef, pvalues[inst.len() + k + 1]))?;
            }
        }
    }
    let mut result = DiscoveryResult::new(graph);
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}
