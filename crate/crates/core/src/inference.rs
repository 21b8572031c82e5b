//! Treatment effects by learning each affected variable's mechanism from its
//! parents and simulating interventions along the causal graph.
//!
//! Only variables that are both descendants of a treatment and ancestors of
//! (or equal to) the target are re-predicted; every other variable keeps its
//! observed values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::boost::{BoostConfig, BoostedTrees};
use crate::data::{Dataset, TabularDataset, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, GraphKind, ParentRef};
use crate::linalg::{least_squares, mean};
use crate::pool::WorkerPool;

/// Simulated values beyond this magnitude count as divergence.
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionModel {
    #[default]
    Linear,
    /// Gradient-boosted regression trees.
    Nonlinear,
}

impl FromStr for PredictionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PredictionModel::Linear),
            "nonlinear" | "gbrt" => Ok(PredictionModel::Nonlinear),
            other => Err(Error::invalid(format!("unknown prediction model `{other}`"))),
        }
    }
}

impl fmt::Display for PredictionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictionModel::Linear => "linear",
            PredictionModel::Nonlinear => "nonlinear",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Treatment {
    pub var_name: String,
    pub treatment_value: f64,
    pub control_value: f64,
}

impl Treatment {
    pub fn new(var_name: &str, treatment_value: f64, control_value: f64) -> Self {
        Self {
            var_name: var_name.to_owned(),
            treatment_value,
            control_value,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InferenceConfig {
    pub prediction_model: PredictionModel,
    pub boost: BoostConfig,
    pub pool: WorkerPool,
    /// Time-series steps simulated before effects are measured.
    pub burn_in: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            prediction_model: PredictionModel::Linear,
            boost: BoostConfig::default(),
            pool: WorkerPool::sequential(),
            burn_in: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Linear { intercept: f64, coefficients: Vec<f64> },
    Boosted(BoostedTrees),
}

impl Predictor {
    pub fn fit(model: PredictionModel, rows: &[Vec<f64>], y: &[f64], boost: &BoostConfig) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InsufficientSamples {
                context: "predictor training".into(),
                required: 1,
                available: 0,
            });
        }
        match model {
            PredictionModel::Linear => {
                let k = rows.first().map_or(0, Vec::len);
                let x = nalgebra::DMatrix::from_fn(y.len(), k + 1, |r, c| if c == 0 { 1.0 } else { rows[r][c - 1] });
                let fit = least_squares(&x, &DVector::from_column_slice(y))?;
                Ok(Predictor::Linear {
                    intercept: fit.coefficients[0],
                    coefficients: fit.coefficients.iter().skip(1).copied().collect(),
                })
            }
            PredictionModel::Nonlinear => Ok(Predictor::Boosted(BoostedTrees::fit(rows, y, boost))),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Predictor::Linear { intercept, coefficients } => {
                intercept + coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
            }
            Predictor::Boosted(m) => m.predict(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AteResult {
    pub ate: f64,
    pub treated_mean: f64,
    pub control_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CateResult {
    pub cate: f64,
    pub treated: f64,
    pub control: f64,
}

/// Mechanisms learned for one (target, treatment set) query.
#[derive(Debug, Clone)]
pub struct FittedScm {
    graph: CausalGraph,
    data: Dataset,
    /// Graph variable index to data column.
    columns: Vec<usize>,
    order: Vec<usize>,
    target: usize,
    treatments: BTreeSet<usize>,
    affected: BTreeSet<usize>,
    predictors: BTreeMap<usize, Predictor>,
    max_lag: usize,
    config: InferenceConfig,
}

impl FittedScm {
    pub fn fit(
        graph: &CausalGraph,
        data: &Dataset,
        target: &str,
        treatments: &[&str],
        config: &InferenceConfig,
    ) -> Result<Self> {
        let data_names = data.var_names();
        let columns = graph
            .var_names()
            .iter()
            .map(|v| {
                data_names.iter().position(|d| d == v).ok_or_else(|| {
                    Error::invalid(format!("data has no column for graph variable `{v}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        match (graph.kind(), data) {
            (GraphKind::Tabular, Dataset::Tabular(_)) | (GraphKind::TimeSeries, Dataset::TimeSeries(_)) => {}
            _ => return Err(Error::invalid("graph kind does not match the dataset kind")),
        }
        let t = graph.index_of(target)?;
        let treated: BTreeSet<usize> = treatments
            .iter()
            .map(|v| graph.index_of(v))
            .collect::<Result<_>>()?;
        if treated.contains(&t) {
            return Err(Error::invalid(format!("target `{target}` cannot also be a treatment")));
        }

        let mut upstream = graph.ancestors(t);
        upstream.insert(t);
        let downstream = graph.descendants(&treated.iter().copied().collect::<Vec<_>>());
        let affected: BTreeSet<usize> = downstream
            .intersection(&upstream)
            .copied()
            .filter(|v| !treated.contains(v))
            .collect();
        let names = graph.var_names();
        for (a, b) in graph.undirected_edges() {
            let touches = |v: usize| affected.contains(&v) || v == t;
            let treated_link = (treated.contains(&a) && upstream.contains(&b))
                || (treated.contains(&b) && upstream.contains(&a));
            if touches(a) || touches(b) || treated_link {
                return Err(Error::UndirectedOnPath(names[a].clone(), names[b].clone()));
            }
        }
        let order = graph.topological_order()?;

        let mut scm = Self {
            graph: graph.clone(),
            data: data.clone(),
            columns,
            order,
            target: t,
            treatments: treated,
            affected,
            predictors: BTreeMap::new(),
            max_lag: graph.max_lag(),
            config: config.clone(),
        };
        let mut learn: Vec<usize> = scm.affected.iter().copied().collect();
        if !scm.affected.contains(&t) {
            learn.push(t);
        }
        let fitted = config.pool.map(&learn, |&v| scm.fit_predictor(v));
        for (&v, p) in learn.iter().zip(fitted) {
            scm.predictors.insert(v, p?);
        }
        Ok(scm)
    }

    pub fn predictor(&self, var: &str) -> Option<&Predictor> {
        self.predictors.get(&self.graph.index_of(var).ok()?)
    }

    /// Variables re-predicted under intervention.
    pub fn affected(&self) -> Vec<&str> {
        self.affected.iter().map(|&v| self.graph.var_names()[v].as_str()).collect()
    }

    /// One message per treatment value outside the observed range of its
    /// variable.
    pub fn support_warnings(&self, treatments: &[Treatment]) -> Vec<String> {
        let mut out = Vec::new();
        for t in treatments {
            let Ok(v) = self.graph.index_of(&t.var_name) else { continue };
            let col = self.columns[v];
            let values: Vec<f64> = match &self.data {
                Dataset::Tabular(d) => d.column(col).to_vec(),
                Dataset::TimeSeries(d) => d.blocks().iter().flat_map(|b| b.column(col).to_vec()).collect(),
            };
            let (lo, hi) = values
                .iter()
                .filter(|x| !x.is_nan())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            for x in [t.treatment_value, t.control_value] {
                if x < lo || x > hi {
                    out.push(format!("{} = {x} is outside the observed range [{lo}, {hi}]", t.var_name));
                }
            }
        }
        out
    }

    fn features(&self, v: usize) -> Vec<ParentRef> {
        self.graph.parent_refs(v)
    }

    fn training_set(&self, v: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let feats = self.features(v);
        let (table, col_of): (TabularDataset, Box<dyn Fn(&ParentRef) -> usize>) = match &self.data {
            Dataset::Tabular(d) => (d.clone(), Box::new(|p: &ParentRef| self.columns[p.var])),
            Dataset::TimeSeries(d) => {
                let n = d.n_vars();
                let lag = self.max_lag.max(1);
                (
                    d.lagged_design(lag)?,
                    Box::new(move |p: &ParentRef| p.lag.unsigned_abs() as usize * n + self.columns[p.var]),
                )
            }
        };
        let y_col = self.columns[v];
        let feat_cols: Vec<usize> = feats.iter().map(|p| col_of(p)).collect();
        let mut needed = feat_cols.clone();
        needed.push(y_col);
        let rows = table.complete_rows(&needed);
        let x = rows
            .iter()
            .map(|&r| feat_cols.iter().map(|&c| table.column(c)[r]).collect())
            .collect();
        Ok((x, table.gather(y_col, &rows)))
    }

    fn fit_predictor(&self, v: usize) -> Result<Predictor> {
        let (x, y) = self.training_set(v)?;
        Predictor::fit(self.config.prediction_model, &x, &y, &self.config.boost)
    }

    fn check_treatments(&self, treatments: &BTreeMap<usize, f64>) -> Result<()> {
        let given: BTreeSet<usize> = treatments.keys().copied().collect();
        if given != self.treatments {
            return Err(Error::invalid("treatments differ from those the model was fitted for"));
        }
        Ok(())
    }

    fn resolve(&self, treatments: &[Treatment], treat_arm: bool) -> Result<BTreeMap<usize, f64>> {
        treatments
            .iter()
            .map(|t| {
                let v = self.graph.index_of(&t.var_name)?;
                Ok((v, if treat_arm { t.treatment_value } else { t.control_value }))
            })
            .collect()
    }

    /// Tabular rows used for simulation: complete in every observed input.
    fn simulation_rows(&self, data: &TabularDataset) -> Vec<usize> {
        let mut cols: BTreeSet<usize> = BTreeSet::from([self.columns[self.target]]);
        for &v in &self.affected {
            cols.insert(self.columns[v]);
            cols.extend(self.graph.parent_refs(v).iter().map(|p| self.columns[p.var]));
        }
        for t in &self.treatments {
            cols.remove(&self.columns[*t]);
        }
        data.complete_rows(&cols.into_iter().collect::<Vec<_>>())
    }

    /// Per-row target values with `values` clamped.
    fn simulate_tabular(&self, data: &TabularDataset, rows: &[usize], values: &BTreeMap<usize, f64>) -> Vec<f64> {
        let n = self.graph.n_vars();
        rows.iter()
            .map(|&r| {
                let mut state: Vec<f64> = (0..n).map(|v| data.column(self.columns[v])[r]).collect();
                for &v in &self.order {
                    if let Some(&x) = values.get(&v) {
                        state[v] = x;
                    } else if self.affected.contains(&v) {
                        let feats: Vec<f64> = self.features(v).iter().map(|p| state[p.var]).collect();
                        state[v] = self.predictors[&v].predict(&feats);
                    }
                }
                state[self.target]
            })
            .collect()
    }

    /// Forward simulation of every block; returns measured target values.
    fn simulate_series(&self, data: &TimeSeriesDataset, values: &BTreeMap<usize, f64>) -> Result<Vec<f64>> {
        let n = self.graph.n_vars();
        let start = self.max_lag.max(1);
        let mut out = Vec::new();
        for block in data.blocks() {
            let len = block.n_samples();
            let mut state: Vec<Vec<f64>> = (0..n).map(|v| block.column(self.columns[v]).to_vec()).collect();
            for (&v, &x) in values {
                state[v].iter_mut().for_each(|s| *s = x);
            }
            for t in start..len {
                for &v in &self.order {
                    if values.contains_key(&v) || !self.affected.contains(&v) {
                        continue;
                    }
                    let feats: Vec<f64> = self
                        .features(v)
                        .iter()
                        .map(|p| state[p.var][t - p.lag.unsigned_abs() as usize])
                        .collect();
                    let x = self.predictors[&v].predict(&feats);
                    if x.abs() > DIVERGENCE_LIMIT {
                        return Err(Error::Diverged {
                            step: t,
                            variable: self.graph.var_names()[v].clone(),
                        });
                    }
                    state[v][t] = x;
                }
                if t >= start + self.config.burn_in && !state[self.target][t].is_nan() {
                    out.push(state[self.target][t]);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InsufficientSamples {
                context: "time-series effect simulation (after burn-in)".into(),
                required: start + self.config.burn_in + 1,
                available: data.blocks().iter().map(|b| b.n_samples()).max().unwrap_or(0),
            });
        }
        Ok(out)
    }

    fn arm(&self, values: &BTreeMap<usize, f64>) -> Result<Vec<f64>> {
        match &self.data {
            Dataset::Tabular(d) => {
                let rows = self.simulation_rows(d);
                Ok(self.simulate_tabular(d, &rows, values))
            }
            Dataset::TimeSeries(d) => self.simulate_series(d, values),
        }
    }

    /// Difference of mean simulated target values under treatment and control.
    pub fn ate(&self, treatments: &[Treatment]) -> Result<AteResult> {
        let treat = self.resolve(treatments, true)?;
        let control = self.resolve(treatments, false)?;
        self.check_treatments(&treat)?;
        let arms = [treat, control];
        let mut sims = self.config.pool.map(&arms, |a| self.arm(a)).into_iter();
        let (yt, yc) = (sims.next().expect("two arms")?, sims.next().expect("two arms")?);
        if yt.is_empty() {
            return Err(Error::NoData);
        }
        let (treated_mean, control_mean) = (mean(&yt), mean(&yc));
        Ok(AteResult {
            ate: treated_mean - control_mean,
            treated_mean,
            control_mean,
        })
    }

    /// Treatment effect at `conditions`: models from the observed condition
    /// values to each sample's simulated outcome under each arm, evaluated at
    /// the given condition values.
    pub fn cate(
        &self,
        treatments: &[Treatment],
        conditions: &[(String, f64)],
        condition_model: PredictionModel,
    ) -> Result<CateResult> {
        let Dataset::Tabular(data) = &self.data else {
            return Err(Error::invalid("conditional effects are only supported for tabular data"));
        };
        if conditions.is_empty() {
            return Err(Error::invalid("at least one condition is required"));
        }
        let mut cond_cols = Vec::with_capacity(conditions.len());
        for (name, _) in conditions {
            let v = self.graph.index_of(name)?;
            if self.treatments.contains(&v) {
                return Err(Error::invalid(format!("condition `{name}` is also a treatment")));
            }
            cond_cols.push(self.columns[v]);
        }
        let treat = self.resolve(treatments, true)?;
        let control = self.resolve(treatments, false)?;
        self.check_treatments(&treat)?;

        let rows: Vec<usize> = self
            .simulation_rows(data)
            .into_iter()
            .filter(|&r| cond_cols.iter().all(|&c| !data.is_missing(r, c)))
            .collect();
        let yt = self.simulate_tabular(data, &rows, &treat);
        let yc = self.simulate_tabular(data, &rows, &control);
        let features: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| cond_cols.iter().map(|&c| data.column(c)[r]).collect())
            .collect();
        let at: Vec<f64> = conditions.iter().map(|(_, v)| *v).collect();
        let gt = Predictor::fit(condition_model, &features, &yt, &self.config.boost)?;
        let gc = Predictor::fit(condition_model, &features, &yc, &self.config.boost)?;
        let (treated, control) = (gt.predict(&at), gc.predict(&at));
        Ok(CateResult {
            cate: treated - control,
            treated,
            control,
        })
    }

    /// Target value for one fully observed sample had the treatments taken
    /// the given values. Mediators keep their sample-specific residuals.
    pub fn counterfactual(&self, sample: &BTreeMap<String, f64>, intervention: &BTreeMap<String, f64>) -> Result<f64> {
        if self.graph.kind() != GraphKind::Tabular {
            return Err(Error::invalid("counterfactuals are only supported for tabular data"));
        }
        let names = self.graph.var_names();
        let missing: Vec<&str> = (0..names.len())
            .filter(|&v| v != self.target && !sample.contains_key(&names[v]))
            .map(|v| names[v].as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::invalid(format!("sample is missing values for: {}", missing.join(", "))));
        }
        let values: BTreeMap<usize, f64> = intervention
            .iter()
            .map(|(k, &x)| Ok((self.graph.index_of(k)?, x)))
            .collect::<Result<_>>()?;
        self.check_treatments(&values)?;

        let observed: Vec<f64> = names.iter().map(|v| sample.get(v).copied().unwrap_or(f64::NAN)).collect();
        let predict = |v: usize, state: &[f64]| {
            let feats: Vec<f64> = self.features(v).iter().map(|p| state[p.var]).collect();
            self.predictors[&v].predict(&feats)
        };
        let mut state = observed.clone();
        for &v in &self.order {
            if let Some(&x) = values.get(&v) {
                state[v] = x;
            } else if v == self.target {
                state[v] = predict(v, &state);
            } else if self.affected.contains(&v) {
                let residual = observed[v] - predict(v, &observed);
                state[v] = predict(v, &state) + residual;
            }
        }
        Ok(state[self.target])
    }
}

/// Fits the mechanisms needed for `target` and returns its average treatment
/// effect.
pub fn ate(
    graph: &CausalGraph,
    data: &Dataset,
    target: &str,
    treatments: &[Treatment],
    config: &InferenceConfig,
) -> Result<AteResult> {
    let vars: Vec<&str> = treatments.iter().map(|t| t.var_name.as_str()).collect();
    FittedScm::fit(graph, data, target, &vars, config)?.ate(treatments)
}

pub fn cate(
    graph: &CausalGraph,
    data: &TabularDataset,
    target: &str,
    treatments: &[Treatment],
    conditions: &[(String, f64)],
    condition_model: PredictionModel,
    config: &InferenceConfig,
) -> Result<CateResult> {
    let vars: Vec<&str> = treatments.iter().map(|t| t.var_name.as_str()).collect();
    FittedScm::fit(graph, &Dataset::Tabular(data.clone()), target, &vars, config)?
        .cate(treatments, conditions, condition_model)
}

pub fn counterfactual(
    graph: &CausalGraph,
    data: &TabularDataset,
    target: &str,
    sample: &BTreeMap<String, f64>,
    intervention: &BTreeMap<String, f64>,
    config: &InferenceConfig,
) -> Result<f64> {
    let vars: Vec<&str> = intervention.keys().map(String::as_str).collect();
    FittedScm::fit(graph, &Dataset::Tabular(data.clone()), target, &vars, config)?
        .counterfactual(sample, intervention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GenerateOptions, NoiseSpec, SemSpec, Transform};
    use crate::graph::EdgeInfo;

    fn fitted(sem: &SemSpec, n: usize, target: &str, treat: &[&str], config: &InferenceConfig) -> FittedScm {
        let g = generate(sem, &GenerateOptions::new(n, 1)).unwrap();
        FittedScm::fit(&g.graph, &g.data, target, treat, config).unwrap()
    }

    fn two_parents() -> SemSpec {
        SemSpec::tabular(&["A", "B", "C"])
            .with_term("C", "A", 0, 2.0, Transform::Identity)
            .with_term("C", "B", 0, 1.5, Transform::Identity)
    }

    #[test]
    fn linear_predictor_coefficient() {
        let sem = SemSpec::tabular(&["A", "B"]).with_term("B", "A", 0, 2.0, Transform::Identity);
        let scm = fitted(&sem, 5000, "B", &["A"], &InferenceConfig::default());
        let Some(Predictor::Linear { coefficients, .. }) = scm.predictor("B") else {
            panic!("linear predictor expected");
        };
        assert!((coefficients[0] - 2.0).abs() < 0.05);
    }

    #[test]
    fn ate_examples() {
        let scm = fitted(&two_parents(), 5000, "C", &["A"], &InferenceConfig::default());
        let r = scm.ate(&[Treatment::new("A", 1.0, 0.0)]).unwrap();
        assert!((r.ate - 2.0).abs() < 0.1);
        assert_eq!(scm.ate(&[Treatment::new("A", 0.3, 0.3)]).unwrap().ate, 0.0);

        let none = fitted(&two_parents(), 5000, "A", &["B"], &InferenceConfig::default());
        assert!(none.affected().is_empty());
        assert!(none.ate(&[Treatment::new("B", 1.0, 0.0)]).unwrap().ate.abs() < 0.05);
    }

    #[test]
    fn target_cannot_be_treated() {
        let g = generate(&two_parents(), &GenerateOptions::new(50, 1)).unwrap();
        assert!(FittedScm::fit(&g.graph, &g.data, "C", &["C"], &InferenceConfig::default()).is_err());
    }

    #[test]
    fn undirected_edge_on_path_is_rejected() {
        let g = generate(&two_parents(), &GenerateOptions::new(50, 1)).unwrap();
        let mut graph = g.graph.clone();
        graph.add_undirected(0, 2, EdgeInfo::default()).unwrap();
        let err = FittedScm::fit(&graph, &g.data, "C", &["A"], &InferenceConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UndirectedOnPath(..)));
    }

    #[test]
    fn counterfactual_noise_free() {
        let sem = SemSpec::tabular(&["X", "Y"])
            .with_term("Y", "X", 0, 2.0, Transform::Identity)
            .with_noise("Y", NoiseSpec::gaussian(0.0, 0.0));
        let scm = fitted(&sem, 200, "Y", &["X"], &InferenceConfig::default());
        let sample = BTreeMap::from([("X".to_string(), 3.0), ("Y".to_string(), 6.0)]);
        let cf = scm.counterfactual(&sample, &BTreeMap::from([("X".to_string(), 5.0)])).unwrap();
        assert!((cf - 10.0).abs() < 1e-9);
        let err = scm.counterfactual(&BTreeMap::new(), &BTreeMap::from([("X".to_string(), 5.0)])).unwrap_err();
        assert!(err.to_string().contains("X"));
    }

    #[test]
    fn counterfactual_keeps_mediator_residual() {
        let sem = SemSpec::tabular(&["X", "M", "Y"])
            .with_term("M", "X", 0, 1.0, Transform::Identity)
            .with_term("Y", "M", 0, 2.0, Transform::Identity);
        let scm = fitted(&sem, 5000, "Y", &["X"], &InferenceConfig::default());
        let sample = BTreeMap::from([("X".to_string(), 0.0), ("M".to_string(), 1.0), ("Y".to_string(), 2.0)]);
        // M keeps its +1 residual: M' = 1 * 2 + 1, Y' = 2 * 3
        let cf = scm.counterfactual(&sample, &BTreeMap::from([("X".to_string(), 2.0)])).unwrap();
        assert!((cf - 6.0).abs() < 0.15, "{cf}");
    }

    #[test]
    fn cate_on_independent_condition_matches_ate() {
        let sem = two_parents();
        let scm = fitted(&sem, 3000, "C", &["A"], &InferenceConfig::default());
        let t = [Treatment::new("A", 1.0, 0.0)];
        let ate = scm.ate(&t).unwrap().ate;
        let cate = scm.cate(&t, &[("B".into(), 0.5)], PredictionModel::Linear).unwrap().cate;
        assert!((cate - ate).abs() < 0.05);
        assert!(scm.cate(&t, &[("A".into(), 0.5)], PredictionModel::Linear).is_err());
    }

    #[test]
    fn counterfactual_linear_oracle() {
        let sem = SemSpec::tabular(&["X", "Y"]).with_term("Y", "X", 0, 1.5, Transform::Identity);
        let scm = fitted(&sem, 5000, "Y", &["X"], &InferenceConfig::default());
        let sample = BTreeMap::from([("X".to_string(), 0.4), ("Y".to_string(), 1.1)]);
        let same = scm.counterfactual(&sample, &BTreeMap::from([("X".to_string(), 0.4)])).unwrap();
        let moved = scm.counterfactual(&sample, &BTreeMap::from([("X".to_string(), 2.4)])).unwrap();
        // residual sd is 1
        assert!((moved - same - 1.5 * 2.0).abs() < 3.0);
        assert!((moved - same - 3.0).abs() < 0.1);
    }

    #[test]
    fn regime_cate_with_nonlinear_predictor() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let (mut a, mut c, mut y) = (vec![], vec![], vec![]);
        for _ in 0..4000 {
            let ci = f64::from(u8::from(rng.random::<bool>()));
            let ai: f64 = rng.sample(rand_distr::StandardNormal);
            let e: f64 = rng.sample(rand_distr::StandardNormal);
            a.push(ai);
            c.push(ci);
            y.push(if ci == 1.0 { 2.0 } else { 0.0 } * ai + 0.5 * e);
        }
        let names: Vec<String> = ["A", "C", "Y"].map(String::from).to_vec();
        let data = TabularDataset::from_columns(names.clone(), vec![a, c, y]).unwrap();
        let mut graph = CausalGraph::new(GraphKind::Tabular, names);
        graph.add_edge(0, 0, 2, EdgeInfo::default()).unwrap();
        graph.add_edge(1, 0, 2, EdgeInfo::default()).unwrap();
        let config = InferenceConfig {
            prediction_model: PredictionModel::Nonlinear,
            ..Default::default()
        };
        let scm = FittedScm::fit(&graph, &Dataset::Tabular(data), "Y", &["A"], &config).unwrap();
        let t = [Treatment::new("A", 1.0, 0.0)];
        let on = scm.cate(&t, &[("C".into(), 1.0)], PredictionModel::Linear).unwrap().cate;
        let off = scm.cate(&t, &[("C".into(), 0.0)], PredictionModel::Linear).unwrap().cate;
        assert!((on - 2.0).abs() < 0.2, "{on}");
        assert!(off.abs() < 0.2, "{off}");
        let same = [Treatment::new("A", 1.0, 1.0)];
        assert_eq!(scm.cate(&same, &[("C".into(), 1.0)], PredictionModel::Nonlinear).unwrap().cate, 0.0);
        assert_eq!(scm.support_warnings(&[Treatment::new("A", 100.0, 0.0)]).len(), 1);
    }

    #[test]
    fn timeseries_lag_effect() {
        let sem = SemSpec::timeseries(&["X", "Y"], 1).with_term("Y", "X", -1, 0.8, Transform::Identity);
        let scm = fitted(&sem, 3000, "Y", &["X"], &InferenceConfig::default());
        let r = scm.ate(&[Treatment::new("X", 1.0, 0.0)]).unwrap();
        assert!((r.ate - 0.8).abs() < 0.05);

        let self_loop = SemSpec::timeseries(&["X", "Y"], 1)
            .with_term("X", "X", -1, 0.5, Transform::Identity)
            .with_term("Y", "X", -1, 0.8, Transform::Identity);
        let scm = fitted(&self_loop, 3000, "Y", &["X"], &InferenceConfig::default());
        assert!((scm.ate(&[Treatment::new("X", 2.0, 0.0)]).unwrap().ate - 1.6).abs() < 0.1);
    }

    #[test]
    fn diverging_simulation_errors() {
        let sem = SemSpec::timeseries(&["X", "Y"], 1)
            .with_term("Y", "X", -1, 1.0, Transform::Identity)
            .with_term("Y", "Y", -1, 0.5, Transform::Identity);
        let g = generate(&sem, &GenerateOptions::new(600, 2)).unwrap();
        let mut graph = g.graph.clone();
        graph.add_edge(1, -1, 1, EdgeInfo::default()).unwrap();
        let scm = FittedScm::fit(&graph, &g.data, "Y", &["X"], &InferenceConfig::default()).unwrap();
        assert!(scm.ate(&[Treatment::new("X", 1.0, 0.0)]).is_ok());

        // a hand-made explosive mechanism
        let mut scm = scm;
        scm.predictors.insert(1, Predictor::Linear { intercept: 0.0, coefficients: vec![1.0, 3.0] });
        assert!(matches!(scm.ate(&[Treatment::new("X", 1.0, 0.0)]), Err(Error::Diverged { .. })));
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(32))]

        #[test]
        fn linear_ate_is_antisymmetric_and_scales(t in -3.0f64..3.0, c in -3.0f64..3.0) {
            let scm = fitted(&two_parents(), 400, "C", &["A"], &InferenceConfig::default());
            let forward = scm.ate(&[Treatment::new("A", t, c)]).unwrap().ate;
            let backward = scm.ate(&[Treatment::new("A", c, t)]).unwrap().ate;
            proptest::prop_assert!((forward + backward).abs() < 1e-9);
            let unit = scm.ate(&[Treatment::new("A", 1.0, 0.0)]).unwrap().ate;
            proptest::prop_assert!((forward - unit * (t - c)).abs() < 1e-9 * (1.0 + forward.abs()));
        }
    }
}
