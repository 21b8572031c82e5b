//! Conditional independence tests.
//!
//! A test answers "is `x` independent of `y` given `z`?" for columns of a
//! [`TabularDataset`] and returns a statistic and p-value. Rows with a missing
//! value in any participating column are dropped for that test only.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::linalg::{chi2_sf, design, residualize, student_t_two_sided};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CITestResult {
    pub statistic: f64,
    pub pvalue: f64,
    pub effective_samples: usize,
    /// Edge strength reported when this test is the one that keeps an edge.
    pub strength: f64,
}

pub trait CITest: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn test(&self, data: &TabularDataset, x: usize, y: usize, z: &[usize]) -> Result<CITestResult>;
}

pub type SharedCITest = Arc<dyn CITest>;

/// Partial correlation of `x` and `y` given `z` with a Student-t p-value.
/// Assumes linear relationships.
#[derive(Debug, Clone, Copy, Default)]
pub struct PartialCorrelation;

impl CITest for PartialCorrelation {
    fn name(&self) -> &str {
        "partial-correlation"
    }

    fn test(&self, data: &TabularDataset, x: usize, y: usize, z: &[usize]) -> Result<CITestResult> {
        let mut cols = Vec::with_capacity(z.len() + 2);
        cols.extend([x, y]);
        cols.extend_from_slice(z);
        let rows = data.complete_rows(&cols);
        let n = rows.len();
        let k = z.len();
        if n < k + 3 {
            return Err(Error::InsufficientSamples {
                context: "partial correlation".into(),
                required: k + 3,
                available: n,
            });
        }
        let zcols: Vec<&[f64]> = z.iter().map(|&c| data.column(c)).collect();
        let zdesign = design(&zcols, &rows, true);
        let targets = design(&[data.column(x), data.column(y)], &rows, false);
        let resid = residualize(&zdesign, &targets)?;
        let r = residual_correlation(&resid, &targets);

        let df = (n - k - 2) as f64;
        let pvalue = if r.abs() >= 1.0 {
            0.0
        } else {
            student_t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
        };
        Ok(CITestResult {
            statistic: r,
            pvalue,
            effective_samples: n,
            strength: r,
        })
    }
}

/// Correlation of the two residual columns. A residual that is numerically
/// zero relative to its raw column (fully explained by `z`) carries no
/// evidence of dependence and yields 0.
fn residual_correlation(resid: &DMatrix<f64>, raw: &DMatrix<f64>) -> f64 {
    let explained = |j: usize| {
        let col = raw.column(j);
        let m = col.mean();
        let total: f64 = col.iter().map(|v| (v - m).powi(2)).sum();
        resid.column(j).norm_squared() <= 1e-20 * total.max(f64::MIN_POSITIVE)
    };
    if explained(0) || explained(1) {
        return 0.0;
    }
    let a = resid.column(0);
    let b = resid.column(1);
    let (ma, mb) = (a.mean(), b.mean());
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Power-divergence statistics for contingency tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiscreteMethod {
    #[serde(rename = "pearson")]
    Pearson,
    #[serde(rename = "log-likelihood")]
    LogLikelihood,
    #[serde(rename = "mod-log-likelihood")]
    ModLogLikelihood,
    #[serde(rename = "freeman-tukey")]
    FreemanTukey,
    #[serde(rename = "neyman")]
    Neyman,
}

impl DiscreteMethod {
    pub const ALL: [DiscreteMethod; 5] = [
        DiscreteMethod::Pearson,
        DiscreteMethod::LogLikelihood,
        DiscreteMethod::ModLogLikelihood,
        DiscreteMethod::FreemanTukey,
        DiscreteMethod::Neyman,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DiscreteMethod::Pearson => "pearson",
            DiscreteMethod::LogLikelihood => "log-likelihood",
            DiscreteMethod::ModLogLikelihood => "mod-log-likelihood",
            DiscreteMethod::FreemanTukey => "freeman-tukey",
            DiscreteMethod::Neyman => "neyman",
        }
    }

    /// Methods whose terms are undefined at `O = 0`; such cells are skipped
    /// and cost one degree of freedom each.
    fn skips_empty_cells(&self) -> bool {
        matches!(self, DiscreteMethod::ModLogLikelihood | DiscreteMethod::Neyman)
    }

    fn cell(&self, observed: f64, expected: f64) -> f64 {
        let (o, e) = (observed, expected);
        match self {
            DiscreteMethod::Pearson => (o - e).powi(2) / e,
            DiscreteMethod::LogLikelihood => {
                if o > 0.0 {
                    2.0 * o * (o / e).ln()
                } else {
                    0.0
                }
            }
            // 2 [E ln(E/O) - E + O]: the same total as 2 sum E ln(E/O) when
            // all cells are kept, but each term is non-negative.
            DiscreteMethod::ModLogLikelihood => 2.0 * (e * (e / o).ln() - e + o),
            DiscreteMethod::FreemanTukey => 4.0 * (o.sqrt() - e.sqrt()).powi(2),
            DiscreteMethod::Neyman => (o - e).powi(2) / o,
        }
    }
}

impl fmt::Display for DiscreteMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiscreteMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DiscreteMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown discrete CI method `{s}`")))
    }
}

/// Stratified contingency-table test for integer-valued columns.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteCITest {
    pub method: DiscreteMethod,
}

impl DiscreteCITest {
    pub fn new(method: DiscreteMethod) -> Self {
        Self { method }
    }
}

impl Default for DiscreteCITest {
    fn default() -> Self {
        Self::new(DiscreteMethod::Pearson)
    }
}

impl CITest for DiscreteCITest {
    fn name(&self) -> &str {
        self.method.as_str()
    }

    fn test(&self, data: &TabularDataset, x: usize, y: usize, z: &[usize]) -> Result<CITestResult> {
        let mut cols = vec![x, y];
        cols.extend_from_slice(z);
        let rows = data.complete_rows(&cols);
        if rows.is_empty() {
            return Err(Error::InsufficientSamples {
                context: "discrete CI test (all strata empty)".into(),
                required: 1,
                available: 0,
            });
        }
        let state = |c: usize, r: usize| data.column(c)[r].round() as i64;

        let mut strata: BTreeMap<Vec<i64>, BTreeMap<(i64, i64), f64>> = BTreeMap::new();
        for &r in &rows {
            let key: Vec<i64> = z.iter().map(|&c| state(c, r)).collect();
            *strata
                .entry(key)
                .or_default()
                .entry((state(x, r), state(y, r)))
                .or_insert(0.0) += 1.0;
        }

        let mut statistic = 0.0;
        let mut df = 0.0;
        for cells in strata.values() {
            let (s, d) = self.stratum(cells);
            statistic += s;
            df += d;
        }
        let pvalue = chi2_sf(statistic, df);
        let n = rows.len();
        Ok(CITestResult {
            statistic,
            pvalue,
            effective_samples: n,
            strength: statistic / n as f64,
        })
    }
}

impl DiscreteCITest {
    fn stratum(&self, cells: &BTreeMap<(i64, i64), f64>) -> (f64, f64) {
        let mut row_tot: BTreeMap<i64, f64> = BTreeMap::new();
        let mut col_tot: BTreeMap<i64, f64> = BTreeMap::new();
        let mut total = 0.0;
        for (&(a, b), &o) in cells {
            *row_tot.entry(a).or_insert(0.0) += o;
            *col_tot.entry(b).or_insert(0.0) += o;
            total += o;
        }
        let (r, c) = (row_tot.len(), col_tot.len());
        if r < 2 || c < 2 {
            return (0.0, 0.0);
        }
        let mut stat = 0.0;
        let mut skipped = 0usize;
        for (&a, &ra) in &row_tot {
            for (&b, &cb) in &col_tot {
                let o = cells.get(&(a, b)).copied().unwrap_or(0.0);
                let e = ra * cb / total;
                if o == 0.0 && self.method.skips_empty_cells() {
                    skipped += 1;
                    continue;
                }
                stat += self.method.cell(o, e);
            }
        }
        let full = ((r - 1) * (c - 1)) as f64;
        let df = (full - skipped as f64).max(1.0);
        (stat, df)
    }
}

/// Named test constructors shared by the CLI and service.
pub fn ci_test_by_name(name: &str) -> Result<SharedCITest> {
    match name {
        "partial-correlation" | "partial_correlation" | "pc" => Ok(Arc::new(PartialCorrelation)),
        other => Ok(Arc::new(DiscreteCITest::new(other.parse()?))),
    }
}
