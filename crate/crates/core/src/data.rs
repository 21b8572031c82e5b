//! Datasets and the data transforms shared by every algorithm.
//!
//! Values are stored column-major. Missing entries are tracked by a boolean
//! mask and hold `NaN` in the value matrix so that column slices can be handed
//! to numeric kernels directly; the mask is the source of truth.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tokens treated as missing when no explicit list is given.
pub const DEFAULT_MISSING_TOKENS: &[&str] = &["", "NaN", "nan"];

/// Guard used in place of a zero standard deviation.
pub const STD_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TabularDataset {
    var_names: Vec<String>,
    values: DMatrix<f64>,
    missing: DMatrix<bool>,
}

impl TabularDataset {
    /// Builds a dataset from a `samples x variables` matrix. `NaN` entries
    /// are flagged missing; infinities are rejected.
    pub fn new(var_names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let missing = values.map(|v| v.is_nan());
        Self::with_mask(var_names, values, missing)
    }

    pub fn with_mask(
        var_names: Vec<String>,
        mut values: DMatrix<f64>,
        missing: DMatrix<bool>,
    ) -> Result<Self> {
        if var_names.len() != values.ncols() {
            return Err(Error::invalid(format!(
                "{} variable names for {} columns",
                var_names.len(),
                values.ncols()
            )));
        }
        if missing.shape() != values.shape() {
            return Err(Error::invalid("missing mask shape differs from values"));
        }
        check_unique(&var_names)?;
        for c in 0..values.ncols() {
            for r in 0..values.nrows() {
                if missing[(r, c)] {
                    values[(r, c)] = f64::NAN;
                } else if !values[(r, c)].is_finite() {
                    return Err(Error::Parse {
                        row: r,
                        column: Some(c),
                        message: "non-finite value not flagged as missing".into(),
                    });
                }
            }
        }
        Ok(Self {
            var_names,
            values,
            missing,
        })
    }

    /// Builds a dataset from per-variable columns of equal length.
    pub fn from_columns(var_names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("columns have different lengths"));
        }
        let values = DMatrix::from_fn(n, columns.len(), |r, c| columns[c][r]);
        Self::new(var_names, values)
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn missing_mask(&self) -> &DMatrix<bool> {
        &self.missing
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.var_names
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Column `j`, with `NaN` at missing positions.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.values.nrows();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        (!self.missing[(row, col)]).then(|| self.values[(row, col)])
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[(row, col)]
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn missing_counts(&self) -> Vec<usize> {
        (0..self.n_vars())
            .map(|c| self.missing.column(c).iter().filter(|&&m| m).count())
            .collect()
    }

    /// Rows in which none of `cols` is missing (pairwise-complete deletion).
    pub fn complete_rows(&self, cols: &[usize]) -> Vec<usize> {
        (0..self.n_samples())
            .filter(|&r| cols.iter().all(|&c| !self.missing[(r, c)]))
            .collect()
    }

    /// Values of `col` at `rows`.
    pub fn gather(&self, col: usize, rows: &[usize]) -> Vec<f64> {
        let column = self.column(col);
        rows.iter().map(|&r| column[r]).collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> TabularDataset {
        let names = cols.iter().map(|&c| self.var_names[c].clone()).collect();
        let values = self.values.select_columns(cols);
        let missing = self.missing.select_columns(cols);
        TabularDataset {
            var_names: names,
            values,
            missing,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> TabularDataset {
        TabularDataset {
            var_names: self.var_names.clone(),
            values: self.values.select_rows(rows),
            missing: self.missing.select_rows(rows),
        }
    }

    /// Writes the dataset as CSV with a header row; missing cells are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.var_names)?;
        let mut record = Vec::with_capacity(self.n_vars());
        for r in 0..self.n_samples() {
            record.clear();
            for c in 0..self.n_vars() {
                record.push(match self.value(r, c) {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

// NaN placeholders at missing cells must not break equality.
impl PartialEq for TabularDataset {
    fn eq(&self, other: &Self) -> bool {
        self.var_names == other.var_names
            && self.missing == other.missing
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .zip(self.missing.iter())
                .all(|((a, b), &m)| m || a == b)
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateVariable(name.clone()));
        }
    }
    Ok(())
}

/// One or more disjoint, contiguous multivariate series sharing a column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    var_names: Vec<String>,
    blocks: Vec<TabularDataset>,
}

impl TimeSeriesDataset {
    pub fn new(blocks: Vec<TabularDataset>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::invalid("time series needs at least one block"))?;
        let var_names = first.var_names().to_vec();
        for (i, b) in blocks.iter().enumerate() {
            if b.var_names() != var_names.as_slice() {
                return Err(Error::invalid(format!(
                    "block {i} has a different column layout"
                )));
            }
        }
        Ok(Self { var_names, blocks })
    }

    pub fn single(block: TabularDataset) -> Self {
        Self {
            var_names: block.var_names().to_vec(),
            blocks: vec![block],
        }
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn blocks(&self) -> &[TabularDataset] {
        &self.blocks
    }

    pub fn total_samples(&self) -> usize {
        self.blocks.iter().map(TabularDataset::n_samples).sum()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.var_names
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Lag-embedded view: column `lag * N + v` holds variable `v` at `t - lag`
    /// for `lag` in `0..=max_lag`. Rows are the time steps `t >= max_lag` of
    /// every block, concatenated; no row spans two blocks.
    pub fn lagged_design(&self, max_lag: usize) -> Result<TabularDataset> {
        let n = self.n_vars();
        let mut rows = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.n_samples() <= max_lag {
                return Err(Error::InsufficientSamples {
                    context: format!("block {i} with max_lag {max_lag}"),
                    required: max_lag + 1,
                    available: b.n_samples(),
                });
            }
            rows += b.n_samples() - max_lag;
        }
        let cols = n * (max_lag + 1);
        let mut values = DMatrix::zeros(rows, cols);
        let mut missing = DMatrix::from_element(rows, cols, false);
        let mut out_row = 0;
        for b in &self.blocks {
            for t in max_lag..b.n_samples() {
                for lag in 0..=max_lag {
                    for v in 0..n {
                        let c = lag * n + v;
                        values[(out_row, c)] = b.values()[(t - lag, v)];
                        missing[(out_row, c)] = b.is_missing(t - lag, v);
                    }
                }
                out_row += 1;
            }
        }
        let mut names = Vec::with_capacity(cols);
        for lag in 0..=max_lag {
            for v in &self.var_names {
                names.push(lagged_name(v, lag));
            }
        }
        TabularDataset::with_mask(names, values, missing)
    }

    /// All blocks stacked vertically. Only meaningful for per-column statistics.
    pub fn stacked(&self) -> TabularDataset {
        let rows = self.total_samples();
        let n = self.n_vars();
        let mut values = DMatrix::zeros(rows, n);
        let mut missing = DMatrix::from_element(rows, n, false);
        let mut offset = 0;
        for b in &self.blocks {
            values
                .view_mut((offset, 0), (b.n_samples(), n))
                .copy_from(b.values());
            missing
                .view_mut((offset, 0), (b.n_samples(), n))
                .copy_from(b.missing_mask());
            offset += b.n_samples();
        }
        TabularDataset {
            var_names: self.var_names.clone(),
            values,
            missing,
        }
    }

    fn split_like(&self, stacked: TabularDataset) -> TimeSeriesDataset {
        let mut offset = 0;
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let rows: Vec<usize> = (offset..offset + b.n_samples()).collect();
                offset += b.n_samples();
                stacked.select_rows(&rows)
            })
            .collect();
        TimeSeriesDataset {
            var_names: stacked.var_names.clone(),
            blocks,
        }
    }
}

pub fn lagged_name(var: &str, lag: usize) -> String {
    if lag == 0 {
        format!("{var}(t)")
    } else {
        format!("{var}(t-{lag})")
    }
}

/// Either kind of dataset, as accepted by the CLI and service layers.
#[derive(Debug, Clone)]
pub enum Dataset {
    Tabular(TabularDataset),
    TimeSeries(TimeSeriesDataset),
}

impl Dataset {
    pub fn var_names(&self) -> &[String] {
        match self {
            Dataset::Tabular(d) => d.var_names(),
            Dataset::TimeSeries(d) => d.var_names(),
        }
    }

    /// The tabular view; a time series is stacked across blocks.
    pub fn to_tabular(&self) -> TabularDataset {
        match self {
            Dataset::Tabular(d) => d.clone(),
            Dataset::TimeSeries(d) => d.stacked(),
        }
    }

    pub fn to_timeseries(&self) -> TimeSeriesDataset {
        match self {
            Dataset::Tabular(d) => TimeSeriesDataset::single(d.clone()),
            Dataset::TimeSeries(d) => d.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    missing_tokens: Option<&[&str]>,
) -> Result<TabularDataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, has_header, missing_tokens)
}

/// Parses UTF-8 CSV. Without a header, variables are named `X0, X1, ...`.
pub fn read_csv<R: Read>(
    input: R,
    has_header: bool,
    missing_tokens: Option<&[&str]>,
) -> Result<TabularDataset> {
    let tokens = missing_tokens.unwrap_or(DEFAULT_MISSING_TOKENS);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();

    let mut names: Option<Vec<String>> = None;
    if has_header {
        match records.next() {
            Some(header) => {
                let header = header?;
                let header: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
                check_unique(&header)?;
                names = Some(header);
            }
            None => return Err(Error::NoData),
        }
    }

    let mut cells: Vec<f64> = Vec::new();
    let mut width = names.as_ref().map(Vec::len);
    let mut n_rows = 0;
    for (row, record) in records.enumerate() {
        let record = record?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row,
                column: None,
                message: format!("expected {w} fields, found {}", record.len()),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if tokens.contains(&cell) {
                cells.push(f64::NAN);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    column: Some(col),
                    message: format!("non-numeric value `{cell}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        column: Some(col),
                        message: format!("non-finite value `{cell}`"),
                    });
                }
                cells.push(v);
            }
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::NoData);
    }
    let width = width.unwrap_or(0);
    let names = names.unwrap_or_else(|| (0..width).map(|i| format!("X{i}")).collect());
    let values = DMatrix::from_row_slice(n_rows, width, &cells);
    TabularDataset::new(names, values)
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &TabularDataset) -> Result<Self> {
        let mut means = Vec::with_capacity(data.n_vars());
        let mut stds = Vec::with_capacity(data.n_vars());
        for c in 0..data.n_vars() {
            let valid: Vec<f64> = data.column(c).iter().copied().filter(|v| !v.is_nan()).collect();
            if valid.len() < 2 {
                return Err(Error::InsufficientSamples {
                    context: format!("standardizing `{}`", data.var_names()[c]),
                    required: 2,
                    available: valid.len(),
                });
            }
            let n = valid.len() as f64;
            let mean = valid.iter().sum::<f64>() / n;
            let var = valid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            stds.push(var.sqrt());
        }
        Ok(Self { means, stds })
    }

    pub fn fit_series(data: &TimeSeriesDataset) -> Result<Self> {
        Self::fit(&data.stacked())
    }

    pub fn transform(&self, data: &TabularDataset) -> Result<TabularDataset> {
        if data.n_vars() != self.means.len() {
            return Err(Error::invalid("column count differs from fitted data"));
        }
        let mut values = data.values().clone();
        for c in 0..data.n_vars() {
            let scale = self.stds[c].max(STD_EPSILON);
            for v in values.column_mut(c).iter_mut() {
                *v = (*v - self.means[c]) / scale;
            }
        }
        TabularDataset::with_mask(data.var_names().to_vec(), values, data.missing_mask().clone())
    }

    pub fn transform_series(&self, data: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
        let blocks = data
            .blocks()
            .iter()
            .map(|b| self.transform(b))
            .collect::<Result<Vec<_>>>()?;
        TimeSeriesDataset::new(blocks)
    }
}

/// Column-wise `(x - mean) / max(std, 1e-12)` with the population divisor.
pub fn standardize(data: &TabularDataset) -> Result<TabularDataset> {
    Standardizer::fit(data)?.transform(data)
}

/// Standardizes every block with statistics pooled over all blocks.
pub fn standardize_series(data: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
    Standardizer::fit_series(data)?.transform_series(data)
}

/// `out[t] = in[t + interval] - in[t]` within each block. An output cell is
/// missing iff either input cell is.
pub fn difference_transform(data: &TimeSeriesDataset, interval: usize) -> Result<TimeSeriesDataset> {
    if interval == 0 {
        return Err(Error::invalid("difference interval must be at least 1"));
    }
    let mut blocks = Vec::with_capacity(data.blocks().len());
    for (i, b) in data.blocks().iter().enumerate() {
        if b.n_samples() <= interval {
            return Err(Error::InsufficientSamples {
                context: format!("differencing block {i} with interval {interval}"),
                required: interval + 1,
                available: b.n_samples(),
            });
        }
        let rows = b.n_samples() - interval;
        let values = DMatrix::from_fn(rows, b.n_vars(), |t, c| {
            b.values()[(t + interval, c)] - b.values()[(t, c)]
        });
        let missing = DMatrix::from_fn(rows, b.n_vars(), |t, c| {
            b.is_missing(t + interval, c) || b.is_missing(t, c)
        });
        blocks.push(TabularDataset::with_mask(b.var_names().to_vec(), values, missing)?);
    }
    TimeSeriesDataset::new(blocks)
}

/// Equal-frequency binning into `nstates` states. Bin edges are the
/// `k / nstates` quantiles (linear interpolation); a value equal to an edge
/// goes to the lower bin. `NaN` stays `NaN`.
pub fn quantile_bin(values: &[f64], nstates: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..nstates)
        .map(|k| quantile_sorted(&sorted, k as f64 / nstates as f64))
        .collect();
    values
        .iter()
        .map(|&v| {
            if v.is_nan() {
                f64::NAN
            } else {
                edges.iter().filter(|&&e| v > e).count() as f64
            }
        })
        .collect()
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Maps the distinct observed values of a column onto `0..k` preserving order.
pub fn rank_remap(values: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    values
        .iter()
        .map(|&v| {
            if v.is_nan() {
                f64::NAN
            } else {
                distinct.partition_point(|&d| d < v) as f64
            }
        })
        .collect()
}

/// Converts mixed continuous/discrete data into integer states. Continuous
/// columns are quantile-binned, discrete columns rank-remapped.
pub fn heterogeneous_to_discrete(
    data: &TabularDataset,
    discrete_flags: &BTreeMap<String, bool>,
    nstates: usize,
) -> Result<TabularDataset> {
    if nstates < 2 {
        return Err(Error::invalid("nstates must be at least 2"));
    }
    let known: BTreeSet<&str> = data.var_names().iter().map(String::as_str).collect();
    if let Some(extra) = discrete_flags.keys().find(|k| !known.contains(k.as_str())) {
        return Err(Error::UnknownVariable(extra.clone()));
    }
    let mut columns = Vec::with_capacity(data.n_vars());
    for (c, name) in data.var_names().iter().enumerate() {
        let is_discrete = *discrete_flags
            .get(name)
            .ok_or_else(|| Error::invalid(format!("no discrete flag for `{name}`")))?;
        let col = data.column(c);
        if col.iter().all(|v| v.is_nan()) {
            return Err(Error::invalid(format!("column `{name}` is entirely missing")));
        }
        columns.push(if is_discrete {
            rank_remap(col)
        } else {
            quantile_bin(col, nstates)
        });
    }
    TabularDataset::from_columns(data.var_names().to_vec(), columns)
}

/// Series variant: bin edges and value maps are computed over all blocks.
pub fn heterogeneous_to_discrete_series(
    data: &TimeSeriesDataset,
    discrete_flags: &BTreeMap<String, bool>,
    nstates: usize,
) -> Result<TimeSeriesDataset> {
    let stacked = heterogeneous_to_discrete(&data.stacked(), discrete_flags, nstates)?;
    Ok(data.split_like(stacked))
}
