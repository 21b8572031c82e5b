//! Least squares and distribution tails used by the tests and regressions.

use nalgebra::{DMatrix, DVector};
use statrs::function::{beta::beta_reg, gamma::gamma_ur};

use crate::error::{Error, Result};

/// Ridge added to the normal equations when the design is rank deficient.
pub const RIDGE: f64 = 1e-8;

/// Relative threshold on `|R_ii|` below which a design counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    pub rank_deficient: bool,
}

/// Solves `min |y - X b|` with Householder QR, falling back to ridge-regularized
/// normal equations when `X` is (numerically) rank deficient.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::invalid("design and response lengths differ"));
    }
    if p == 0 {
        let rss = y.norm_squared();
        return Ok(LeastSquares {
            coefficients: DVector::zeros(0),
            residuals: y.clone(),
            rss,
            rank_deficient: false,
        });
    }
    let mut rank_deficient = n < p;
    let mut coefficients = None;
    if !rank_deficient {
        let qr = x.clone().qr();
        let r = qr.r();
        let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rank_deficient = scale == 0.0 || r.diagonal().iter().any(|v| v.abs() <= RANK_TOL * scale);
        if !rank_deficient {
            let mut qty = y.clone();
            qr.q_tr_mul(&mut qty);
            let head = qty.rows(0, p).into_owned();
            coefficients = r.solve_upper_triangular(&head);
            rank_deficient = coefficients.is_none();
        }
    }
    let coefficients = match coefficients {
        Some(c) => c,
        None => ridge_solve(x, y)?,
    };
    let residuals = y - x * &coefficients;
    let rss = residuals.norm_squared();
    Ok(LeastSquares {
        coefficients,
        residuals,
        rss,
        rank_deficient,
    })
}

/// Residuals of every column of `targets` regressed on `x`, sharing one QR.
pub fn residualize(x: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    if targets.nrows() != n {
        return Err(Error::invalid("design and response lengths differ"));
    }
    if p == 0 {
        return Ok(targets.clone());
    }
    if n >= p {
        let qr = x.clone().qr();
        let r = qr.r();
        let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 && r.diagonal().iter().all(|v| v.abs() > RANK_TOL * scale) {
            let mut qty = targets.clone();
            qr.q_tr_mul(&mut qty);
            let head = qty.rows(0, p).into_owned();
            if let Some(coef) = r.solve_upper_triangular(&head) {
                return Ok(targets - x * coef);
            }
        }
    }
    let mut out = targets.clone();
    for j in 0..targets.ncols() {
        let y = targets.column(j).into_owned();
        let b = ridge_solve(x, &y)?;
        out.set_column(j, &(y - x * b));
    }
    Ok(out)
}

fn ridge_solve(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let mut gram = x.transpose() * x;
    for i in 0..gram.nrows() {
        gram[(i, i)] += RIDGE;
    }
    let rhs = x.transpose() * y;
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::invalid("regression design is singular even after ridge"))
}

/// Diagonal of `(X'X)^-1`, with the same ridge fallback as [`least_squares`].
pub fn inverse_gram_diagonal(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let mut gram = x.transpose() * x;
    let chol = match gram.clone().cholesky() {
        Some(c) => c,
        None => {
            for i in 0..gram.nrows() {
                gram[(i, i)] += RIDGE;
            }
            gram.cholesky()
                .ok_or_else(|| Error::invalid("regression design is singular even after ridge"))?
        }
    };
    Ok(chol.inverse().diagonal())
}

/// OLS of `y` on `x` plus coefficient t-tests.
#[derive(Debug, Clone)]
pub struct OlsInference {
    pub fit: LeastSquares,
    pub std_errors: DVector<f64>,
    pub pvalues: DVector<f64>,
    pub df: usize,
}

pub fn ols_with_inference(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsInference> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::InsufficientSamples {
            context: "regression".into(),
            required: p + 1,
            available: n,
        });
    }
    let fit = least_squares(x, y)?;
    let df = n - p;
    let sigma2 = fit.rss / df as f64;
    let diag = inverse_gram_diagonal(x)?;
    let std_errors = diag.map(|d| (sigma2 * d.max(0.0)).sqrt());
    let pvalues = DVector::from_iterator(
        p,
        fit.coefficients
            .iter()
            .zip(std_errors.iter())
            .map(|(&b, &se)| {
                if se > 0.0 {
                    student_t_two_sided(b / se, df as f64)
                } else if b == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }),
    );
    Ok(OlsInference {
        fit,
        std_errors,
        pvalues,
        df,
    })
}

/// Builds an `n x (k + intercept)` design from column slices restricted to `rows`.
pub fn design(columns: &[&[f64]], rows: &[usize], intercept: bool) -> DMatrix<f64> {
    let offset = usize::from(intercept);
    DMatrix::from_fn(rows.len(), columns.len() + offset, |r, c| {
        if intercept && c == 0 {
            1.0
        } else {
            columns[c - offset][rows[r]]
        }
    })
}

/// Two-sided p-value of Student's t with `df` degrees of freedom:
/// `P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Upper tail of the chi-squared distribution. `df == 0` gives 1.
pub fn chi2_sf(stat: f64, df: f64) -> f64 {
    if df <= 0.0 || stat <= 0.0 {
        return 1.0;
    }
    if !stat.is_finite() {
        return 0.0;
    }
    gamma_ur(df / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Pearson correlation; 0 when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_recovers_coefficients() {
        let x = DMatrix::from_fn(6, 2, |r, c| if c == 0 { 1.0 } else { r as f64 });
        let y = DVector::from_fn(6, |r, _| 3.0 - 2.0 * r as f64);
        let ls = least_squares(&x, &y).unwrap();
        assert!((ls.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((ls.coefficients[1] + 2.0).abs() < 1e-12);
        assert!(ls.rss < 1e-20);
        assert!(!ls.rank_deficient);
    }

    #[test]
    fn collinear_design_uses_ridge() {
        let x = DMatrix::from_fn(5, 3, |r, c| match c {
            0 => 1.0,
            _ => r as f64,
        });
        let y = DVector::from_fn(5, |r, _| r as f64);
        let ls = least_squares(&x, &y).unwrap();
        assert!(ls.rank_deficient);
        assert!(ls.rss < 1e-6);
        assert!((ls.coefficients[1] - ls.coefficients[2]).abs() < 1e-6);
    }

    #[test]
    fn tails_match_known_values() {
        // t = 2.228 with 10 df is the two-sided 5% point.
        assert!((student_t_two_sided(2.228_138_85, 10.0) - 0.05).abs() < 1e-6);
        // chi2 = 3.841 with 1 df is the 5% point.
        assert!((chi2_sf(3.841_458_82, 1.0) - 0.05).abs() < 1e-7);
        assert_eq!(chi2_sf(0.0, 3.0), 1.0);
        assert!(chi2_sf(60.0, 1.0) < 1e-10);
    }
}
