//! Ordinary least squares.

use super::linalg::{qr_least_squares, upper_triangular_inverse, Matrix};
use super::StatsError;

/// Relative tolerance for declaring a column dependent.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sse: f64,
    /// Corrected total sum of squares.
    pub sst: f64,
    pub r2: f64,
    pub n: usize,
    /// Number of estimated coefficients, intercept included.
    pub p: usize,
    pub df_error: usize,
}

impl OlsFit {
    pub fn mse(&self) -> f64 {
        if self.df_error == 0 {
            f64::NAN
        } else {
            self.sse / self.df_error as f64
        }
    }

    pub fn ss_model(&self) -> f64 {
        (self.sst - self.sse).max(0.0)
    }
}

/// Fits `y = X b`. `x` must already contain the intercept column when one
/// is wanted. Rank deficiency is an error listing the dependent columns.
pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<OlsFit, StatsError> {
    let (n, p) = (x.rows, x.cols);
    if y.len() != n {
        return Err(StatsError::Dimension(format!("{n} rows but {} responses", y.len())));
    }
    if n <= p {
        return Err(StatsError::InsufficientData(format!(
            "{n} observations for {p} coefficients"
        )));
    }
    let sol = qr_least_squares(x, y, RANK_TOL);
    if !sol.dependent.is_empty() {
        return Err(StatsError::Rank {
            dependent: sol.dependent,
        });
    }
    let fitted = x.mul_vec(&sol.coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r2 = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 1.0 };
    let df_error = n - p;
    let mse = sse / df_error as f64;
    // Var(b) = mse * (R^T R)^-1 = mse * R^-1 R^-T
    let rinv = upper_triangular_inverse(&sol.r);
    let std_errors = (0..p)
        .map(|i| (mse * rinv[i].iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();
    Ok(OlsFit {
        coefficients: sol.coefficients,
        std_errors,
        fitted,
        residuals,
        sse,
        sst,
        r2,
        n,
        p,
        df_error,
    })
}

/// Residual sum of squares of the fit restricted to `cols`, with dependent
/// columns skipped rather than rejected.
pub(crate) fn sse_of(x: &Matrix, y: &[f64], cols: &[usize]) -> f64 {
    let sub = x.select_columns(cols);
    let sol = qr_least_squares(&sub, y, RANK_TOL);
    let fitted = sub.mul_vec(&sol.coefficients);
    y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        let fit = fit_ols(&x, &[1.0, 3.0, 5.0]).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.sse < 1e-20);
    }

    #[test]
    fn duplicated_column_is_rank_error() {
        let x = Matrix::from_rows(&[
            vec![1.0, 2.0, 2.0],
            vec![1.0, 3.0, 3.0],
            vec![1.0, 5.0, 5.0],
            vec![1.0, 7.0, 7.0],
        ]);
        match fit_ols(&x, &[1.0, 2.0, 3.0, 4.0]) {
            Err(StatsError::Rank { dependent }) => assert_eq!(dependent, [2]),
            other => panic!("expected a rank error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(matches!(fit_ols(&x, &[1.0, 2.0]), Err(StatsError::InsufficientData(_))));
    }
}
