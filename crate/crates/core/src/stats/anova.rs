//! Partial F-tests for each factor of a fitted design.

use super::design::{DesignMatrix, Factor};
use super::dist::f_sf;
use super::linalg::Matrix;
use super::ols::{fit_ols, sse_of, OlsFit};
use super::StatsError;

/// p-values below this are reported as `< 1e-15`.
pub const P_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub name: String,
    pub df: usize,
    pub sum_sq: f64,
    pub f: f64,
    pub p: f64,
}

impl AnovaRow {
    pub fn p_display(&self) -> String {
        format_p(self.p)
    }
}

pub fn format_p(p: f64) -> String {
    if p < P_FLOOR {
        "< 1e-15".to_string()
    } else if p < 1e-3 {
        format!("{p:.3e}")
    } else {
        format!("{p:.3}")
    }
}

#[derive(Debug, Clone)]
pub struct AnovaTable {
    /// Overall model row.
    pub model: AnovaRow,
    pub factors: Vec<AnovaRow>,
    pub df_error: usize,
    pub sse: f64,
    pub mse: f64,
    pub sst: f64,
    pub r2: f64,
    pub n: usize,
    pub fit: OlsFit,
}

/// F statistic and p for `ss` on `df` against `mse` on `df_error`, with
/// the degenerate cases pinned: no explained variation gives F = 0 and
/// p = 1; explained variation with zero error gives F = inf and p = 0.
fn f_test(ss: f64, df: usize, mse: f64, df_error: usize, tol: f64) -> (f64, f64) {
    if df == 0 || ss <= tol {
        return (0.0, 1.0);
    }
    if mse <= tol / df_error.max(1) as f64 {
        return (f64::INFINITY, 0.0);
    }
    let f = (ss / df as f64) / mse;
    (f, f_sf(f, df as f64, df_error as f64))
}

fn tolerance(sst: f64, y: &[f64]) -> f64 {
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(sst);
    1e-20 * scale.max(f64::MIN_POSITIVE) + 1e-12 * sst
}

/// Partial F-test for the columns `cols` of `x`: the increase in SSE when
/// they are removed, per DF, over the full model's MSE.
pub fn anova_partial_f(x: &Matrix, y: &[f64], cols: &[usize]) -> Result<(usize, f64, f64), StatsError> {
    let full = fit_ols(x, y)?;
    if full.df_error == 0 {
        return Err(StatsError::InsufficientData("no error degrees of freedom".into()));
    }
    let rest: Vec<usize> = (0..x.cols).filter(|c| !cols.contains(c)).collect();
    let ss = (sse_of(x, y, &rest) - full.sse).max(0.0);
    let (f, p) = f_test(ss, cols.len(), full.mse(), full.df_error, tolerance(full.sst, y));
    Ok((cols.len(), f, p))
}

/// Overall and per-factor partial F-tests, each factor adjusted for all
/// others.
pub fn anova(design: &DesignMatrix) -> Result<AnovaTable, StatsError> {
    let fit = fit_ols(&design.x, &design.y)?;
    if fit.df_error == 0 {
        return Err(StatsError::InsufficientData("no error degrees of freedom".into()));
    }
    let tol = tolerance(fit.sst, &design.y);
    let mse = fit.mse();
    let model_df = design.model_df();
    let (f, p) = f_test(fit.ss_model(), model_df, mse, fit.df_error, tol);
    let model = AnovaRow {
        name: "All Factors".into(),
        df: model_df,
        sum_sq: fit.ss_model(),
        f,
        p,
    };
    let mut factors = Vec::new();
    for (factor, cols) in &design.factor_columns {
        factors.push(factor_row(design, &fit, *factor, cols, tol));
    }
    Ok(AnovaTable {
        model,
        factors,
        df_error: fit.df_error,
        sse: fit.sse,
        mse,
        sst: fit.sst,
        r2: fit.r2,
        n: fit.n,
        fit,
    })
}

fn factor_row(design: &DesignMatrix, fit: &OlsFit, factor: Factor, cols: &[usize], tol: f64) -> AnovaRow {
    let rest: Vec<usize> = (0..design.x.cols).filter(|c| !cols.contains(c)).collect();
    let ss = if cols.is_empty() {
        0.0
    } else {
        (sse_of(&design.x, &design.y, &rest) - fit.sse).max(0.0)
    };
    let (f, p) = f_test(ss, cols.len(), fit.mse(), fit.df_error, tol);
    AnovaRow {
        name: factor.name().to_string(),
        df: cols.len(),
        sum_sq: ss,
        f,
        p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binary_factor_matches_pooled_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..14).map(|_| rng.random_range(0.0..10.0)).collect();
        let b: Vec<f64> = (0..9).map(|_| rng.random_range(2.0..13.0)).collect();
        let rows: Vec<Vec<f64>> = a
            .iter()
            .map(|_| vec![1.0, 0.0])
            .chain(b.iter().map(|_| vec![1.0, 1.0]))
            .collect();
        let y: Vec<f64> = a.iter().chain(&b).copied().collect();
        let (df, f, _) = anova_partial_f(&Matrix::from_rows(&rows), &y, &[1]).unwrap();
        assert_eq!(df, 1);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let ss = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        };
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let sp2 = (ss(&a) + ss(&b)) / (na + nb - 2.0);
        let t = (mean(&a) - mean(&b)) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
        assert!((f - t * t).abs() < 1e-9 * f.max(1.0), "{f} vs {}", t * t);
    }

    #[test]
    fn orthogonal_factor_has_zero_f() {
        // y depends on x1 only; x2 is balanced and orthogonal
        let x1 = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        let x2 = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let noise = [0.1, 0.1, -0.2, -0.2, 0.1, 0.1];
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, x1[i], x2[i]]).collect();
        let y: Vec<f64> = (0..6).map(|i| 3.0 * x1[i] + noise[i]).collect();
        let (_, f, p) = anova_partial_f(&Matrix::from_rows(&rows), &y, &[2]).unwrap();
        assert_eq!((f, p), (0.0, 1.0));
    }

    #[test]
    fn perfect_fit_reports_floor() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64, ((i * i) % 5) as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| 2.0 * i as f64 + 1.0).collect();
        let (_, f, p) = anova_partial_f(&Matrix::from_rows(&rows), &y, &[1]).unwrap();
        assert!(f > 1e12 || f.is_infinite());
        assert!(p < P_FLOOR);
        assert_eq!(format_p(p), "< 1e-15");
    }

    #[test]
    fn no_error_df() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]];
        let x = Matrix::from_rows(&rows);
        let y = [1.0, 2.0, 4.0];
        assert!(anova_partial_f(&x.select_columns(&[0, 1]), &y[..], &[1]).is_ok());
        let tight = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(anova_partial_f(&tight, &[1.0, 2.0], &[1]).is_err());
    }
}
