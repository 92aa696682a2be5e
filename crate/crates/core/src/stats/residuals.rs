//! Predicted-versus-residual data for model diagnostics.

use super::ols::OlsFit;

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSummary {
    /// `(predicted, residual)` in row order.
    pub points: Vec<(f64, f64)>,
    pub mean: f64,
    pub sd: f64,
    /// Sample skewness (0 when the residuals have no spread).
    pub skewness: f64,
}

pub fn residual_plot_data(fit: &OlsFit) -> ResidualSummary {
    let points: Vec<(f64, f64)> = fit.fitted.iter().copied().zip(fit.residuals.iter().copied()).collect();
    let n = points.len() as f64;
    if points.is_empty() {
        return ResidualSummary {
            points,
            mean: 0.0,
            sd: 0.0,
            skewness: 0.0,
        };
    }
    let mean = fit.residuals.iter().sum::<f64>() / n;
    let m2 = fit.residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let m3 = fit.residuals.iter().map(|r| (r - mean).powi(3)).sum::<f64>() / n;
    let sd = if n > 1.0 { (m2 * n / (n - 1.0)).sqrt() } else { 0.0 };
    let skewness = if m2 > 1e-300 { m3 / m2.powf(1.5) } else { 0.0 };
    ResidualSummary {
        points,
        mean,
        sd,
        skewness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::linalg::Matrix;
    use crate::stats::ols::fit_ols;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn perfect_fit_has_zero_residuals() {
        let x = Matrix::from_rows(&(0..5).map(|i| vec![1.0, i as f64]).collect::<Vec<_>>());
        let y: Vec<f64> = (0..5).map(|i| 4.0 - i as f64).collect();
        let r = residual_plot_data(&fit_ols(&x, &y).unwrap());
        assert_eq!(r.points.len(), 5);
        assert!(r.points.iter().all(|(_, e)| e.abs() < 1e-12));
        assert_eq!(r.skewness, 0.0);
    }

    #[test]
    fn symmetric_noise_centres_on_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let n = 400;
        let x = Matrix::from_rows(&(0..n).map(|i| vec![1.0, i as f64 / 10.0]).collect::<Vec<_>>());
        let y: Vec<f64> = (0..n).map(|i| i as f64 / 10.0 + noise.sample(&mut rng)).collect();
        let r = residual_plot_data(&fit_ols(&x, &y).unwrap());
        assert_eq!(r.points.len(), n);
        assert!(r.mean.abs() < 3.0 * r.sd / (n as f64).sqrt());
        assert!(r.skewness.abs() < 0.5);
    }
}
