//! F upper tail and studentized range quantiles.

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use super::StatsError;

/// `P(F > f)` for an F(df1, df2) variable, via the regularized incomplete
/// beta function.
pub fn f_sf(f: f64, df1: f64, df2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let x = df2 / (df2 + df1 * f);
    beta_reg(df2 / 2.0, df1 / 2.0, x).clamp(0.0, 1.0)
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule over `[a, b]` with `panels` panels.
fn composite_rule(a: f64, b: f64, panels: usize, base: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut pts = Vec::with_capacity(panels * base.0.len());
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (x, w) in base.0.iter().zip(&base.1) {
            pts.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    pts
}

const GL_ORDER: usize = 16;
const Z_LIMIT: f64 = 8.5;

/// Studentized range CDF evaluator at a fixed quadrature resolution.
struct Ptukey {
    k: f64,
    inner: Vec<(f64, f64, f64)>,
    outer: Vec<(f64, f64)>,
}

impl Ptukey {
    fn new(k: usize, nu: f64, resolution: usize) -> Self {
        let base = gauss_legendre(GL_ORDER);
        let inner = composite_rule(-Z_LIMIT, Z_LIMIT, 4 * resolution, &base)
            .into_iter()
            .map(|(z, w)| (z, w * norm_pdf(z), norm_cdf(z)))
            .collect();
        // density of s = sqrt(chi2_nu / nu)
        let ln_c = 0.5 * nu * nu.ln() - ln_gamma(0.5 * nu) - (0.5 * nu - 1.0) * std::f64::consts::LN_2;
        let spread = 12.0 / (2.0 * nu).sqrt();
        let lo = (1.0 - spread).max(0.0);
        let hi = 1.0 + spread;
        let outer = composite_rule(lo, hi, 8 * resolution, &base)
            .into_iter()
            .map(|(s, w)| {
                let dens = if s > 0.0 {
                    (ln_c + (nu - 1.0) * s.ln() - 0.5 * nu * s * s).exp()
                } else {
                    0.0
                };
                (s, w * dens)
            })
            .collect();
        Ptukey {
            k: k as f64,
            inner,
            outer,
        }
    }

    /// CDF of the range of k standard normals.
    fn range_cdf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let sum: f64 = self
            .inner
            .iter()
            .map(|&(z, wt, cdf_z)| wt * (cdf_z - norm_cdf(z - w)).max(0.0).powf(self.k - 1.0))
            .sum();
        (self.k * sum).clamp(0.0, 1.0)
    }

    fn cdf(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        self.outer
            .iter()
            .map(|&(s, wt)| wt * self.range_cdf(q * s))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64, lo: f64, hi: f64) -> Option<(f64, usize)> {
        let (mut lo, mut hi) = (lo, hi);
        if self.cdf(lo) > p || self.cdf(hi) < p {
            return None;
        }
        let mut iters = 0;
        while hi - lo > 1e-9 * hi.max(1.0) && iters < 200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
        }
        Some((0.5 * (lo + hi), iters))
    }
}

/// CDF of the studentized range statistic for `k` means and `nu` error DF.
pub fn ptukey(q: f64, k: usize, nu: f64) -> f64 {
    Ptukey::new(k, nu, 4).cdf(q)
}

/// Upper-`alpha` quantile of the studentized range: `P(Q > q) = alpha`.
///
/// The double integral is evaluated at two quadrature resolutions; if the
/// two roots disagree by more than 1e-5 the result is rejected.
pub fn q_critical(alpha: f64, k: usize, df_error: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if k < 2 {
        return Err(StatsError::Domain(format!("need at least 2 groups, got {k}")));
    }
    if !(df_error >= 1.0) {
        return Err(StatsError::Domain(format!("error DF must be at least 1, got {df_error}")));
    }
    let p = 1.0 - alpha;
    let coarse = Ptukey::new(k, df_error, 2);
    let mut hi = 8.0;
    while coarse.cdf(hi) < p {
        hi *= 2.0;
        if hi > 1e5 {
            return Err(StatsError::NonConvergence(format!(
                "no upper bracket below 1e5 for alpha={alpha}, k={k}, df={df_error}"
            )));
        }
    }
    let (q1, it1) = coarse.quantile(p, 0.0, hi).ok_or_else(|| {
        StatsError::NonConvergence(format!("coarse bracket [0, {hi}] lost the root"))
    })?;
    let fine = Ptukey::new(k, df_error, 4);
    let width = 0.05 * q1.max(0.01);
    let (q2, it2) = fine
        .quantile(p, (q1 - width).max(0.0), q1 + width)
        .or_else(|| fine.quantile(p, 0.0, hi))
        .ok_or_else(|| StatsError::NonConvergence(format!("fine bracket [0, {hi}] lost the root")))?;
    if (q1 - q2).abs() > 1e-5 * q2.max(1.0) {
        return Err(StatsError::NonConvergence(format!(
            "quadrature resolutions disagree: {q1} ({it1} steps) vs {q2} ({it2} steps) \
             for alpha={alpha}, k={k}, df={df_error}"
        )));
    }
    Ok(q2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{ChiSquared, Distribution, StandardNormal};
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn f_sf_examples() {
        assert!((f_sf(1.0, 1.0, 1.0) - 0.5).abs() < 1e-12);
        assert_eq!(f_sf(0.0, 3.0, 7.0), 1.0);
        assert_eq!(f_sf(f64::INFINITY, 3.0, 7.0), 0.0);
    }

    fn f_density(x: f64, d1: f64, d2: f64) -> f64 {
        let ln_b = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
        ((d1 / 2.0) * (d1 / d2).ln() + (d1 / 2.0 - 1.0) * x.ln() - ((d1 + d2) / 2.0) * (1.0 + d1 * x / d2).ln()
            - ln_b)
            .exp()
    }

    #[test]
    fn f_sf_against_simpson_integration() {
        // integrate the density from 0 to F with Simpson's rule
        for &(f, d1, d2) in &[(4.0, 2.0, 10.0), (2.5, 3.0, 20.0), (0.7, 5.0, 8.0)] {
            let n = 200_000;
            let h: f64 = f / n as f64;
            let mut s = f_density(1e-12, d1, d2) + f_density(f, d1, d2);
            for i in 1..n {
                let x = i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f_density(x, d1, d2);
            }
            let cdf = s * h / 3.0;
            assert!((f_sf(f, d1, d2) - (1.0 - cdf)).abs() < 1e-6, "F={f}");
        }
        assert!((f_sf(4.0, 2.0, 10.0) - 0.052922).abs() < 5e-6);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(GL_ORDER);
        let sum: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((sum - 2.0 / 31.0).abs() < 1e-13);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn two_groups_match_t_quantile() {
        for nu in [5.0, 10.0, 30.0, 120.0] {
            let t = StudentsT::new(0.0, 1.0, nu).unwrap().inverse_cdf(0.975);
            let q = q_critical(0.05, 2, nu).unwrap();
            assert!((q - std::f64::consts::SQRT_2 * t).abs() < 1e-3, "nu={nu}: {q}");
        }
    }

    #[test]
    fn monte_carlo_three_groups() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let chi = ChiSquared::<f64>::new(10.0).unwrap();
        let reps = 1_000_000;
        let mut qs: Vec<f64> = (0..reps)
            .map(|_| {
                let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let range = z.iter().cloned().fold(f64::MIN, f64::max) - z.iter().cloned().fold(f64::MAX, f64::min);
                range / (chi.sample(&mut rng) / 10.0).sqrt()
            })
            .collect();
        qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mc = qs[(0.95 * reps as f64) as usize];
        let q = q_critical(0.05, 3, 10.0).unwrap();
        assert!((q - mc).abs() < 0.02, "{q} vs {mc}");
        assert!((q - 3.88).abs() < 0.02);
    }

    #[test]
    fn limits_and_errors() {
        assert!(q_critical(0.999_999, 4, 20.0).unwrap() < 0.05);
        assert!(q_critical(0.0, 3, 10.0).is_err());
        assert!(q_critical(0.05, 1, 10.0).is_err());
        assert!(q_critical(0.05, 3, 0.0).is_err());
        assert!((ptukey(q_critical(0.01, 5, 40.0).unwrap(), 5, 40.0) - 0.99).abs() < 1e-6);
    }
}
