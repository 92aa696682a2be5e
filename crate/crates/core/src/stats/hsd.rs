//! Tukey-Kramer pairwise comparisons and greedy grouping.

use super::dist::q_critical;
use super::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct PairTest {
    /// Indices into [`HsdResult::codecs`].
    pub i: usize,
    pub j: usize,
    pub diff: f64,
    pub threshold: f64,
    pub significant: bool,
}

#[derive(Debug, Clone)]
pub struct HsdResult {
    /// Codecs by descending mean.
    pub codecs: Vec<String>,
    pub means: Vec<f64>,
    pub counts: Vec<usize>,
    /// Each group lists codec indices; groups are contiguous runs.
    pub groups: Vec<Vec<usize>>,
    pub pairs: Vec<PairTest>,
    pub q: f64,
    pub mse: f64,
    pub df_error: usize,
    pub alpha: f64,
}

impl HsdResult {
    /// `membership[c][g]` is true when codec `c` is in group `g`.
    pub fn membership(&self) -> Vec<Vec<bool>> {
        (0..self.codecs.len())
            .map(|c| self.groups.iter().map(|g| g.contains(&c)).collect())
            .collect()
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairTest> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == a && p.j == b)
    }

    pub fn significant(&self, i: usize, j: usize) -> bool {
        i != j && self.pair(i, j).is_some_and(|p| p.significant)
    }
}

/// Pooled within-codec mean square and its DF.
pub fn one_way_mse(samples: &[(String, Vec<f64>)]) -> Result<(f64, usize), StatsError> {
    let n: usize = samples.iter().map(|(_, s)| s.len()).sum();
    let k = samples.len();
    if n <= k {
        return Err(StatsError::InsufficientData(format!(
            "{n} observations in {k} groups leave no error DF"
        )));
    }
    let ss: f64 = samples
        .iter()
        .map(|(_, s)| {
            let m = s.iter().sum::<f64>() / s.len() as f64;
            s.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        })
        .sum();
    Ok((ss / (n - k) as f64, n - k))
}

/// Maximal contiguous runs of mutually non-different entries, scanning a
/// descending-mean order. `differs(a, b)` with `a < b`.
pub fn greedy_groups(k: usize, differs: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    let mut covered_to: Option<usize> = None;
    for start in 0..k {
        let mut end = start;
        while end + 1 < k && (start..=end).all(|a| !differs(a, end + 1)) {
            end += 1;
        }
        if covered_to.is_none_or(|c| end > c) {
            groups.push((start..=end).collect());
            covered_to = Some(end);
        }
    }
    groups
}

/// Tukey-Kramer HSD over per-codec samples. `model` supplies the MSE and
/// error DF of an associated model; otherwise the one-way decomposition of
/// the samples is used.
pub fn tukey_kramer(
    samples: &[(String, Vec<f64>)],
    alpha: f64,
    model: Option<(f64, usize)>,
) -> Result<HsdResult, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::InsufficientData("need at least two codecs".into()));
    }
    if let Some((name, _)) = samples.iter().find(|(_, s)| s.is_empty()) {
        return Err(StatsError::InsufficientData(format!("codec {name} has no samples")));
    }
    let (mse, df_error) = match model {
        Some(m) => m,
        None => one_way_mse(samples)?,
    };
    let k = samples.len();
    let q = q_critical(alpha, k, df_error as f64)?;
    let mut order: Vec<(String, f64, usize)> = samples
        .iter()
        .map(|(name, s)| (name.clone(), s.iter().sum::<f64>() / s.len() as f64, s.len()))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let diff = (order[i].1 - order[j].1).abs();
            let threshold = q * (mse / 2.0 * (1.0 / order[i].2 as f64 + 1.0 / order[j].2 as f64)).sqrt();
            pairs.push(PairTest {
                i,
                j,
                diff,
                threshold,
                significant: diff > threshold,
            });
        }
    }
    let sig = |a: usize, b: usize| {
        pairs
            .iter()
            .find(|p| p.i == a.min(b) && p.j == a.max(b))
            .is_some_and(|p| p.significant)
    };
    let groups = greedy_groups(k, sig);
    Ok(HsdResult {
        codecs: order.iter().map(|o| o.0.clone()).collect(),
        means: order.iter().map(|o| o.1).collect(),
        counts: order.iter().map(|o| o.2).collect(),
        groups,
        pairs,
        q,
        mse,
        df_error,
        alpha,
    })
}
