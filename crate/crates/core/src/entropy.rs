//! Shannon entropy of n-byte words and the best-compression estimate of the
//! true entropy of a file.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntropyError {
    #[error("no symbols to estimate: input shorter than the word length {n}")]
    Empty { n: usize },
    #[error("word length must be at least 1")]
    ZeroOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    /// Word length in bytes.
    pub order_n: usize,
    /// Entropy per byte of the n-byte word distribution.
    pub bits_per_symbol: f64,
    /// Number of n-byte words observed (overlapping windows).
    pub symbol_count_m: u64,
}

fn entropy_of_counts(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let total_f = total as f64;
    let h: f64 = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total_f;
            -p * p.log2()
        })
        .sum();
    // guards against -0.0 for a single symbol
    h.max(0.0)
}

/// `H_n = -(1/n) * sum p(s) log2 p(s)` over overlapping n-byte windows.
pub fn shannon_entropy(data: &[u8], n: usize) -> Result<EntropyEstimate, EntropyError> {
    if n == 0 {
        return Err(EntropyError::ZeroOrder);
    }
    if data.len() < n {
        return Err(EntropyError::Empty { n });
    }
    let m = (data.len() - n + 1) as u64;
    let h = if n == 1 {
        let mut hist = [0u64; 256];
        for &b in data {
            hist[b as usize] += 1;
        }
        entropy_of_counts(hist.into_iter(), m)
    } else {
        let mut hist: HashMap<&[u8], u64> = HashMap::new();
        for w in data.windows(n) {
            *hist.entry(w).or_default() += 1;
        }
        entropy_of_counts(hist.into_values(), m)
    };
    Ok(EntropyEstimate {
        order_n: n,
        bits_per_symbol: h / n as f64,
        symbol_count_m: m,
    })
}

/// Best achieved compressed bits per original byte: `8 * min(s_comp) / s_native`.
///
/// `compressed_sizes` holds the sizes of the successful runs for one file;
/// returns `None` when there are none.
pub fn estimate_true_entropy(s_native: u64, compressed_sizes: impl IntoIterator<Item = u64>) -> Option<f64> {
    if s_native == 0 {
        return None;
    }
    compressed_sizes
        .into_iter()
        .min()
        .map(|best| 8.0 * best as f64 / s_native as f64)
}
