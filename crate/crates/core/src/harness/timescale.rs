use std::collections::BTreeMap;

use super::HarnessError;
use crate::metrics::RunRecord;

/// Divides each affected codec's `t_exec` by its factor, keeping the
/// measured value in `t_exec_unscaled`. Records already scaled are left
/// alone so the operation is idempotent.
pub fn apply_time_scale(records: &[RunRecord], factors: &BTreeMap<String, f64>) -> Result<Vec<RunRecord>, HarnessError> {
    if let Some((codec, f)) = factors.iter().find(|(_, f)| !(**f > 0.0 && f.is_finite())) {
        return Err(HarnessError::Config(format!("time scale for {codec} must be positive, got {f}")));
    }
    Ok(records
        .iter()
        .map(|r| match factors.get(&r.codec) {
            Some(&f) if r.t_exec_unscaled.is_none() && f != 1.0 => RunRecord {
                t_exec: r.t_exec / f,
                t_exec_unscaled: Some(r.t_exec),
                ..r.clone()
            },
            _ => r.clone(),
        })
        .collect())
}
