//! Run records and the four log-scale performance metrics.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodecClass, Mode};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("metric precondition violated: {0}")]
    Domain(String),
    #[error("unknown metric `{0}` (expected comp_ratio, comp_speed, eff_old or eff_prop)")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    Failed { reason: String },
}

/// One compression run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Position in the randomized execution order, starting at 1.
    pub run_ordinal: u64,
    pub codec: String,
    pub class: CodecClass,
    pub file: String,
    pub mode: Mode,
    pub s_native: u64,
    #[serde(default)]
    pub s_comp: Option<u64>,
    /// Execution time in day fractions, after any time-scale correction.
    pub t_exec: f64,
    /// Measured time before the correction, when one was applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_exec_unscaled: Option<f64>,
    #[serde(flatten)]
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
}

impl RunRecord {
    pub fn is_success(&self) -> bool {
        self.status == RunStatus::Success
    }

    /// The size and time pair of a successful run.
    pub fn success(&self) -> Option<(u64, f64)> {
        match (&self.status, self.s_comp) {
            (RunStatus::Success, Some(s)) => Some((s, self.t_exec)),
            _ => None,
        }
    }

    pub fn check(&self) -> Result<(), MetricError> {
        if self.is_success() {
            match self.s_comp {
                Some(s) if s >= 1 => {}
                _ => return Err(MetricError::Domain(format!("run {} succeeded without output", self.run_ordinal))),
            }
            if !(self.t_exec > 0.0) {
                return Err(MetricError::Domain(format!("run {} has non-positive time", self.run_ordinal)));
            }
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<f64, MetricError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(MetricError::Domain(format!("{name} must be positive, got {v}")))
    }
}

fn size(name: &str, v: u64) -> Result<f64, MetricError> {
    if v == 0 {
        Err(MetricError::Domain(format!("{name} must be at least 1 byte")))
    } else {
        Ok(v as f64)
    }
}

/// Compression ratio: `log2(8 s_native / s_comp) + 2`. Negative values
/// (expansion beyond 32x) are returned as is.
pub fn y_comp_ratio(s_native: u64, s_comp: u64) -> Result<f64, MetricError> {
    let y = (8.0 * size("s_native", s_native)? / size("s_comp", s_comp)?).log2() + 2.0;
    if y < 0.0 {
        log::warn!("negative compression-ratio metric {y:.3} ({s_native} -> {s_comp} bytes)");
    }
    Ok(y)
}

/// Compression speed: `log10(8 s_native / t_exec) + 10`, `t_exec` in days.
pub fn y_comp_speed(s_native: u64, t_exec: f64) -> Result<f64, MetricError> {
    Ok((8.0 * size("s_native", s_native)? / positive("t_exec", t_exec)?).log10() + 10.0)
}

/// Older combined efficiency (smaller is better):
/// `log10(2^(s_comp/min - 1) * t_exec) + 10`, evaluated in log space.
pub fn y_eff_old(s_comp: u64, min_s_comp: u64, t_exec: f64) -> Result<f64, MetricError> {
    let ratio = size("s_comp", s_comp)? / size("min_s_comp", min_s_comp)?;
    Ok((ratio - 1.0) * std::f64::consts::LOG10_2 + positive("t_exec", t_exec)?.log10() + 10.0)
}

/// Proposed combined efficiency (larger is better):
/// `log10((s_native^2 / (min * s_comp)) / t_exec) + 10`.
pub fn y_eff_prop(s_native: u64, s_comp: u64, min_s_comp: u64, t_exec: f64) -> Result<f64, MetricError> {
    let n = size("s_native", s_native)?;
    let c = size("s_comp", s_comp)?;
    let m = size("min_s_comp", min_s_comp)?;
    let t = positive("t_exec", t_exec)?;
    // summed logs keep s_native^2 from overflowing
    Ok(2.0 * n.log10() - m.log10() - c.log10() - t.log10() + 10.0)
}

/// Smallest successful compressed size per file. Codecs listed in
/// `exclude` (for example the control coder) do not contribute; files with
/// no contributing success are absent.
pub fn min_comp_per_file(records: &[RunRecord], exclude: &[&str]) -> BTreeMap<String, u64> {
    let mut mins: BTreeMap<String, u64> = BTreeMap::new();
    for r in records {
        if exclude.contains(&r.codec.as_str()) {
            continue;
        }
        if let Some((s, _)) = r.success() {
            mins.entry(r.file.clone())
                .and_modify(|m| *m = (*m).min(s))
                .or_insert(s);
        }
    }
    mins
}

/// Records for one analysis mode. Default analysis keeps the default
/// runs; maximum analysis replaces each default run by the maximum-mode run
/// of the same codec and file when one exists.
pub fn select_mode(records: &[RunRecord], mode: Mode) -> Vec<RunRecord> {
    match mode {
        Mode::Default => records.iter().filter(|r| r.mode == Mode::Default).cloned().collect(),
        Mode::Maximum => {
            let maxed: std::collections::HashSet<(&str, &str)> = records
                .iter()
                .filter(|r| r.mode == Mode::Maximum)
                .map(|r| (r.codec.as_str(), r.file.as_str()))
                .collect();
            records
                .iter()
                .filter(|r| r.mode == Mode::Maximum || !maxed.contains(&(r.codec.as_str(), r.file.as_str())))
                .cloned()
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    CompRatio,
    CompSpeed,
    EffOld,
    EffProp,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::CompRatio, Metric::CompSpeed, Metric::EffOld, Metric::EffProp];

    pub fn name(self) -> &'static str {
        match self {
            Metric::CompRatio => "comp_ratio",
            Metric::CompSpeed => "comp_speed",
            Metric::EffOld => "eff_old",
            Metric::EffProp => "eff_prop",
        }
    }

    pub fn value(self, row: &MetricRow) -> Option<f64> {
        match self {
            Metric::CompRatio => Some(row.y_comp_ratio),
            Metric::CompSpeed => Some(row.y_comp_speed),
            Metric::EffOld => row.y_eff_old,
            Metric::EffProp => row.y_eff_prop,
        }
    }

    /// Whether larger values are better.
    pub fn higher_is_better(self) -> bool {
        self != Metric::EffOld
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "comp_ratio" | "y2" => Ok(Metric::CompRatio),
            "comp_speed" | "y3" => Ok(Metric::CompSpeed),
            "eff_old" | "y4" => Ok(Metric::EffOld),
            "eff_prop" | "y5" => Ok(Metric::EffProp),
            _ => Err(MetricError::UnknownMetric(s.to_string())),
        }
    }
}

/// Metrics of one successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub run_ordinal: u64,
    pub file: String,
    pub codec: String,
    pub class: CodecClass,
    pub mode: Mode,
    pub s_native: u64,
    pub s_comp: u64,
    pub t_exec: f64,
    /// `None` when the file has no contributing success (see
    /// [`min_comp_per_file`]); the efficiency metrics are then absent too.
    pub min_s_comp: Option<u64>,
    pub y_comp_ratio: f64,
    pub y_comp_speed: f64,
    pub y_eff_old: Option<f64>,
    pub y_eff_prop: Option<f64>,
}

/// Metric rows for the successful records, with the per-file minimum
/// taken over the same record set.
pub fn compute_metrics(records: &[RunRecord], exclude_from_min: &[&str]) -> Result<Vec<MetricRow>, MetricError> {
    let mins = min_comp_per_file(records, exclude_from_min);
    let mut rows = Vec::new();
    for r in records {
        r.check()?;
        let Some((s_comp, t)) = r.success() else { continue };
        let min = mins.get(&r.file).copied();
        rows.push(MetricRow {
            run_ordinal: r.run_ordinal,
            file: r.file.clone(),
            codec: r.codec.clone(),
            class: r.class,
            mode: r.mode,
            s_native: r.s_native,
            s_comp,
            t_exec: t,
            min_s_comp: min,
            y_comp_ratio: y_comp_ratio(r.s_native, s_comp)?,
            y_comp_speed: y_comp_speed(r.s_native, t)?,
            y_eff_old: min.map(|m| y_eff_old(s_comp, m, t)).transpose()?,
            y_eff_prop: min.map(|m| y_eff_prop(r.s_native, s_comp, m, t)).transpose()?,
        });
    }
    Ok(rows)
}

/// Writes the metric table with columns
/// `run_ordinal,file,codec,mode,s_native,s_comp,t_exec,min_s_comp,y2,y3,y4,y5`,
/// floats at full precision.
pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run_ordinal",
        "file",
        "codec",
        "mode",
        "s_native",
        "s_comp",
        "t_exec",
        "min_s_comp",
        "y2",
        "y3",
        "y4",
        "y5",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.run_ordinal.to_string(),
            r.file.clone(),
            r.codec.clone(),
            r.mode.to_string(),
            r.s_native.to_string(),
            r.s_comp.to_string(),
            r.t_exec.to_string(),
            r.min_s_comp.map(|m| m.to_string()).unwrap_or_default(),
            r.y_comp_ratio.to_string(),
            r.y_comp_speed.to_string(),
            opt(r.y_eff_old),
            opt(r.y_eff_prop),
        ])?;
    }
    w.flush()?;
    Ok(())
}
