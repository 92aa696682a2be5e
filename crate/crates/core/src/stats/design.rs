//! Regression design matrices over run metrics and file profiles.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use super::linalg::{qr_least_squares, Matrix};
use super::ols::RANK_TOL;
use super::StatsError;
use crate::codec::CodecClass;
use crate::metrics::{Metric, MetricRow};
use crate::xml::{Domain, FileProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    RunId,
    FileDom,
    ComClass,
    Chars,
    Lines,
    Depth,
    H1,
    EHinf,
}

impl Factor {
    /// The 18-DF model for compression ratio and speed.
    pub const FULL: [Factor; 8] = [
        Factor::RunId,
        Factor::FileDom,
        Factor::ComClass,
        Factor::Chars,
        Factor::Lines,
        Factor::Depth,
        Factor::H1,
        Factor::EHinf,
    ];
    /// The 15-DF model for the combined efficiency metrics.
    pub const EFFICIENCY: [Factor; 5] = [Factor::FileDom, Factor::ComClass, Factor::Chars, Factor::H1, Factor::EHinf];

    pub fn name(self) -> &'static str {
        match self {
            Factor::RunId => "RunId",
            Factor::FileDom => "FileDom",
            Factor::ComClass => "ComClass",
            Factor::Chars => "Chars",
            Factor::Lines => "Lines",
            Factor::Depth => "Depth",
            Factor::H1 => "H1",
            Factor::EHinf => "EHinf",
        }
    }

    /// Default factor set for a metric.
    pub fn for_metric(metric: Metric) -> &'static [Factor] {
        match metric {
            Metric::CompRatio | Metric::CompSpeed => &Factor::FULL,
            Metric::EffOld | Metric::EffProp => &Factor::EFFICIENCY,
        }
    }

    fn categorical(self) -> bool {
        matches!(self, Factor::FileDom | Factor::ComClass)
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Factor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Factor::FULL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown factor `{s}`"))
    }
}

/// Mean and standard deviation used to standardize a covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub column: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    /// Intercept first, then factor columns.
    pub x: Matrix,
    pub y: Vec<f64>,
    pub column_names: Vec<String>,
    /// Columns of `x` belonging to each factor (possibly none after drops).
    pub factor_columns: Vec<(Factor, Vec<usize>)>,
    pub standardization: Vec<Standardization>,
    /// Columns removed as linearly dependent on earlier ones.
    pub dropped: Vec<String>,
    pub warnings: Vec<String>,
    /// Run ordinals of the rows, in order.
    pub run_ordinals: Vec<u64>,
    pub codecs: Vec<String>,
}

impl DesignMatrix {
    /// Model DF: non-intercept columns.
    pub fn model_df(&self) -> usize {
        self.x.cols - 1
    }

    pub fn factor_df(&self, factor: Factor) -> usize {
        self.factor_columns
            .iter()
            .find(|(f, _)| *f == factor)
            .map_or(0, |(_, c)| c.len())
    }
}

fn class_code(c: CodecClass) -> String {
    c.to_string()
}

/// Dummy columns for a categorical: one per level except the
/// alphabetically first.
fn dummies(values: &[String]) -> Vec<(String, Vec<f64>)> {
    let levels: BTreeSet<&str> = values.iter().map(String::as_str).collect();
    levels
        .into_iter()
        .skip(1)
        .map(|level| {
            (
                level.to_string(),
                values.iter().map(|v| (v == level) as u8 as f64).collect(),
            )
        })
        .collect()
}

/// Builds the design for `metric` from successful-run rows.
///
/// Categoricals use reference-level dummies, covariates are standardized,
/// and columns dependent on earlier ones are dropped and listed in
/// `dropped`. `E[H_inf]` comes from the profile when present, otherwise
/// from the row's per-file minimum.
pub fn build_design(
    profiles: &[FileProfile],
    rows: &[MetricRow],
    metric: Metric,
    factors: &[Factor],
) -> Result<DesignMatrix, StatsError> {
    let by_id: HashMap<&str, &FileProfile> = profiles.iter().map(|p| (p.file_id.as_str(), p)).collect();
    let mut used: Vec<(&MetricRow, &FileProfile, f64)> = Vec::new();
    for row in rows {
        let Some(y) = metric.value(row) else { continue };
        let profile = by_id
            .get(row.file.as_str())
            .ok_or_else(|| StatsError::MissingCovariate(format!("no profile for file {}", row.file)))?;
        used.push((row, profile, y));
    }
    if used.is_empty() {
        return Err(StatsError::InsufficientData(format!("no rows carry {metric}")));
    }
    let n = used.len();
    let mut warnings = Vec::new();
    let mut columns: Vec<(String, Vec<f64>, Option<Factor>)> = vec![("Intercept".into(), vec![1.0; n], None)];
    let mut standardization = Vec::new();
    for &factor in factors {
        if factor.categorical() {
            let values: Vec<String> = used
                .iter()
                .map(|(r, p, _)| match factor {
                    Factor::FileDom => p.domain.code().to_string(),
                    _ => class_code(r.class),
                })
                .collect();
            let all_levels: Vec<String> = match factor {
                Factor::FileDom => Domain::ALL.iter().map(|d| d.code().to_string()).collect(),
                _ => ["CTL", "MAT", "XBN", "XSC", "ZIP"].map(String::from).to_vec(),
            };
            let present: BTreeSet<&String> = values.iter().collect();
            let missing: Vec<&str> = all_levels
                .iter()
                .filter(|l| !present.contains(l))
                .map(String::as_str)
                .collect();
            if !missing.is_empty() {
                warnings.push(format!("{factor}: levels without rows dropped: {}", missing.join(", ")));
            }
            for (level, col) in dummies(&values) {
                columns.push((format!("{factor}[{level}]"), col, Some(factor)));
            }
        } else {
            let mut values = Vec::with_capacity(n);
            for (r, p, _) in &used {
                let v = match factor {
                    Factor::RunId => r.run_ordinal as f64,
                    Factor::Chars => p.unique_chars as f64,
                    Factor::Lines => p.lines as f64,
                    Factor::Depth => p.depth as f64,
                    Factor::H1 => p.h1,
                    Factor::EHinf => match (p.e_hinf, r.min_s_comp) {
                        (Some(e), _) => e,
                        (None, Some(m)) => 8.0 * m as f64 / r.s_native as f64,
                        (None, None) => {
                            return Err(StatsError::MissingCovariate(format!(
                                "no E[H_inf] estimate for file {}",
                                r.file
                            )))
                        }
                    },
                    Factor::FileDom | Factor::ComClass => unreachable!(),
                };
                values.push(v);
            }
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n.max(2) - 1) as f64;
            let sd = var.sqrt();
            let scaled = if sd > 0.0 {
                values.iter().map(|v| (v - mean) / sd).collect()
            } else {
                // constant covariates are caught by the collinearity pass
                values.iter().map(|v| v - mean).collect()
            };
            standardization.push(Standardization {
                column: factor.name().to_string(),
                mean,
                sd,
            });
            columns.push((factor.name().to_string(), scaled, Some(factor)));
        }
    }
    let x_all = Matrix::from_columns(&columns.iter().map(|(_, c, _)| c.clone()).collect::<Vec<_>>());
    let y: Vec<f64> = used.iter().map(|(_, _, y)| *y).collect();
    let sol = qr_least_squares(&x_all, &y, RANK_TOL);
    let keep = sol.independent;
    let dropped: Vec<String> = sol.dependent.iter().map(|&j| columns[j].0.clone()).collect();
    if !dropped.is_empty() {
        warnings.push(format!("collinear columns dropped: {}", dropped.join(", ")));
    }
    let x = x_all.select_columns(&keep);
    let mut factor_map: BTreeMap<usize, (Factor, Vec<usize>)> = BTreeMap::new();
    for (pos, f) in factors.iter().enumerate() {
        factor_map.insert(pos, (*f, Vec::new()));
    }
    for (new_idx, &old) in keep.iter().enumerate() {
        if let Some(f) = columns[old].2 {
            let pos = factors.iter().position(|g| *g == f).unwrap();
            factor_map.get_mut(&pos).unwrap().1.push(new_idx);
        }
    }
    Ok(DesignMatrix {
        x,
        y,
        column_names: keep.iter().map(|&j| columns[j].0.clone()).collect(),
        factor_columns: factor_map.into_values().collect(),
        standardization,
        dropped,
        warnings,
        run_ordinals: used.iter().map(|(r, _, _)| r.run_ordinal).collect(),
        codecs: used.iter().map(|(r, _, _)| r.codec.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Mode;

    fn synthetic(files: usize, codecs: &[(&str, CodecClass)]) -> (Vec<FileProfile>, Vec<MetricRow>) {
        let mut profiles = Vec::new();
        let mut rows = Vec::new();
        let mut ord = 0;
        for i in 0..files {
            let domain = Domain::ALL[i % 9];
            profiles.push(FileProfile {
                file_id: format!("f{i}"),
                domain,
                bytes: 1000 + 37 * i as u64,
                lines: (10 + (i * i) % 17) as u64,
                unique_chars: (40 + (i * 7) % 23) as u32,
                unique_tags: 5,
                depth: (2 + (i * 5) % 7) as u32,
                h1: 4.0 + ((i * 13) % 11) as f64 / 10.0,
                e_hinf: Some(1.5 + ((i * 3) % 5) as f64 / 7.0 + (i as f64).sqrt() / 10.0),
            });
            for (c, (name, class)) in codecs.iter().enumerate() {
                ord += 1;
                let s_comp = 200 + 10 * c as u64 + i as u64;
                rows.push(MetricRow {
                    run_ordinal: ord,
                    file: format!("f{i}"),
                    codec: name.to_string(),
                    class: *class,
                    mode: Mode::Default,
                    s_native: 1000,
                    s_comp,
                    t_exec: 1e-6 * (1 + c) as f64,
                    min_s_comp: Some(200),
                    y_comp_ratio: (8000.0 / s_comp as f64).log2() + 2.0 + ((ord * 7919) % 13) as f64 / 100.0,
                    y_comp_speed: 15.0 - c as f64 + ((ord * 104729) % 17) as f64 / 50.0,
                    y_eff_old: Some(8.0),
                    y_eff_prop: Some(12.0 + c as f64 + ((ord * 31) % 7) as f64 / 10.0),
                });
            }
        }
        (profiles, rows)
    }

    const FIVE: [(&str, CodecClass); 5] = [
        ("C1", CodecClass::CTL),
        ("M1", CodecClass::MAT),
        ("B1", CodecClass::XBN),
        ("S1", CodecClass::XSC),
        ("Z1", CodecClass::ZIP),
    ];

    #[test]
    fn full_design_has_eighteen_df() {
        let (profiles, rows) = synthetic(45, &FIVE);
        let d = build_design(&profiles, &rows, Metric::CompRatio, &Factor::FULL).unwrap();
        assert!(d.dropped.is_empty(), "{:?}", d.dropped);
        assert_eq!(d.model_df(), 18);
        assert_eq!(d.factor_df(Factor::FileDom), 8);
        assert_eq!(d.factor_df(Factor::ComClass), 4);
        assert_eq!(d.column_names[1], "RunId");
        assert!(d.column_names.contains(&"ComClass[ZIP]".to_string()));
        assert!(!d.column_names.contains(&"ComClass[CTL]".to_string()));
        let e = build_design(&profiles, &rows, Metric::EffProp, &Factor::EFFICIENCY).unwrap();
        assert_eq!(e.model_df(), 15);
    }

    #[test]
    fn standardized_covariates() {
        let (profiles, rows) = synthetic(20, &FIVE);
        let d = build_design(&profiles, &rows, Metric::CompRatio, &[Factor::Chars]).unwrap();
        let col = d.x.column(1);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_level_and_collinear_columns() {
        let (profiles, rows) = synthetic(12, &[("Z1", CodecClass::ZIP), ("Z2", CodecClass::ZIP)]);
        let d = build_design(&profiles, &rows, Metric::CompRatio, &[Factor::ComClass]).unwrap();
        assert_eq!(d.factor_df(Factor::ComClass), 0);
        assert!(d.warnings.iter().any(|w| w.contains("CTL")));
        // three files: domains and file covariates cannot all be separated
        let (profiles, rows) = synthetic(3, &FIVE);
        let d = build_design(&profiles, &rows, Metric::CompRatio, &Factor::FULL).unwrap();
        assert!(!d.dropped.is_empty());
        assert!(d.x.cols < 19);
    }

    #[test]
    fn missing_profile_is_an_error() {
        let (profiles, rows) = synthetic(3, &FIVE);
        assert!(matches!(
            build_design(&profiles[1..], &rows, Metric::CompRatio, &Factor::FULL),
            Err(StatsError::MissingCovariate(_))
        ));
    }
}
