//! Report tables and plot-ready CSVs computed from persisted records and
//! file profiles. Every output is a pure function of its inputs: rows are
//! sorted, floats use their shortest round-trip form in CSVs and three
//! decimals in text tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::codec::Mode;
use crate::entropy::estimate_true_entropy;
use crate::harness::{apply_time_scale, HarnessError};
use crate::metrics::{compute_metrics, select_mode, write_metrics_csv, Metric, MetricError, MetricRow, RunRecord};
use crate::stats::{
    anova, build_design, format_p, residual_plot_data, tukey_kramer, AnovaTable, Factor, HsdResult, StatsError,
};
use crate::xml::FileProfile;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("codec `{0}` has no rows in the record set")]
    UnknownCodec(String),
    #[error("invalid size filter `{0}` (expected e.g. <6KB, >=1MB, <=300B)")]
    SizeFilter(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

/// Byte-size predicate such as `<6KB`; `KB` and `MB` are powers of 1024.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeFilter {
    pub op: Comparison,
    pub bytes: u64,
}

impl SizeFilter {
    /// Files under about 6 KB.
    pub const SMALL: SizeFilter = SizeFilter {
        op: Comparison::Lt,
        bytes: 6144,
    };

    pub fn matches(&self, size: u64) -> bool {
        match self.op {
            Comparison::Lt => size < self.bytes,
            Comparison::Le => size <= self.bytes,
            Comparison::Gt => size > self.bytes,
            Comparison::Ge => size >= self.bytes,
        }
    }

    /// The filter selecting exactly the files this one rejects.
    pub fn complement(&self) -> SizeFilter {
        let op = match self.op {
            Comparison::Lt => Comparison::Ge,
            Comparison::Le => Comparison::Gt,
            Comparison::Gt => Comparison::Le,
            Comparison::Ge => Comparison::Lt,
        };
        SizeFilter { op, bytes: self.bytes }
    }
}

impl FromStr for SizeFilter {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReportError::SizeFilter(s.to_string());
        let t = s.trim();
        let (op, rest) = [("<=", Comparison::Le), (">=", Comparison::Ge), ("<", Comparison::Lt), (">", Comparison::Gt)]
            .iter()
            .find_map(|(p, op)| t.strip_prefix(p).map(|r| (*op, r.trim())))
            .ok_or_else(bad)?;
        let upper = rest.to_ascii_uppercase();
        let split = upper.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(upper.len());
        let (num, unit) = upper.split_at(split);
        let scale = match unit.trim() {
            "" | "B" => 1.0,
            "KB" | "K" | "KIB" => 1024.0,
            "MB" | "M" | "MIB" => 1024.0 * 1024.0,
            _ => return Err(bad()),
        };
        let value: f64 = num.parse().map_err(|_| bad())?;
        Ok(SizeFilter {
            op,
            bytes: (value * scale).round() as u64,
        })
    }
}

fn f(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn write_profiles_csv<W: Write>(profiles: &[FileProfile], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["file_id", "domain", "bytes", "lines", "unique_chars", "unique_tags", "depth", "h1", "e_hinf"])?;
    let mut sorted: Vec<&FileProfile> = profiles.iter().collect();
    sorted.sort_by(|a, b| a.file_id.cmp(&b.file_id));
    for p in sorted {
        w.write_record([
            p.file_id.clone(),
            p.domain.to_string(),
            p.bytes.to_string(),
            p.lines.to_string(),
            p.unique_chars.to_string(),
            p.unique_tags.to_string(),
            p.depth.to_string(),
            f(p.h1),
            opt(p.e_hinf),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profiles_csv(path: &Path) -> Result<Vec<FileProfile>, ReportError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Aligned text rendering of the property table.
pub fn profiles_text(profiles: &[FileProfile]) -> String {
    let mut s = format!(
        "{:<12} {:>3} {:>10} {:>8} {:>5} {:>5} {:>5} {:>7} {:>7}\n",
        "File", "Dom", "Bytes", "Lines", "Chars", "Tags", "Depth", "H1", "E[Hinf]"
    );
    let mut sorted: Vec<&FileProfile> = profiles.iter().collect();
    sorted.sort_by(|a, b| a.file_id.cmp(&b.file_id));
    for p in sorted {
        let _ = writeln!(
            s,
            "{:<12} {:>3} {:>10} {:>8} {:>5} {:>5} {:>5} {:>7.3} {:>7}",
            p.file_id,
            p.domain,
            p.bytes,
            p.lines,
            p.unique_chars,
            p.unique_tags,
            p.depth,
            p.h1,
            p.e_hinf.map(|e| format!("{e:.3}")).unwrap_or_else(|| "-".into())
        );
    }
    s
}

/// Fills missing `e_hinf` values with the best compression among `rows`.
pub fn fill_e_hinf(profiles: &[FileProfile], rows: &[MetricRow]) -> Vec<FileProfile> {
    let mut sizes: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for r in rows {
        sizes.entry(r.file.as_str()).or_default().push(r.s_comp);
    }
    profiles
        .iter()
        .map(|p| {
            let mut p = p.clone();
            if p.e_hinf.is_none() {
                if let Some(s) = sizes.get(p.file_id.as_str()) {
                    p.e_hinf = estimate_true_entropy(p.bytes, s.iter().copied());
                }
            }
            p
        })
        .collect()
}

const ANOVA_HEADER: [&str; 6] = ["source", "df", "sum_sq", "mean_sq", "f", "p"];

pub fn write_anova_csv<W: Write>(table: Option<&AnovaTable>, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ANOVA_HEADER)?;
    if let Some(t) = table {
        for row in std::iter::once(&t.model).chain(&t.factors) {
            let ms = if row.df > 0 { row.sum_sq / row.df as f64 } else { 0.0 };
            w.write_record([row.name.clone(), row.df.to_string(), f(row.sum_sq), f(ms), f(row.f), f(row.p)])?;
        }
        w.write_record(["Error".into(), t.df_error.to_string(), f(t.sse), f(t.mse), String::new(), String::new()])?;
        w.write_record(["C. Total".into(), (t.n - 1).to_string(), f(t.sst), String::new(), String::new(), String::new()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn anova_text(metric: Metric, table: Option<&AnovaTable>) -> String {
    let mut s = format!("Response {metric}\n");
    let Some(t) = table else {
        s.push_str("(no data)\n");
        return s;
    };
    let _ = writeln!(s, "{:<14} {:>4} {:>16} {:>12} {:>10}", "Source", "DF", "Sum of Squares", "F-test", "Prob > F");
    for row in std::iter::once(&t.model).chain(&t.factors) {
        let _ = writeln!(
            s,
            "{:<14} {:>4} {:>16.3} {:>12.3} {:>10}",
            row.name,
            row.df,
            row.sum_sq,
            row.f,
            format_p(row.p)
        );
    }
    let _ = writeln!(s, "{:<14} {:>4} {:>16.3}", "Error", t.df_error, t.sse);
    let _ = writeln!(s, "{:<14} {:>4} {:>16.3}", "C. Total", t.n - 1, t.sst);
    let _ = writeln!(s, "R^2 {:.3}  n {}", t.r2, t.n);
    s
}

pub fn write_hsd_csv<W: Write>(result: Option<&HsdResult>, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let groups = result.map_or(0, |r| r.groups.len());
    let mut header: Vec<String> = ["rank", "codec", "mean", "n"].map(String::from).to_vec();
    header.extend((1..=groups).map(|g| format!("T{g}")));
    w.write_record(&header)?;
    if let Some(r) = result {
        for (c, member) in r.membership().iter().enumerate() {
            let mut rec = vec![(c + 1).to_string(), r.codecs[c].clone(), f(r.means[c]), r.counts[c].to_string()];
            rec.extend(member.iter().map(|&m| if m { "X".to_string() } else { String::new() }));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn hsd_text(metric: Metric, result: Option<&HsdResult>) -> String {
    let mut s = format!("Tukey-Kramer HSD on {metric}\n");
    let Some(r) = result else {
        s.push_str("(no data)\n");
        return s;
    };
    let _ = writeln!(s, "alpha {:.3}  q {:.3}  MSE {:.3}  DF {}", r.alpha, r.q, r.mse, r.df_error);
    let mut head = format!("{:<10} {:>10}", "Codec", "Mean");
    for g in 1..=r.groups.len() {
        let _ = write!(head, " {:>3}", format!("T{g}"));
    }
    s.push_str(head.trim_end());
    s.push('\n');
    for (c, member) in r.membership().iter().enumerate() {
        let mut line = format!("{:<10} {:>10.3}", r.codecs[c], r.means[c]);
        for &m in member {
            let _ = write!(line, " {:>3}", if m { "X" } else { "" });
        }
        s.push_str(line.trim_end());
        s.push('\n');
    }
    s
}

/// Per-codec samples of `metric`, in codec-name order.
pub fn codec_samples(rows: &[MetricRow], metric: Metric) -> Vec<(String, Vec<f64>)> {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = metric.value(r) {
            by.entry(r.codec.as_str()).or_default().push(v);
        }
    }
    by.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Tukey-Kramer over codecs with the one-way MSE of the same rows;
/// `None` when fewer than two codecs or no error DF remain.
pub fn hsd_for(rows: &[MetricRow], metric: Metric, alpha: f64) -> Result<Option<HsdResult>, ReportError> {
    let samples = codec_samples(rows, metric);
    match tukey_kramer(&samples, alpha, None) {
        Ok(r) => Ok(Some(r)),
        Err(StatsError::InsufficientData(m)) => {
            log::warn!("hsd {metric}: {m}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

/// ANOVA of `metric` over its factor set; `None` when the data cannot
/// support a fit.
pub fn anova_for(profiles: &[FileProfile], rows: &[MetricRow], metric: Metric) -> Result<Option<AnovaTable>, ReportError> {
    let design = match build_design(profiles, rows, metric, Factor::for_metric(metric)) {
        Ok(d) => d,
        Err(StatsError::InsufficientData(m) | StatsError::MissingCovariate(m)) => {
            log::warn!("anova {metric}: {m}");
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    for w in &design.warnings {
        log::info!("anova {metric}: {w}");
    }
    match anova(&design) {
        Ok(t) => Ok(Some(t)),
        Err(StatsError::InsufficientData(m)) => {
            log::warn!("anova {metric}: {m}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn write_residuals_csv<W: Write>(profiles: &[FileProfile], rows: &[MetricRow], metric: Metric, out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run_ordinal", "codec", "predicted", "residual"])?;
    if let Ok(design) = build_design(profiles, rows, metric, Factor::for_metric(metric)) {
        if let Ok(t) = anova(&design) {
            let res = residual_plot_data(&t.fit);
            let mut pts: Vec<(u64, &str, f64, f64)> = res
                .points
                .iter()
                .enumerate()
                .map(|(i, &(p, e))| (design.run_ordinals[i], design.codecs[i].as_str(), p, e))
                .collect();
            pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
            for (ord, codec, p, e) in pts {
                w.write_record([ord.to_string(), codec.to_string(), f(p), f(e)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean and sd per codec of the ratio and speed transforms.
pub fn write_codec_means_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["codec", "n", "ratio_mean", "ratio_sd", "speed_mean", "speed_sd"])?;
    let ratio = codec_samples(rows, Metric::CompRatio);
    let speed: BTreeMap<String, Vec<f64>> = codec_samples(rows, Metric::CompSpeed).into_iter().collect();
    for (codec, r) in &ratio {
        let (rm, rs) = mean_sd(r);
        let (sm, ss) = mean_sd(&speed[codec]);
        w.write_record([codec.clone(), r.len().to_string(), f(rm), f(rs), f(sm), f(ss)])?;
    }
    w.flush()?;
    Ok(())
}

/// Efficiency per file with each codec's mean alongside.
pub fn write_efficiency_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["codec", "file", "s_native", "y_eff_prop", "codec_mean"])?;
    let means: BTreeMap<String, f64> = codec_samples(rows, Metric::EffProp)
        .into_iter()
        .map(|(c, v)| (c, mean_sd(&v).0))
        .collect();
    let mut sorted: Vec<&MetricRow> = rows.iter().filter(|r| r.y_eff_prop.is_some()).collect();
    sorted.sort_by(|a, b| a.codec.cmp(&b.codec).then(a.file.cmp(&b.file)).then(a.run_ordinal.cmp(&b.run_ordinal)));
    for r in sorted {
        w.write_record([
            r.codec.clone(),
            r.file.clone(),
            r.s_native.to_string(),
            opt(r.y_eff_prop),
            f(means[&r.codec]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Codec with the highest mean `y_eff_prop` (ties by name).
pub fn most_efficient_codec(rows: &[MetricRow]) -> Option<String> {
    codec_samples(rows, Metric::EffProp)
        .into_iter()
        .map(|(c, v)| (mean_sd(&v).0, c))
        .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
        .map(|(_, c)| c)
}

/// Per file: native size, the codec's compression ratio and the ratios
/// implied by `H1` and `E[H_inf]` (`8 / H`).
pub fn write_bounds_csv<W: Write>(codec: &str, rows: &[MetricRow], profiles: &[FileProfile], out: W) -> Result<(), ReportError> {
    let mine: Vec<&MetricRow> = rows.iter().filter(|r| r.codec == codec).collect();
    if mine.is_empty() {
        return Err(ReportError::UnknownCodec(codec.to_string()));
    }
    let by_id: BTreeMap<&str, &FileProfile> = profiles.iter().map(|p| (p.file_id.as_str(), p)).collect();
    let bound = |h: Option<f64>| h.filter(|&h| h > 0.0).map(|h| 8.0 / h);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["file", "s_native", "ratio", "h1_bound", "ehinf_bound"])?;
    let mut sorted = mine;
    sorted.sort_by(|a, b| a.s_native.cmp(&b.s_native).then(a.file.cmp(&b.file)));
    for r in sorted {
        let p = by_id.get(r.file.as_str());
        w.write_record([
            r.file.clone(),
            r.s_native.to_string(),
            f(r.s_native as f64 / r.s_comp as f64),
            opt(bound(p.map(|p| p.h1))),
            opt(bound(p.and_then(|p| p.e_hinf))),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub mode: Mode,
    pub alpha: f64,
    pub exclude_from_min: Vec<String>,
    pub time_scale: BTreeMap<String, f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            mode: Mode::Default,
            alpha: 0.05,
            exclude_from_min: Vec::new(),
            time_scale: BTreeMap::new(),
        }
    }
}

/// Time-scaled, mode-selected metric rows of the successful runs.
pub fn analysis_rows(records: &[RunRecord], opts: &AnalysisOptions) -> Result<Vec<MetricRow>, ReportError> {
    let scaled = apply_time_scale(records, &opts.time_scale)?;
    let selected = select_mode(&scaled, opts.mode);
    let exclude: Vec<&str> = opts.exclude_from_min.iter().map(String::as_str).collect();
    Ok(compute_metrics(&selected, &exclude)?)
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub analysis: AnalysisOptions,
    /// Restricts the plot CSVs; the small-file view uses it too, or the
    /// default small-file threshold when absent.
    pub size_filter: Option<SizeFilter>,
    /// Codec of the bounded-ratio view; defaults to the most efficient.
    pub bounds_codec: Option<String>,
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<(), ReportError>) -> Result<PathBuf, ReportError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf)?;
    Ok(path.to_path_buf())
}

pub fn write_anova_tables(out: &Path, profiles: &[FileProfile], rows: &[MetricRow], metrics: &[Metric]) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    for &m in metrics {
        let table = anova_for(profiles, rows, m)?;
        written.push(write_file(&out.join(format!("anova_{m}.csv")), |b| write_anova_csv(table.as_ref(), b))?);
        let txt = out.join(format!("anova_{m}.txt"));
        std::fs::write(&txt, anova_text(m, table.as_ref()))?;
        written.push(txt);
    }
    Ok(written)
}

pub fn write_hsd_tables(out: &Path, rows: &[MetricRow], metrics: &[Metric], alpha: f64) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    for &m in metrics {
        let hsd = hsd_for(rows, m, alpha)?;
        written.push(write_file(&out.join(format!("hsd_{m}.csv")), |b| write_hsd_csv(hsd.as_ref(), b))?);
        let txt = out.join(format!("hsd_{m}.txt"));
        std::fs::write(&txt, hsd_text(m, hsd.as_ref()))?;
        written.push(txt);
    }
    Ok(written)
}

/// Writes the full bundle under `out` and returns the paths written.
pub fn emit_reports(
    out: &Path,
    records: &[RunRecord],
    profiles: &[FileProfile],
    opts: &ReportOptions,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(out)?;
    let rows = analysis_rows(records, &opts.analysis)?;
    let profiles = fill_e_hinf(profiles, &rows);
    let mut written = vec![
        write_file(&out.join("profiles.csv"), |b| write_profiles_csv(&profiles, b))?,
        write_file(&out.join("metrics.csv"), |b| Ok(write_metrics_csv(&rows, b)?))?,
    ];
    written.extend(write_anova_tables(out, &profiles, &rows, &Metric::ALL)?);
    written.extend(write_hsd_tables(out, &rows, &Metric::ALL, opts.analysis.alpha)?);
    for m in Metric::ALL {
        written.push(write_file(&out.join(format!("residuals_{m}.csv")), |b| write_residuals_csv(&profiles, &rows, m, b))?);
    }
    let plot_rows: Vec<MetricRow> = match opts.size_filter {
        Some(sf) => rows.iter().filter(|r| sf.matches(r.s_native)).cloned().collect(),
        None => rows.clone(),
    };
    let small = opts.size_filter.unwrap_or(SizeFilter::SMALL);
    let small_rows: Vec<MetricRow> = rows.iter().filter(|r| small.matches(r.s_native)).cloned().collect();
    written.push(write_file(&out.join("codec_means.csv"), |b| write_codec_means_csv(&plot_rows, b))?);
    written.push(write_file(&out.join("efficiency.csv"), |b| write_efficiency_csv(&plot_rows, b))?);
    written.push(write_file(&out.join("codec_means_small.csv"), |b| write_codec_means_csv(&small_rows, b))?);
    let bounds = match &opts.bounds_codec {
        Some(c) => Some(c.clone()),
        None => most_efficient_codec(&rows),
    };
    if let Some(codec) = bounds {
        let path = out.join(format!("bounds_{codec}.csv"));
        written.push(write_file(&path, |b| write_bounds_csv(&codec, &plot_rows, &profiles, b))?);
    }
    Ok(written)
}
