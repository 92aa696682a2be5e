use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::env::Environment;
use super::plan::{Combo, RunPlan};
use super::HarnessError;
use crate::codec::{self, run_external, CodecError, CodecKind, CodecRegistry, CodecSpec, Fidelity};
use crate::metrics::{RunRecord, RunStatus};
use crate::xml::parse_xml;

/// First line of `runs.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignHeader {
    pub campaign_id: String,
    pub created_at: String,
    pub seed: u64,
    pub plan_size: usize,
    pub pause_seconds: f64,
    #[serde(default)]
    pub time_scale: BTreeMap<String, f64>,
    pub environment: Environment,
}

#[derive(Debug, Clone, Default)]
pub struct Campaign {
    pub header: Option<CampaignHeader>,
    pub records: Vec<RunRecord>,
    /// Byte length of the intact prefix of the file.
    pub valid_len: u64,
    pub torn_tail: bool,
}

#[derive(Debug, Clone)]
pub struct ExecuteOptions {
    pub runs_path: PathBuf,
    /// Directory for external codec stdout/stderr logs.
    pub log_dir: Option<PathBuf>,
    /// Stop after this many newly executed combos.
    pub max_runs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecuteSummary {
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
    pub remaining: usize,
}

impl ExecuteSummary {
    pub fn complete(&self) -> bool {
        self.remaining == 0
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn campaign_err(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Campaign {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a campaign file. A final line without its newline is a torn write
/// and is ignored; any other unparsable line is an error.
pub fn load_campaign(path: &Path) -> Result<Campaign, HarnessError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Campaign::default()),
        Err(e) => return Err(e.into()),
    };
    let mut campaign = Campaign::default();
    let mut offset = 0usize;
    for (n, chunk) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
        if !chunk.ends_with(b"\n") {
            campaign.torn_tail = true;
            break;
        }
        let line = std::str::from_utf8(chunk).map_err(|_| campaign_err(path, format!("line {}: not UTF-8", n + 1)))?;
        offset += chunk.len();
        if line.trim().is_empty() {
            continue;
        }
        let mut value: Value =
            serde_json::from_str(line).map_err(|e| campaign_err(path, format!("line {}: {e}", n + 1)))?;
        let kind = value.get("type").and_then(Value::as_str).unwrap_or("run").to_string();
        if let Some(obj) = value.as_object_mut() {
            obj.remove("type");
        }
        match kind.as_str() {
            "header" if n == 0 => {
                campaign.header = Some(
                    serde_json::from_value(value).map_err(|e| campaign_err(path, format!("header: {e}")))?,
                );
            }
            "run" => {
                if let Some(obj) = value.as_object_mut() {
                    obj.remove("campaign_id");
                }
                campaign.records.push(
                    serde_json::from_value(value).map_err(|e| campaign_err(path, format!("line {}: {e}", n + 1)))?,
                );
            }
            other => return Err(campaign_err(path, format!("line {}: unexpected `{other}` entry", n + 1))),
        }
    }
    campaign.valid_len = offset as u64;
    Ok(campaign)
}

fn record_line(campaign_id: &str, record: &RunRecord) -> String {
    let mut v = serde_json::to_value(record).expect("record serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.insert("type".into(), "run".into());
        obj.insert("campaign_id".into(), campaign_id.into());
    }
    v.to_string() + "\n"
}

fn header_line(header: &CampaignHeader) -> String {
    let mut v = serde_json::to_value(header).expect("header serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.insert("type".into(), "header".into());
    }
    v.to_string() + "\n"
}

fn append(file: &mut File, line: &str) -> std::io::Result<()> {
    file.write_all(line.as_bytes())?;
    file.flush()?;
    file.sync_data()
}

fn verify(spec: &CodecSpec, input: &[u8], output: &[u8]) -> Result<(), String> {
    match spec.fidelity() {
        Fidelity::Unchecked => Ok(()),
        Fidelity::Bytes => {
            let back = codec::decompress(spec, output).map_err(|e| format!("roundtrip failed: {e}"))?;
            if back == input {
                Ok(())
            } else {
                Err("roundtrip mismatch".into())
            }
        }
        Fidelity::Tree => {
            let back = codec::decompress(spec, output).map_err(|e| format!("roundtrip failed: {e}"))?;
            let a = parse_xml(input).map_err(|e| format!("input: {e}"))?;
            let b = parse_xml(&back).map_err(|e| format!("roundtrip output: {e}"))?;
            if a.same_tree(&b) {
                Ok(())
            } else {
                Err("roundtrip tree mismatch".into())
            }
        }
    }
}

/// Compresses once and checks the result; returns `(s_comp, t_exec)` or
/// the failure reason with any measured time.
fn measure(spec: &CodecSpec, path: &Path, input: &[u8], log_dir: Option<&Path>) -> Result<(u64, f64), (String, f64)> {
    let (output, t_exec) = match &spec.kind {
        CodecKind::External(_) => {
            let dir = tempfile::tempdir().map_err(|e| (e.to_string(), 0.0))?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
            let out = dir.path().join(format!("{stem}.{}", spec.short_name.to_ascii_lowercase()));
            let outcome = run_external(spec, path, &out, log_dir).map_err(|e| (e.to_string(), 0.0))?;
            if let Some(reason) = outcome.failure {
                return Err((reason.to_string(), outcome.t_exec));
            }
            let bytes = std::fs::read(&out).map_err(|e| (e.to_string(), outcome.t_exec))?;
            (bytes, outcome.t_exec)
        }
        CodecKind::Builtin(_) => match codec::compress(spec, input) {
            Ok(c) => (c.output, c.t_exec),
            Err(CodecError::External(reason)) => return Err((reason.to_string(), 0.0)),
            Err(e) => return Err((e.to_string(), 0.0)),
        },
    };
    if output.is_empty() {
        return Err(("empty output".into(), t_exec));
    }
    verify(spec, input, &output).map_err(|m| (m, t_exec))?;
    Ok((output.len() as u64, t_exec))
}

fn run_combo(spec: &CodecSpec, combo: &Combo, path: &Path, log_dir: Option<&Path>) -> RunRecord {
    let started_at = Some(now());
    let base = RunRecord {
        run_ordinal: combo.run_ordinal,
        codec: combo.codec.clone(),
        class: spec.class,
        file: combo.file.clone(),
        mode: combo.mode,
        s_native: 0,
        s_comp: None,
        t_exec: 0.0,
        t_exec_unscaled: None,
        status: RunStatus::Success,
        started_at,
    };
    let input = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            return RunRecord {
                status: RunStatus::Failed {
                    reason: format!("input unreadable: {e}"),
                },
                ..base
            }
        }
    };
    let s_native = input.len() as u64;
    match measure(spec, path, &input, log_dir) {
        Ok((s_comp, t_exec)) => RunRecord {
            s_native,
            s_comp: Some(s_comp),
            t_exec,
            ..base
        },
        Err((reason, t_exec)) => {
            log::warn!("run {} ({} on {}): {reason}", combo.run_ordinal, combo.codec, combo.file);
            RunRecord {
                s_native,
                t_exec,
                status: RunStatus::Failed { reason },
                ..base
            }
        }
    }
}

/// Executes the plan in order, appending each record to `runs_path` as it
/// completes and pausing after every combo. Ordinals already recorded are
/// skipped, so rerunning after an interruption resumes the campaign.
pub fn execute(
    plan: &RunPlan,
    registry: &CodecRegistry,
    files: &BTreeMap<String, PathBuf>,
    opts: &ExecuteOptions,
) -> Result<ExecuteSummary, HarnessError> {
    for c in &plan.combos {
        registry.require(&c.codec, c.mode)?;
        if !files.contains_key(&c.file) {
            return Err(HarnessError::Plan(format!("file {} has no local path", c.file)));
        }
    }
    let existing = load_campaign(&opts.runs_path)?;
    let header = match &existing.header {
        Some(h) if h.seed != plan.seed || h.plan_size != plan.combos.len() => {
            return Err(campaign_err(
                &opts.runs_path,
                format!(
                    "belongs to a different plan (seed {}, {} combos); use a fresh output directory",
                    h.seed, h.plan_size
                ),
            ));
        }
        Some(h) => h.clone(),
        None if !existing.records.is_empty() => return Err(campaign_err(&opts.runs_path, "records without a header")),
        None => {
            let created_at = now();
            CampaignHeader {
                campaign_id: format!("{}-{:016x}", created_at.replace([':', '.'], ""), plan.seed),
                created_at,
                seed: plan.seed,
                plan_size: plan.combos.len(),
                pause_seconds: plan.pause_seconds,
                time_scale: plan.time_scale.clone(),
                environment: Environment::capture(),
            }
        }
    };
    let done: BTreeSet<u64> = existing.records.iter().map(|r| r.run_ordinal).collect();
    if let Some(parent) = opts.runs_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let first_pending = plan.combos.iter().find(|c| !done.contains(&c.run_ordinal)).map_or(0, |c| c.run_ordinal);
    let storage = |source| HarnessError::Storage {
        next_ordinal: first_pending,
        source,
    };
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&opts.runs_path)
        .map_err(storage)?;
    if existing.torn_tail {
        log::warn!("{}: dropping torn final line", opts.runs_path.display());
        file.set_len(existing.valid_len).map_err(storage)?;
    }
    if existing.header.is_none() {
        append(&mut file, &header_line(&header)).map_err(storage)?;
    }
    if let Some(dir) = &opts.log_dir {
        std::fs::create_dir_all(dir)?;
    }
    let pause = Duration::from_secs_f64(plan.pause_seconds);
    let mut summary = ExecuteSummary {
        executed: 0,
        skipped: 0,
        failed: 0,
        remaining: 0,
    };
    for combo in &plan.combos {
        if done.contains(&combo.run_ordinal) {
            summary.skipped += 1;
            continue;
        }
        if opts.max_runs.is_some_and(|m| summary.executed >= m) {
            summary.remaining += 1;
            continue;
        }
        let spec = registry.require(&combo.codec, combo.mode)?;
        let record = run_combo(spec, combo, &files[&combo.file], opts.log_dir.as_deref());
        append(&mut file, &record_line(&header.campaign_id, &record)).map_err(|source| HarnessError::Storage {
            next_ordinal: combo.run_ordinal,
            source,
        })?;
        summary.executed += 1;
        if !record.is_success() {
            summary.failed += 1;
        }
        if !pause.is_zero() {
            std::thread::sleep(pause);
        }
    }
    Ok(summary)
}
