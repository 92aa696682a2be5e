//! Command-line front end. Exit codes: 0 success, 1 error, 2 usage,
//! 3 incomplete campaign (rerun the same command to resume).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::codec::{CodecRegistry, Mode};
use crate::harness::{
    build_plan, execute, fetch_corpus, generate_corpus, load_campaign, preprocess_corpus, CorpusManifest,
    ExecuteOptions, FetchOptions, FetchReport, HarnessError,
};
use crate::metrics::{write_metrics_csv, Metric, RunRecord};
use crate::report::{
    analysis_rows, emit_reports, fill_e_hinf, profiles_text, read_profiles_csv, write_anova_tables, write_hsd_tables,
    write_profiles_csv, AnalysisOptions, ReportOptions, SizeFilter,
};
use crate::xml::{compute_profile, parse_xml, FileProfile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESUMABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "xmlbench", version, about = "XML compression benchmarking workbench")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Corpus manifest (JSON), a directory of XML files, or XML files
    /// (repeatable).
    #[arg(long, global = true)]
    pub corpus: Vec<PathBuf>,
    /// Codec registry JSON, or comma-separated built-in names, or `all`.
    #[arg(long, global = true, default_value = "all")]
    pub codecs: String,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 20_060_403)]
    pub seed: u64,
    /// `default` or `max`; `run` also accepts `both`.
    #[arg(long, global = true, default_value = "default")]
    pub mode: String,
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,
    /// Seconds to wait after each run.
    #[arg(long, global = true, default_value_t = 15.0)]
    pub pause: f64,
    /// Restricts plot CSVs, e.g. `<6KB` (KB = 1024 bytes).
    #[arg(long, global = true)]
    pub size_filter: Option<String>,
    /// Codecs left out of the per-file minimum compressed size.
    #[arg(long, global = true, value_delimiter = ',')]
    pub exclude_from_min: Vec<String>,
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resolve manifest entries to local files.
    Fetch,
    /// Strip comments, beautify and infer a DTD for every corpus file.
    Preprocess,
    /// Write the file property table.
    Profile,
    /// Execute the randomized campaign.
    Run {
        /// Stop after this many new runs (the campaign stays resumable).
        #[arg(long)]
        max_runs: Option<usize>,
        /// Per-codec time divisor, `CODEC=FACTOR`.
        #[arg(long, value_parser = parse_scale)]
        time_scale: Vec<(String, f64)>,
    },
    /// Compute the four metrics for every successful run.
    Metrics,
    /// Partial F-test tables per metric.
    Anova {
        #[arg(long)]
        metric: Option<String>,
    },
    /// Tukey-Kramer grouping per metric.
    Hsd {
        #[arg(long)]
        metric: Option<String>,
    },
    /// Every table and plot CSV.
    Report {
        /// Codec for the bounded-ratio view (default: best mean efficiency).
        #[arg(long)]
        bounds_codec: Option<String>,
    },
    /// Write the synthetic ten-file corpus and its manifest.
    GenCorpus {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn parse_scale(s: &str) -> Result<(String, f64), String> {
    let (c, v) = s.split_once('=').ok_or("expected CODEC=FACTOR")?;
    let f: f64 = v.parse().map_err(|_| format!("bad factor `{v}`"))?;
    Ok((c.to_string(), f))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Resumable(String),
    Other(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Other(e.to_string())
    }
}

fn harness_failure(e: HarnessError) -> Failure {
    match e {
        HarnessError::Storage { .. } => Failure::Resumable(format!("{e}; rerun the same command to resume")),
        other => Failure::Other(other.to_string()),
    }
}

fn modes(g: &GlobalArgs, allow_both: bool) -> Result<Vec<Mode>, Failure> {
    match g.mode.as_str() {
        "both" if allow_both => Ok(vec![Mode::Default, Mode::Maximum]),
        m => m.parse::<Mode>().map(|m| vec![m]).map_err(Failure::Usage),
    }
}

fn analysis_mode(g: &GlobalArgs) -> Result<Mode, Failure> {
    Ok(modes(g, false)?[0])
}

fn metrics_arg(m: &Option<String>) -> Result<Vec<Metric>, Failure> {
    match m {
        None => Ok(Metric::ALL.to_vec()),
        Some(s) => Ok(vec![s.parse::<Metric>().map_err(|e| Failure::Usage(e.to_string()))?]),
    }
}

fn load_manifest(g: &GlobalArgs) -> Result<CorpusManifest, Failure> {
    match g.corpus.as_slice() {
        [] => {
            let pre = g.out.join("preprocessed").join("manifest.json");
            let fetched = g.out.join("corpus.json");
            for p in [pre, fetched] {
                if p.is_file() {
                    return CorpusManifest::load(&p).map_err(harness_failure);
                }
            }
            Err(Failure::Usage("no corpus: pass --corpus or run fetch/preprocess first".into()))
        }
        [one] if one.extension().is_some_and(|e| e == "json") => CorpusManifest::load(one).map_err(harness_failure),
        [dir] if dir.is_dir() => {
            let listed = dir.join("manifest.json");
            if listed.is_file() {
                return CorpusManifest::load(&listed).map_err(harness_failure);
            }
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "xml"))
                .collect();
            files.sort();
            CorpusManifest::from_files(&files).map_err(harness_failure)
        }
        many => CorpusManifest::from_files(many).map_err(harness_failure),
    }
}

fn fetched(g: &GlobalArgs, manifest: &CorpusManifest) -> Result<FetchReport, Failure> {
    fetch_corpus(manifest, &FetchOptions::new(g.out.join("cache"))).map_err(harness_failure)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text)?;
    Ok(())
}

fn runs(g: &GlobalArgs) -> Result<(Vec<RunRecord>, BTreeMap<String, f64>), Failure> {
    let path = g.out.join("runs.jsonl");
    if !path.is_file() {
        return Err(Failure::Other(format!("{} not found; run the campaign first", path.display())));
    }
    let c = load_campaign(&path).map_err(harness_failure)?;
    let scale = c.header.map(|h| h.time_scale).unwrap_or_default();
    Ok((c.records, scale))
}

fn profiles(g: &GlobalArgs) -> Result<Vec<FileProfile>, Failure> {
    let path = g.out.join("profiles.csv");
    if path.is_file() {
        Ok(read_profiles_csv(&path)?)
    } else {
        log::warn!("{} not found; covariate factors unavailable", path.display());
        Ok(Vec::new())
    }
}

fn analysis(g: &GlobalArgs, time_scale: BTreeMap<String, f64>) -> Result<AnalysisOptions, Failure> {
    if !(g.alpha > 0.0 && g.alpha < 1.0) {
        return Err(Failure::Usage(format!("--alpha must lie in (0, 1), got {}", g.alpha)));
    }
    Ok(AnalysisOptions {
        mode: analysis_mode(g)?,
        alpha: g.alpha,
        exclude_from_min: g.exclude_from_min.clone(),
        time_scale,
    })
}

fn write_buf(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<(), Failure>) -> Result<(), Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

fn run_command(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    std::fs::create_dir_all(&g.out)?;
    match &cli.command {
        Command::GenCorpus { dir } => {
            let dir = dir.clone().unwrap_or_else(|| g.out.join("corpus"));
            let (_, files) = generate_corpus(&dir, g.seed).map_err(harness_failure)?;
            for f in &files {
                println!("{}\t{}\t{}", f.file_id, f.domain, f.bytes);
            }
            println!("manifest: {}", dir.join("manifest.json").display());
        }
        Command::Fetch => {
            let manifest = load_manifest(g)?;
            let report = fetched(g, &manifest)?;
            write_json(&g.out.join("fetch_report.json"), &report)?;
            let mut available = report.available_manifest(&manifest);
            for e in &mut available.entries {
                if let Some(p) = &e.local_path {
                    e.local_path = Some(std::path::absolute(p)?);
                }
            }
            available.save(&g.out.join("corpus.json")).map_err(harness_failure)?;
            println!("available {}", report.summary());
            for id in report.unavailable() {
                println!("unavailable: {id}");
            }
            for id in report.corrupt() {
                println!("corrupt: {id}");
            }
        }
        Command::Preprocess => {
            let manifest = load_manifest(g)?;
            let report = fetched(g, &manifest)?;
            let available = report.available_manifest(&manifest);
            let dir = g.out.join("preprocessed");
            let out = preprocess_corpus(&available, &dir).map_err(harness_failure)?;
            out.save(&dir.join("manifest.json")).map_err(harness_failure)?;
            println!("preprocessed {} files into {}", out.entries.len(), dir.display());
        }
        Command::Profile => {
            let manifest = load_manifest(g)?;
            let report = fetched(g, &manifest)?;
            let mut table = Vec::new();
            for (id, path) in report.available() {
                let raw = std::fs::read(path)?;
                let doc = parse_xml(&raw).map_err(|e| Failure::Other(format!("{id}: {e}")))?;
                let domain = manifest.entry(id).map(|e| e.domain).expect("fetched from manifest");
                table.push(compute_profile(id, &raw, &doc, domain));
            }
            write_buf(&g.out.join("profiles.csv"), |b| Ok(write_profiles_csv(&table, b)?))?;
            print!("{}", profiles_text(&table));
        }
        Command::Run { max_runs, time_scale } => {
            let manifest = load_manifest(g)?;
            let report = fetched(g, &manifest)?;
            let files: BTreeMap<String, PathBuf> =
                report.available().map(|(id, p)| (id.to_string(), p.to_path_buf())).collect();
            let ids: Vec<String> = manifest
                .entries
                .iter()
                .filter(|e| files.contains_key(&e.file_id))
                .map(|e| e.file_id.clone())
                .collect();
            let mut registry = CodecRegistry::load(&g.codecs)?;
            for (name, factor) in time_scale {
                let mut hit = false;
                for c in registry.codecs.iter_mut().filter(|c| &c.short_name == name) {
                    c.time_scale = *factor;
                    hit = true;
                }
                if !hit {
                    return Err(Failure::Usage(format!("--time-scale names unknown codec {name}")));
                }
            }
            let registry = CodecRegistry::new(registry.codecs)?;
            let plan = build_plan(&ids, &registry, g.seed, &modes(g, true)?, g.pause).map_err(harness_failure)?;
            std::fs::write(g.out.join("plan.json"), plan.to_json())?;
            let opts = ExecuteOptions {
                runs_path: g.out.join("runs.jsonl"),
                log_dir: Some(g.out.join("logs")),
                max_runs: *max_runs,
            };
            let summary = execute(&plan, &registry, &files, &opts).map_err(harness_failure)?;
            println!(
                "executed {} (failed {}), skipped {}, remaining {}",
                summary.executed, summary.failed, summary.skipped, summary.remaining
            );
            if !summary.complete() {
                return Err(Failure::Resumable(format!(
                    "campaign incomplete: {} runs remain; rerun the same command to resume",
                    summary.remaining
                )));
            }
        }
        Command::Metrics => {
            let (records, scale) = runs(g)?;
            let rows = analysis_rows(&records, &analysis(g, scale)?)?;
            write_buf(&g.out.join("metrics.csv"), |b| Ok(write_metrics_csv(&rows, b)?))?;
            println!("{} metric rows", rows.len());
        }
        Command::Anova { metric } | Command::Hsd { metric } => {
            let metrics = metrics_arg(metric)?;
            let (records, scale) = runs(g)?;
            let opts = analysis(g, scale)?;
            let rows = analysis_rows(&records, &opts)?;
            let written = if matches!(cli.command, Command::Anova { .. }) {
                let profiles = fill_e_hinf(&profiles(g)?, &rows);
                write_anova_tables(&g.out, &profiles, &rows, &metrics)?
            } else {
                write_hsd_tables(&g.out, &rows, &metrics, opts.alpha)?
            };
            for p in written.iter().filter(|p| p.extension().is_some_and(|e| e == "txt")) {
                print!("{}", std::fs::read_to_string(p)?);
            }
        }
        Command::Report { bounds_codec } => {
            let (records, scale) = runs(g)?;
            let size_filter = g
                .size_filter
                .as_deref()
                .map(str::parse::<SizeFilter>)
                .transpose()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let opts = ReportOptions {
                analysis: analysis(g, scale)?,
                size_filter,
                bounds_codec: bounds_codec.clone(),
            };
            let written = emit_reports(&g.out, &records, &profiles(g)?, &opts)?;
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs the command.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = if cli.global.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run_command(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Resumable(m)) => {
            eprintln!("{m}");
            EXIT_RESUMABLE
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            EXIT_ERROR
        }
    }
}
