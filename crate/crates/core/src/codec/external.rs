use std::fmt;
use std::fs::{File, OpenOptions};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{day_fraction, CodecError, CodecKind, CodecSpec};

/// Command template for an external compressor. `{input}` and `{output}`
/// are replaced by the file paths; with `stdout` set the program's standard
/// output becomes the output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCommand {
    pub command: String,
    #[serde(default)]
    pub stdout: bool,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Optional inverse command with the same placeholder convention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decompress: Option<String>,
    #[serde(default)]
    pub decompress_stdout: bool,
}

fn default_timeout() -> f64 {
    3600.0
}

impl ExternalCommand {
    pub fn new(command: impl Into<String>, stdout: bool) -> Self {
        ExternalCommand {
            command: command.into(),
            stdout,
            timeout_secs: default_timeout(),
            decompress: None,
            decompress_stdout: false,
        }
    }

    pub(super) fn validate(&self) -> Result<(), String> {
        if !self.command.contains("{input}") {
            return Err("command template lacks {input}".into());
        }
        if !self.stdout && !self.command.contains("{output}") {
            return Err("command template lacks {output} and does not write to stdout".into());
        }
        if !(self.timeout_secs > 0.0) {
            return Err("timeout must be positive".into());
        }
        shlex::split(&self.command).ok_or_else(|| "command template has unbalanced quotes".to_string())?;
        Ok(())
    }

    fn argv(&self, input: &Path, output: &Path) -> Result<Vec<String>, String> {
        let words = shlex::split(&self.command).ok_or_else(|| "unbalanced quotes in command".to_string())?;
        let input = input.to_string_lossy();
        let output = output.to_string_lossy();
        Ok(words
            .into_iter()
            .map(|w| w.replace("{input}", &input).replace("{output}", &output))
            .collect())
    }
}

/// Why an external run did not produce a usable archive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum FailureReason {
    SpawnError(String),
    Timeout,
    NonzeroExit(Option<i32>),
    MissingOutput,
    /// Built-in or in-process failure (parse error, roundtrip mismatch, ...).
    Error(String),
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::SpawnError(e) => write!(f, "spawn error: {e}"),
            FailureReason::Timeout => f.write_str("timeout"),
            FailureReason::NonzeroExit(Some(c)) => write!(f, "nonzero exit status {c}"),
            FailureReason::NonzeroExit(None) => f.write_str("terminated by signal"),
            FailureReason::MissingOutput => f.write_str("missing output file"),
            FailureReason::Error(e) => f.write_str(e),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExternalOutcome {
    /// Size of the produced file, when the run succeeded.
    pub s_comp: Option<u64>,
    /// Wall time in day fractions (also recorded for failures).
    pub t_exec: f64,
    pub failure: Option<FailureReason>,
}

impl ExternalOutcome {
    fn failed(reason: FailureReason, elapsed: Duration) -> Self {
        ExternalOutcome {
            s_comp: None,
            t_exec: day_fraction(elapsed),
            failure: Some(reason),
        }
    }
}

fn log_file(dir: Option<&Path>, code: &str, stream: u8) -> std::io::Result<Stdio> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(d.join(format!("{code}.{stream}.txt")))?;
            Ok(Stdio::from(f))
        }
        None => Ok(Stdio::null()),
    }
}

/// Runs an external codec on `input`, writing the archive to `output`.
///
/// Standard output and error are appended to `<code>.1.txt` and
/// `<code>.2.txt` under `log_dir` (standard output instead feeds the archive
/// when the template declares it). Process failures are reported in the
/// outcome; only local I/O problems with log or output files are errors.
pub fn run_external(
    codec: &CodecSpec,
    input: &Path,
    output: &Path,
    log_dir: Option<&Path>,
) -> Result<ExternalOutcome, CodecError> {
    let CodecKind::External(cmd) = &codec.kind else {
        return Err(CodecError::Config(format!("{} is not an external codec", codec.short_name)));
    };
    let argv = cmd.argv(input, output).map_err(CodecError::Config)?;
    let Some((program, args)) = argv.split_first() else {
        return Err(CodecError::Config(format!("{}: empty command", codec.short_name)));
    };
    if output.exists() {
        std::fs::remove_file(output)?;
    }
    let code = codec.short_name.to_ascii_lowercase();
    let stdout = if cmd.stdout {
        Stdio::from(File::create(output)?)
    } else {
        log_file(log_dir, &code, 1)?
    };
    let stderr = log_file(log_dir, &code, 2)?;
    let timeout = Duration::from_secs_f64(cmd.timeout_secs);

    let start = Instant::now();
    let mut child = match Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr)
        .spawn()
    {
        Ok(c) => c,
        Err(e) => {
            let elapsed = start.elapsed();
            if cmd.stdout {
                let _ = std::fs::remove_file(output);
            }
            return Ok(ExternalOutcome::failed(FailureReason::SpawnError(e.to_string()), elapsed));
        }
    };
    let status = loop {
        match child.try_wait()? {
            Some(status) => break status,
            None if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(ExternalOutcome::failed(FailureReason::Timeout, start.elapsed()));
            }
            None => std::thread::sleep(Duration::from_micros(200)),
        }
    };
    let elapsed = start.elapsed();
    if !status.success() {
        return Ok(ExternalOutcome::failed(FailureReason::NonzeroExit(status.code()), elapsed));
    }
    match std::fs::metadata(output) {
        Ok(m) if m.len() > 0 => Ok(ExternalOutcome {
            s_comp: Some(m.len()),
            t_exec: day_fraction(elapsed),
            failure: None,
        }),
        _ => Ok(ExternalOutcome::failed(FailureReason::MissingOutput, elapsed)),
    }
}
