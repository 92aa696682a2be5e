//! Codec registry and the compression pipeline.
//!
//! A codec is either built in (the order-0 arithmetic control coder, a
//! BWT pipeline, or one of the XML-aware transforms layered over a built-in
//! backend) or an external program driven through a command template.

pub mod ari;
pub mod bwt;
mod external;
pub mod mtf;
pub mod rle;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use external::{run_external, ExternalCommand, ExternalOutcome, FailureReason};

use crate::transforms::{self, ContainerSpec};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("unknown codec `{0}`")]
    UnknownCodec(String),
    #[error("codec configuration error: {0}")]
    Config(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("external codec failed: {0}")]
    External(FailureReason),
    #[error("transform error: {0}")]
    Transform(#[from] transforms::TransformError),
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Compressor classes: zip, arithmetic, XML binary, XML schema-aware and
/// the control coder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CodecClass {
    ZIP,
    MAT,
    XBN,
    XSC,
    CTL,
}

impl fmt::Display for CodecClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// General-purpose or XML-specific.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Application {
    GLO,
    XML,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum Mode {
    #[default]
    #[serde(rename = "default")]
    Default,
    #[serde(rename = "max", alias = "maximum")]
    Maximum,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Default => "default",
            Mode::Maximum => "max",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Mode::Default),
            "max" | "maximum" => Ok(Mode::Maximum),
            _ => Err(format!("unknown mode `{s}` (expected default or max)")),
        }
    }
}

/// Lossless stages that may precede the entropy coder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Bwt,
    Mtf,
    Rle,
}

impl Transform {
    fn forward(self, data: &[u8]) -> Vec<u8> {
        match self {
            Transform::Bwt => bwt::pack(&bwt::bwt_forward(data)),
            Transform::Mtf => mtf::mtf_encode(data),
            Transform::Rle => rle::rle_encode(data),
        }
    }

    fn inverse(self, data: &[u8]) -> Result<Vec<u8>, CodecError> {
        match self {
            Transform::Bwt => bwt::bwt_inverse(&bwt::unpack(data)?),
            Transform::Mtf => Ok(mtf::mtf_decode(data)),
            Transform::Rle => rle::rle_decode(data),
        }
    }
}

/// Entropy coder at the end of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coder {
    Ari,
    Store,
}

/// Optional lossless transforms followed by a coder. Decompression applies
/// the inverse stages in reverse order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pipeline {
    pub transforms: Vec<Transform>,
    pub compressor: Coder,
}

impl Pipeline {
    pub fn ari() -> Self {
        Pipeline {
            transforms: Vec::new(),
            compressor: Coder::Ari,
        }
    }

    pub fn bwt() -> Self {
        Pipeline {
            transforms: vec![Transform::Bwt, Transform::Mtf],
            compressor: Coder::Ari,
        }
    }

    pub fn store() -> Self {
        Pipeline {
            transforms: Vec::new(),
            compressor: Coder::Store,
        }
    }

    /// Unframed encoding.
    pub fn encode_raw(&self, input: &[u8]) -> Vec<u8> {
        let mut data = input.to_vec();
        for t in &self.transforms {
            data = t.forward(&data);
        }
        match self.compressor {
            Coder::Ari => ari::encode(&data),
            Coder::Store => data,
        }
    }

    /// Inverse of [`Pipeline::encode_raw`]; `original_len` bounds the output.
    pub fn decode_raw(&self, payload: &[u8], original_len: usize) -> Result<Vec<u8>, CodecError> {
        // no built-in stage more than doubles its input
        let staged_limit = self
            .transforms
            .iter()
            .fold(original_len, |n, _| n.saturating_mul(2).saturating_add(8));
        let mut data = match self.compressor {
            Coder::Ari => ari::decode(payload, staged_limit)?,
            Coder::Store => payload.to_vec(),
        };
        for t in self.transforms.iter().rev() {
            data = t.inverse(&data)?;
        }
        if data.len() != original_len {
            return Err(CodecError::Decode(format!(
                "decoded {} bytes, expected {original_len}",
                data.len()
            )));
        }
        Ok(data)
    }

    fn magic(&self) -> [u8; 4] {
        match (self.transforms.as_slice(), self.compressor) {
            ([], Coder::Ari) => *b"XBA1",
            ([Transform::Bwt, Transform::Mtf], Coder::Ari) => *b"XBW1",
            _ => *b"XBP1",
        }
    }

    /// Framed encoding: 4-byte magic, `u32` LE original length, `u32` LE
    /// CRC-32 of the original, then the payload. Empty input is header only.
    pub fn compress(&self, input: &[u8]) -> Result<Vec<u8>, CodecError> {
        let len = u32::try_from(input.len())
            .map_err(|_| CodecError::Config("built-in codecs handle inputs below 4 GiB".into()))?;
        let mut out = Vec::with_capacity(FRAME_HEADER + input.len() / 2);
        out.extend_from_slice(&self.magic());
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&crc32fast::hash(input).to_le_bytes());
        if !input.is_empty() {
            out.extend_from_slice(&self.encode_raw(input));
        }
        Ok(out)
    }

    pub fn decompress(&self, input: &[u8]) -> Result<Vec<u8>, CodecError> {
        if input.len() < FRAME_HEADER {
            return Err(CodecError::Decode("stream shorter than its header".into()));
        }
        if input[..4] != self.magic() {
            return Err(CodecError::Decode("bad magic".into()));
        }
        let len = u32::from_le_bytes(input[4..8].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(input[8..12].try_into().unwrap());
        let payload = &input[FRAME_HEADER..];
        let data = if payload.is_empty() && len == 0 {
            Vec::new()
        } else {
            self.decode_raw(payload, len)?
        };
        if crc32fast::hash(&data) != crc {
            return Err(CodecError::Decode("checksum mismatch".into()));
        }
        Ok(data)
    }
}

/// Bytes of framing added by [`Pipeline::compress`].
pub const FRAME_HEADER: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// Adaptive order-0 arithmetic coder (the control codec).
    Ari,
    /// BWT, move-to-front, then the arithmetic coder.
    Bwt,
    Pipeline(Pipeline),
    /// Container transform; `rules` are path expressions, the default
    /// trailing `//#` is implied.
    Xmill { rules: Vec<String>, backend: Backend },
    /// Subtree splitter at the given depth (root = 1).
    Xmlzip { depth: usize, backend: Backend },
}

/// Built-in byte codecs usable behind the XML transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Ari,
    Bwt,
    Store,
}

impl Backend {
    pub fn pipeline(self) -> Pipeline {
        match self {
            Backend::Ari => Pipeline::ari(),
            Backend::Bwt => Pipeline::bwt(),
            Backend::Store => Pipeline::store(),
        }
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ari" => Ok(Backend::Ari),
            "bwt" => Ok(Backend::Bwt),
            "store" => Ok(Backend::Store),
            _ => Err(format!("unknown backend `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecKind {
    Builtin(Builtin),
    External(ExternalCommand),
}

/// How exactly a codec reproduces its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    /// Byte-identical output.
    Bytes,
    /// The decoded document is structurally equal to the parsed input.
    Tree,
    /// External codecs without a decompression command.
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecSpec {
    pub short_name: String,
    pub class: CodecClass,
    pub application: Application,
    #[serde(default)]
    pub mode: Mode,
    #[serde(flatten)]
    pub kind: CodecKind,
    #[serde(default = "one")]
    pub time_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl CodecSpec {
    pub fn builtin(short_name: &str, class: CodecClass, application: Application, builtin: Builtin) -> Self {
        CodecSpec {
            short_name: short_name.to_string(),
            class,
            application,
            mode: Mode::Default,
            kind: CodecKind::Builtin(builtin),
            time_scale: 1.0,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn is_external(&self) -> bool {
        matches!(self.kind, CodecKind::External(_))
    }

    pub fn fidelity(&self) -> Fidelity {
        match &self.kind {
            CodecKind::Builtin(Builtin::Xmill { .. } | Builtin::Xmlzip { .. }) => Fidelity::Tree,
            CodecKind::Builtin(_) => Fidelity::Bytes,
            CodecKind::External(e) if e.decompress.is_some() => Fidelity::Bytes,
            CodecKind::External(_) => Fidelity::Unchecked,
        }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.short_name.is_empty() || self.short_name.contains(['/', '\\', ' ']) {
            return Err(CodecError::Config(format!("invalid short name `{}`", self.short_name)));
        }
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(CodecError::Config(format!(
                "{}: time_scale must be positive, got {}",
                self.short_name, self.time_scale
            )));
        }
        match &self.kind {
            CodecKind::External(cmd) => cmd.validate().map_err(|m| CodecError::Config(format!("{}: {m}", self.short_name))),
            CodecKind::Builtin(Builtin::Xmill { rules, .. }) => {
                ContainerSpec::parse(rules)?;
                Ok(())
            }
            CodecKind::Builtin(Builtin::Xmlzip { depth, .. }) if *depth < 1 => {
                Err(CodecError::Config(format!("{}: split depth must be >= 1", self.short_name)))
            }
            CodecKind::Builtin(_) => Ok(()),
        }
    }
}

/// Monotonic wall time as a fraction of a day, clamped below at one
/// [`CLOCK_TICK`].
pub fn day_fraction(elapsed: Duration) -> f64 {
    elapsed.max(CLOCK_TICK).as_secs_f64() / 86_400.0
}

/// Smallest measurable interval; zero-length timings are raised to this.
pub const CLOCK_TICK: Duration = Duration::from_micros(1);

#[derive(Debug, Clone)]
pub struct Compressed {
    pub output: Vec<u8>,
    /// Execution time in day fractions.
    pub t_exec: f64,
}

fn compress_builtin(builtin: &Builtin, input: &[u8]) -> Result<Vec<u8>, CodecError> {
    match builtin {
        Builtin::Ari => Pipeline::ari().compress(input),
        Builtin::Bwt => Pipeline::bwt().compress(input),
        Builtin::Pipeline(p) => p.compress(input),
        Builtin::Xmill { rules, backend } => {
            let spec = ContainerSpec::parse(rules)?;
            let doc = crate::xml::parse_xml(input).map_err(transforms::TransformError::from)?;
            Ok(transforms::xmill_compress(&doc, &spec, *backend)?)
        }
        Builtin::Xmlzip { depth, backend } => {
            let doc = crate::xml::parse_xml(input).map_err(transforms::TransformError::from)?;
            Ok(transforms::xmlzip_compress(&doc, *depth, *backend)?)
        }
    }
}

fn decompress_builtin(builtin: &Builtin, input: &[u8]) -> Result<Vec<u8>, CodecError> {
    match builtin {
        Builtin::Ari => Pipeline::ari().decompress(input),
        Builtin::Bwt => Pipeline::bwt().decompress(input),
        Builtin::Pipeline(p) => p.decompress(input),
        Builtin::Xmill { backend, .. } => {
            let doc = transforms::xmill_decompress(input, *backend)?;
            Ok(crate::xml::serialize(&doc).into_bytes())
        }
        Builtin::Xmlzip { backend, .. } => {
            let doc = transforms::xmlzip_decompress(input, *backend)?;
            Ok(crate::xml::serialize(&doc).into_bytes())
        }
    }
}

/// Compresses `input` with the codec and measures the call.
pub fn compress(codec: &CodecSpec, input: &[u8]) -> Result<Compressed, CodecError> {
    match &codec.kind {
        CodecKind::Builtin(b) => {
            let start = Instant::now();
            let output = compress_builtin(b, input)?;
            let t_exec = day_fraction(start.elapsed());
            Ok(Compressed { output, t_exec })
        }
        CodecKind::External(_) => {
            let dir = tempfile::tempdir()?;
            let in_path = dir.path().join("input.xml");
            let out_path = dir.path().join(format!("input.{}", codec.short_name.to_ascii_lowercase()));
            std::fs::write(&in_path, input)?;
            let outcome = run_external(codec, &in_path, &out_path, None)?;
            match outcome.failure {
                Some(reason) => Err(CodecError::External(reason)),
                None => Ok(Compressed {
                    output: std::fs::read(&out_path)?,
                    t_exec: outcome.t_exec,
                }),
            }
        }
    }
}

pub fn decompress(codec: &CodecSpec, input: &[u8]) -> Result<Vec<u8>, CodecError> {
    match &codec.kind {
        CodecKind::Builtin(b) => decompress_builtin(b, input),
        CodecKind::External(cmd) => {
            let Some(template) = &cmd.decompress else {
                return Err(CodecError::Unsupported(format!(
                    "{} has no decompression command",
                    codec.short_name
                )));
            };
            let dir = tempfile::tempdir()?;
            let in_path = dir.path().join("input.bin");
            let out_path = dir.path().join("output.xml");
            std::fs::write(&in_path, input)?;
            let inverse = ExternalCommand {
                command: template.clone(),
                stdout: cmd.decompress_stdout,
                timeout_secs: cmd.timeout_secs,
                decompress: None,
                decompress_stdout: false,
            };
            let spec = CodecSpec {
                kind: CodecKind::External(inverse),
                ..codec.clone()
            };
            let outcome = run_external(&spec, &in_path, &out_path, None)?;
            match outcome.failure {
                Some(reason) => Err(CodecError::External(reason)),
                None => Ok(std::fs::read(&out_path)?),
            }
        }
    }
}

/// Codecs keyed by `(short_name, mode)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CodecRegistry {
    pub codecs: Vec<CodecSpec>,
}

impl CodecRegistry {
    pub fn new(codecs: Vec<CodecSpec>) -> Result<Self, CodecError> {
        let mut seen = HashSet::new();
        for c in &codecs {
            c.validate()?;
            if !seen.insert((c.short_name.clone(), c.mode)) {
                return Err(CodecError::Config(format!(
                    "duplicate codec {} ({})",
                    c.short_name, c.mode
                )));
            }
        }
        Ok(CodecRegistry { codecs })
    }

    /// The built-in set: `ARI` (control), `BWT`, `XMI` (containers over the
    /// arithmetic coder; maximum mode uses the BWT backend) and `XZP`
    /// (subtree split at depth 2).
    pub fn builtins() -> Self {
        let xmill = |backend| Builtin::Xmill {
            rules: Vec::new(),
            backend,
        };
        let codecs = vec![
            CodecSpec::builtin("ARI", CodecClass::CTL, Application::GLO, Builtin::Ari),
            CodecSpec::builtin("BWT", CodecClass::ZIP, Application::GLO, Builtin::Bwt),
            CodecSpec::builtin("XMI", CodecClass::XSC, Application::XML, xmill(Backend::Ari)),
            CodecSpec::builtin("XMI", CodecClass::XSC, Application::XML, xmill(Backend::Bwt))
                .with_mode(Mode::Maximum),
            CodecSpec::builtin(
                "XZP",
                CodecClass::XSC,
                Application::XML,
                Builtin::Xmlzip {
                    depth: 2,
                    backend: Backend::Ari,
                },
            ),
        ];
        CodecRegistry { codecs }
    }

    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        let parsed: CodecRegistry =
            serde_json::from_str(text).map_err(|e| CodecError::Config(format!("codec registry: {e}")))?;
        CodecRegistry::new(parsed.codecs)
    }

    /// Loads a JSON registry file, or interprets `arg` as a comma-separated
    /// list of built-in short names (`all` selects every built-in).
    pub fn load(arg: &str) -> Result<Self, CodecError> {
        let path = Path::new(arg);
        if path.is_file() {
            return Self::from_json(&std::fs::read_to_string(path)?);
        }
        let all = Self::builtins();
        if arg == "all" {
            return Ok(all);
        }
        let mut codecs = Vec::new();
        for name in arg.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let matched: Vec<_> = all
                .codecs
                .iter()
                .filter(|c| c.short_name.eq_ignore_ascii_case(name))
                .cloned()
                .collect();
            if matched.is_empty() {
                return Err(CodecError::UnknownCodec(name.to_string()));
            }
            codecs.extend(matched);
        }
        CodecRegistry::new(codecs)
    }

    pub fn get(&self, short_name: &str, mode: Mode) -> Option<&CodecSpec> {
        self.codecs
            .iter()
            .find(|c| c.short_name == short_name && c.mode == mode)
    }

    pub fn require(&self, short_name: &str, mode: Mode) -> Result<&CodecSpec, CodecError> {
        self.get(short_name, mode)
            .ok_or_else(|| CodecError::UnknownCodec(format!("{short_name} ({mode})")))
    }

    /// Distinct short names in registration order.
    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for c in &self.codecs {
            if !names.contains(&c.short_name.as_str()) {
                names.push(&c.short_name);
            }
        }
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_header_only() {
        for p in [Pipeline::ari(), Pipeline::bwt(), Pipeline::store()] {
            let out = p.compress(b"").unwrap();
            assert_eq!(out.len(), FRAME_HEADER);
            assert_eq!(p.decompress(&out).unwrap(), b"");
        }
    }

    #[test]
    fn corrupted_streams_fail() {
        let input = b"The quick brown fox jumps over a lazy dog.".repeat(20);
        for p in [Pipeline::ari(), Pipeline::bwt()] {
            let mut out = p.compress(&input).unwrap();
            let mid = FRAME_HEADER + (out.len() - FRAME_HEADER) / 2;
            out[mid] ^= 0x5a;
            assert!(p.decompress(&out).is_err());
            assert!(p.decompress(&out[..FRAME_HEADER + 3]).is_err());
            assert!(p.decompress(b"XB").is_err());
        }
        assert!(Pipeline::ari().decompress(&Pipeline::bwt().compress(b"x").unwrap()).is_err());
    }

    #[test]
    fn registry_validation() {
        let reg = CodecRegistry::builtins();
        assert!(CodecRegistry::new(reg.codecs.clone()).is_ok());
        let mut dup = reg.codecs.clone();
        dup.push(reg.codecs[0].clone());
        assert!(matches!(CodecRegistry::new(dup), Err(CodecError::Config(_))));
        let mut bad = reg.codecs[0].clone();
        bad.time_scale = 0.0;
        assert!(bad.validate().is_err());
        assert_eq!(reg.names(), ["ARI", "BWT", "XMI", "XZP"]);
        assert!(reg.get("XMI", Mode::Maximum).is_some());
        assert!(reg.get("ARI", Mode::Maximum).is_none());
        assert!(matches!(CodecRegistry::load("ARI,NOPE"), Err(CodecError::UnknownCodec(n)) if n == "NOPE"));
        assert_eq!(CodecRegistry::load("ari,bwt").unwrap().codecs.len(), 2);
    }

    #[test]
    fn registry_json() {
        let json = r#"{"codecs":[
            {"short_name":"ARI","class":"CTL","application":"GLO","builtin":"ari"},
            {"short_name":"XM2","class":"XSC","application":"XML","mode":"max",
             "builtin":{"xmill":{"rules":["/(*)"],"backend":"bwt"}}},
            {"short_name":"GZP","class":"ZIP","application":"GLO","time_scale":1.047,
             "external":{"command":"gzip -9 -c {input}","stdout":true}}
        ]}"#;
        let reg = CodecRegistry::from_json(json).unwrap();
        assert_eq!(reg.codecs.len(), 3);
        assert_eq!(reg.codecs[1].mode, Mode::Maximum);
        assert!(reg.codecs[2].is_external());
        assert_eq!(reg.codecs[2].time_scale, 1.047);
        let back: CodecRegistry = serde_json::from_str(&serde_json::to_string(&reg).unwrap()).unwrap();
        assert_eq!(back, reg);
        let bad = r#"{"codecs":[{"short_name":"X","class":"XSC","application":"XML",
            "builtin":{"xmill":{"rules":["/a/(b"],"backend":"ari"}}}]}"#;
        assert!(CodecRegistry::from_json(bad).is_err());
    }

    #[test]
    fn day_fraction_clamps() {
        assert_eq!(day_fraction(Duration::ZERO), 1e-6 / 86_400.0);
        assert_eq!(day_fraction(Duration::from_secs(43_200)), 0.5);
    }
}
