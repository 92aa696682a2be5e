use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::{CorpusManifest, ManifestEntry};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Availability {
    Available { path: PathBuf, downloaded: bool },
    Unavailable { reason: String },
    Corrupt { expected: String, actual: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchStatus {
    pub file_id: String,
    #[serde(flatten)]
    pub availability: Availability,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchReport {
    pub entries: Vec<FetchStatus>,
}

impl FetchReport {
    pub fn available(&self) -> impl Iterator<Item = (&str, &Path)> {
        self.entries.iter().filter_map(|s| match &s.availability {
            Availability::Available { path, .. } => Some((s.file_id.as_str(), path.as_path())),
            _ => None,
        })
    }

    pub fn unavailable(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|s| matches!(s.availability, Availability::Unavailable { .. }))
            .map(|s| s.file_id.as_str())
            .collect()
    }

    pub fn corrupt(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|s| matches!(s.availability, Availability::Corrupt { .. }))
            .map(|s| s.file_id.as_str())
            .collect()
    }

    /// `available/total`.
    pub fn summary(&self) -> String {
        format!("{}/{}", self.available().count(), self.entries.len())
    }

    /// Restricts the manifest to the available entries, pointing each at
    /// its local copy.
    pub fn available_manifest(&self, manifest: &CorpusManifest) -> CorpusManifest {
        let entries = self
            .available()
            .filter_map(|(id, path)| {
                manifest.entry(id).map(|e| ManifestEntry {
                    local_path: Some(path.to_path_buf()),
                    ..e.clone()
                })
            })
            .collect();
        CorpusManifest {
            entries,
            base_dir: manifest.base_dir.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    /// Downloads land here as `<file_id>.xml`; an existing copy with a
    /// matching checksum is reused.
    pub cache_dir: PathBuf,
    pub timeout: Duration,
    pub max_bytes: u64,
}

impl FetchOptions {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        FetchOptions {
            cache_dir: cache_dir.into(),
            timeout: Duration::from_secs(30),
            max_bytes: 256 << 20,
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn verify(entry: &ManifestEntry, bytes: &[u8]) -> Result<(), Availability> {
    match &entry.checksum {
        Some(expected) => {
            let actual = sha256_hex(bytes);
            if actual.eq_ignore_ascii_case(expected) {
                Ok(())
            } else {
                Err(Availability::Corrupt {
                    expected: expected.to_ascii_lowercase(),
                    actual,
                })
            }
        }
        None => Ok(()),
    }
}

fn download(url: &str, base: &Path, opts: &FetchOptions) -> Result<Vec<u8>, String> {
    if let Some(rest) = url.strip_prefix("file://") {
        return std::fs::read(rest).map_err(|e| format!("{rest}: {e}"));
    }
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        let p = base.join(url);
        return std::fs::read(&p).map_err(|e| format!("{}: {e}", p.display()));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(opts.timeout))
        .build()
        .into();
    let mut response = agent.get(url).call().map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    response
        .body_mut()
        .as_reader()
        .take(opts.max_bytes + 1)
        .read_to_end(&mut bytes)
        .map_err(|e| e.to_string())?;
    if bytes.len() as u64 > opts.max_bytes {
        return Err(format!("larger than {} bytes", opts.max_bytes));
    }
    Ok(bytes)
}

fn fetch_entry(manifest: &CorpusManifest, entry: &ManifestEntry, opts: &FetchOptions) -> Availability {
    if let Some(local) = &entry.local_path {
        let path = manifest.resolve(local);
        if let Ok(bytes) = std::fs::read(&path) {
            return match verify(entry, &bytes) {
                Ok(()) => Availability::Available { path, downloaded: false },
                Err(bad) => bad,
            };
        }
    }
    let Some(url) = &entry.source_url else {
        return Availability::Unavailable {
            reason: "local file missing and no source url".into(),
        };
    };
    let cached = opts.cache_dir.join(format!("{}.xml", entry.file_id));
    if let Ok(bytes) = std::fs::read(&cached) {
        if entry.checksum.is_some() && verify(entry, &bytes).is_ok() {
            return Availability::Available {
                path: cached,
                downloaded: false,
            };
        }
    }
    let bytes = match download(url, &manifest.base_dir, opts) {
        Ok(b) => b,
        Err(reason) => return Availability::Unavailable { reason },
    };
    if let Err(bad) = verify(entry, &bytes) {
        return bad;
    }
    let written = std::fs::create_dir_all(&opts.cache_dir).and_then(|_| std::fs::write(&cached, &bytes));
    match written {
        Ok(()) => Availability::Available {
            path: cached,
            downloaded: true,
        },
        Err(e) => Availability::Unavailable {
            reason: format!("cache write failed: {e}"),
        },
    }
}

/// Resolves every manifest entry to a local file, downloading into the
/// cache when needed. Unreachable and corrupt entries are reported, not
/// raised.
pub fn fetch_corpus(manifest: &CorpusManifest, opts: &FetchOptions) -> Result<FetchReport, HarnessError> {
    manifest.validate()?;
    let entries = manifest
        .entries
        .iter()
        .map(|e| {
            let availability = fetch_entry(manifest, e, opts);
            if let Availability::Unavailable { reason } = &availability {
                log::warn!("{}: unavailable ({reason})", e.file_id);
            }
            FetchStatus {
                file_id: e.file_id.clone(),
                availability,
            }
        })
        .collect();
    Ok(FetchReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xml::Domain;

    fn entry(id: &str, local: Option<&str>, url: Option<&str>, checksum: Option<String>) -> ManifestEntry {
        ManifestEntry {
            file_id: id.into(),
            domain: Domain::DB,
            source_url: url.map(String::from),
            checksum,
            local_path: local.map(PathBuf::from),
        }
    }

    #[test]
    fn local_entry_needs_no_network() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.xml"), b"<a/>").unwrap();
        let mut m = CorpusManifest::new(vec![entry("a", Some("a.xml"), None, Some(sha256_hex(b"<a/>")))]).unwrap();
        m.base_dir = dir.path().into();
        let r = fetch_corpus(&m, &FetchOptions::new(dir.path().join("cache"))).unwrap();
        assert_eq!(r.summary(), "1/1");
        assert!(!dir.path().join("cache").exists());
    }

    #[test]
    fn checksum_mismatch_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.xml"), b"<a/>").unwrap();
        let mut m = CorpusManifest::new(vec![entry("a", Some("a.xml"), None, Some(sha256_hex(b"<b/>")))]).unwrap();
        m.base_dir = dir.path().into();
        let r = fetch_corpus(&m, &FetchOptions::new(dir.path())).unwrap();
        assert_eq!(r.corrupt(), ["a"]);
        assert_eq!(r.available().count(), 0);
    }

    #[test]
    fn file_url_is_cached_and_dead_source_reported() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src.xml");
        std::fs::write(&src, b"<r>1</r>").unwrap();
        let url = format!("file://{}", src.display());
        let sum = Some(sha256_hex(b"<r>1</r>"));
        let mut m = CorpusManifest::new(vec![
            entry("r", None, Some(&url), sum),
            entry("gone", Some("missing.xml"), Some("file:///nonexistent/x.xml"), None),
        ])
        .unwrap();
        m.base_dir = dir.path().into();
        let opts = FetchOptions::new(dir.path().join("cache"));
        let r = fetch_corpus(&m, &opts).unwrap();
        assert_eq!(r.unavailable(), ["gone"]);
        assert!(matches!(r.entries[0].availability, Availability::Available { downloaded: true, .. }));
        std::fs::remove_file(&src).unwrap();
        let again = fetch_corpus(&m, &opts).unwrap();
        assert!(matches!(again.entries[0].availability, Availability::Available { downloaded: false, .. }));
        let sub = again.available_manifest(&m);
        assert_eq!(sub.entries.len(), 1);
        assert_eq!(sub.entries[0].local_path.as_deref(), Some(opts.cache_dir.join("r.xml").as_path()));
    }
}
