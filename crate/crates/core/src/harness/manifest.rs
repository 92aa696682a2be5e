use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::xml::Domain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file_id: String,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    /// Lowercase hex SHA-256 of the file contents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
    /// Relative paths resolve against the manifest's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, HarnessError> {
        let m = CorpusManifest {
            entries,
            base_dir: PathBuf::from("."),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.file_id.is_empty() || e.file_id.contains(['/', '\\']) {
                return Err(HarnessError::Manifest(format!("invalid file id `{}`", e.file_id)));
            }
            if !seen.insert(e.file_id.as_str()) {
                return Err(HarnessError::Manifest(format!("duplicate file id `{}`", e.file_id)));
            }
            if e.source_url.is_none() && e.local_path.is_none() {
                return Err(HarnessError::Manifest(format!("{}: neither source_url nor local_path", e.file_id)));
            }
            if let Some(c) = &e.checksum {
                if c.len() != 64 || !c.bytes().all(|b| b.is_ascii_hexdigit()) {
                    return Err(HarnessError::Manifest(format!("{}: checksum is not SHA-256 hex", e.file_id)));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut m: CorpusManifest =
            serde_json::from_str(text).map_err(|e| HarnessError::Manifest(e.to_string()))?;
        m.base_dir = base_dir.to_path_buf();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    /// Builds a manifest over loose XML files. The domain comes from the
    /// first two letters of the file name when they form a domain code.
    pub fn from_files(paths: &[PathBuf]) -> Result<Self, HarnessError> {
        let mut entries = Vec::new();
        for p in paths {
            let stem = p
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| HarnessError::Manifest(format!("bad file name {}", p.display())))?;
            let domain = stem
                .get(..2)
                .and_then(|prefix| prefix.parse::<Domain>().ok())
                .unwrap_or_else(|| {
                    log::warn!("{stem}: no domain prefix, assuming DB");
                    Domain::DB
                });
            entries.push(ManifestEntry {
                file_id: stem.to_string(),
                domain,
                source_url: None,
                checksum: None,
                local_path: Some(std::path::absolute(p)?),
            });
        }
        Self::new(entries)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn entry(&self, file_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.file_id == file_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str) -> ManifestEntry {
        ManifestEntry {
            file_id: id.into(),
            domain: Domain::BK,
            source_url: None,
            checksum: None,
            local_path: Some(format!("{id}.xml").into()),
        }
    }

    #[test]
    fn json_roundtrip_and_resolution() {
        let m = CorpusManifest::new(vec![entry("a"), entry("b")]).unwrap();
        let back = CorpusManifest::from_json(&m.to_json(), Path::new("/data")).unwrap();
        assert_eq!(back.entries, m.entries);
        assert_eq!(back.resolve(Path::new("a.xml")), Path::new("/data/a.xml"));
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(CorpusManifest::new(vec![entry("a"), entry("a")]).is_err());
        let mut bare = entry("c");
        bare.local_path = None;
        assert!(CorpusManifest::new(vec![bare]).is_err());
        let mut sum = entry("d");
        sum.checksum = Some("abc".into());
        assert!(CorpusManifest::new(vec![sum]).is_err());
        assert!(CorpusManifest::from_json(r#"{"entries":[{"file_id":"x","domain":"QQ","local_path":"x"}]}"#, Path::new(".")).is_err());
    }

    #[test]
    fn loose_files_take_domain_prefix() {
        let m = CorpusManifest::from_files(&["/t/RSfeed.xml".into(), "/t/other.xml".into()]).unwrap();
        assert_eq!(m.entries[0].domain, Domain::RS);
        assert_eq!(m.entries[1].domain, Domain::DB);
    }
}
