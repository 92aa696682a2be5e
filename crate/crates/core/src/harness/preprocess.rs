use std::path::Path;

use sha2::{Digest, Sha256};

use super::manifest::{CorpusManifest, ManifestEntry};
use super::HarnessError;
use crate::xml::{infer_dtd, parse_xml, serialize, tidy, XmlDocument};

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub document: XmlDocument,
    /// Serialized document, newline terminated.
    pub xml: String,
    pub dtd: String,
}

/// Validates, strips comments, beautifies, infers a DTD and references it
/// through an external `DOCTYPE`. Comments go first so their lines do not
/// survive as blank ones.
pub fn preprocess(raw: &[u8], dtd_name: &str) -> Result<Preprocessed, HarnessError> {
    let parsed = parse_xml(raw)?;
    let mut document = tidy(&parsed.strip_comments());
    let dtd = infer_dtd(&document);
    document.doctype = Some(format!("{} SYSTEM \"{dtd_name}\"", document.root.name));
    let xml = serialize(&document) + "\n";
    document.source_bytes = xml.len();
    Ok(Preprocessed { document, xml, dtd })
}

/// Preprocesses every manifest entry into `out_dir` as `<id>.xml` plus
/// `<id>.dtd` and returns a manifest over the results. The source entry's
/// location is kept as the new entry's `source_url`.
pub fn preprocess_corpus(manifest: &CorpusManifest, out_dir: &Path) -> Result<CorpusManifest, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let mut entries = Vec::new();
    for e in &manifest.entries {
        let Some(local) = &e.local_path else {
            return Err(HarnessError::Manifest(format!("{}: not fetched", e.file_id)));
        };
        let src = std::fs::canonicalize(manifest.resolve(local))?;
        let raw = std::fs::read(&src)?;
        let dtd_name = format!("{}.dtd", e.file_id);
        let p = preprocess(&raw, &dtd_name).map_err(|err| match err {
            HarnessError::Xml(x) => HarnessError::Manifest(format!("{}: {x}", e.file_id)),
            other => other,
        })?;
        let xml_name = format!("{}.xml", e.file_id);
        std::fs::write(out_dir.join(&xml_name), &p.xml)?;
        std::fs::write(out_dir.join(&dtd_name), &p.dtd)?;
        entries.push(ManifestEntry {
            file_id: e.file_id.clone(),
            domain: e.domain,
            source_url: Some(format!("file://{}", src.display())),
            checksum: Some(hex::encode(Sha256::digest(p.xml.as_bytes()))),
            local_path: Some(xml_name.into()),
        });
    }
    let mut out = CorpusManifest::new(entries)?;
    out.base_dir = out_dir.to_path_buf();
    Ok(out)
}
