//! Deterministic synthetic corpus for smoke tests and demonstrations.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::manifest::{CorpusManifest, ManifestEntry};
use super::HarnessError;
use crate::xml::{escape_attr, escape_text, Domain};

/// `(domain, approximate size in bytes)` of each generated file.
pub const MINI_CORPUS_SIZES: [(Domain, usize); 10] = [
    (Domain::SI, 320),
    (Domain::DB, 900),
    (Domain::RS, 2_500),
    (Domain::BK, 5_000),
    (Domain::TR, 9_000),
    (Domain::DB, 30_000),
    (Domain::BK, 100_000),
    (Domain::RS, 350_000),
    (Domain::SI, 1_000_000),
    (Domain::DB, 2_000_000),
];

#[derive(Debug, Clone)]
pub struct CorpusFile {
    pub file_id: String,
    pub domain: Domain,
    pub bytes: usize,
}

const WORDS: &[&str] = &[
    "the", "engine", "river", "quiet", "market", "signal", "winter", "copper", "lantern", "harbor",
    "orbit", "garden", "ledger", "meadow", "falcon", "paper", "stone", "violet", "thunder", "bridge",
    "a", "of", "and", "to", "in", "was", "over", "under", "&", "<less>",
];
const MAKES: &[&str] = &["Volvo", "Saab", "Fiat", "Ford", "Honda", "Skoda"];
const COLORS: &[&str] = &["red", "green", "blue", "black", "white", "silver"];

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut s = String::new();
    for i in 0..n {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(WORDS.choose(rng).unwrap());
    }
    let mut out = String::new();
    escape_text(&s, &mut out);
    out
}

fn attr(v: &str) -> String {
    let mut out = String::new();
    escape_attr(v, &mut out);
    out
}

fn record(domain: Domain, rng: &mut ChaCha8Rng, i: usize, out: &mut String) {
    match domain {
        Domain::DB => {
            let _ = writeln!(
                out,
                "  <car id=\"{i}\">\n    <make>{}</make>\n    <color>{}</color>\n    <price>{}</price>\n  </car>",
                MAKES.choose(rng).unwrap(),
                COLORS.choose(rng).unwrap(),
                rng.random_range(1_000..90_000)
            );
            if i % 7 == 3 {
                let _ = writeln!(out, "  <paint k=\"{}\"><color>{}</color></paint>", i % 5, COLORS.choose(rng).unwrap());
            }
        }
        Domain::BK => {
            let w = rng.random_range(4..9);
            let _ = writeln!(out, "  <Chapter><Title>{}</Title>", words(rng, w));
            for _ in 0..rng.random_range(1..4) {
                let w = rng.random_range(8..30);
                let _ = writeln!(out, "    <Par>{}</Par>", words(rng, w));
            }
            out.push_str("  </Chapter>\n");
            if i.is_multiple_of(5) {
                out.push_str("  <!-- draft -->\n");
            }
        }
        Domain::RS => {
            let w = rng.random_range(3..8);
            let title = words(rng, w);
            let w = rng.random_range(10..25);
            let desc = words(rng, w);
            let _ = writeln!(
                out,
                "    <item>\n      <title>{title}</title>\n      <link>http://news.example.org/{i}</link>\n      <description>{desc}</description>\n      <pubDate>2006-0{}-1{} 12:00</pubDate>\n    </item>",
                1 + i % 9,
                i % 10
            );
        }
        Domain::SI => {
            let _ = writeln!(
                out,
                "  <star ra=\"{:.5}\" dec=\"{:.5}\"><mag>{:.2}</mag><class>{}</class></star>",
                rng.random_range(0.0..360.0),
                rng.random_range(-90.0..90.0),
                rng.random_range(-1.0..16.0),
                attr(["O", "B", "A", "F", "G", "K", "M"].choose(rng).unwrap())
            );
        }
        _ => {
            let depth = rng.random_range(6..14);
            for d in 0..depth {
                let _ = write!(out, "<node d=\"{}\">", d + 1);
            }
            let _ = write!(out, "{}", words(rng, 2));
            for _ in 0..depth {
                out.push_str("</node>");
            }
            out.push('\n');
        }
    }
}

fn wrap(domain: Domain) -> (&'static str, &'static str) {
    match domain {
        Domain::DB => ("<db>\n", "</db>\n"),
        Domain::BK => ("<Book><Title>Generated</Title>\n", "</Book>\n"),
        Domain::RS => ("<rss version=\"2.0\">\n  <channel>\n    <title>Example feed</title>\n", "  </channel>\n</rss>\n"),
        Domain::SI => ("<catalog epoch=\"J2000\">\n", "</catalog>\n"),
        _ => ("<tree>\n", "</tree>\n"),
    }
}

/// One document of roughly `target` bytes; never below 300.
pub fn generate_document(domain: Domain, target: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (open, close) = wrap(domain);
    let mut body = String::with_capacity(target + 256);
    body.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    body.push_str(open);
    let mut i = 0;
    let floor = target.max(300);
    loop {
        let mut next = String::new();
        record(domain, &mut rng, i, &mut next);
        if body.len() + next.len() + close.len() > floor && body.len() + close.len() >= 300 && i > 0 {
            break;
        }
        body.push_str(&next);
        i += 1;
    }
    body.push_str(close);
    body
}

/// Writes the ten-file corpus and `manifest.json` into `dir`.
pub fn generate_corpus(dir: &Path, seed: u64) -> Result<(CorpusManifest, Vec<CorpusFile>), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    let mut files = Vec::new();
    for (k, &(domain, size)) in MINI_CORPUS_SIZES.iter().enumerate() {
        let file_id = format!("{domain}{:02}", k + 1);
        let text = generate_document(domain, size, seed.wrapping_add(k as u64));
        let name = format!("{file_id}.xml");
        std::fs::write(dir.join(&name), &text)?;
        entries.push(ManifestEntry {
            file_id: file_id.clone(),
            domain,
            source_url: None,
            checksum: Some(hex::encode(Sha256::digest(text.as_bytes()))),
            local_path: Some(name.into()),
        });
        files.push(CorpusFile {
            file_id,
            domain,
            bytes: text.len(),
        });
    }
    let mut manifest = CorpusManifest::new(entries)?;
    manifest.base_dir = dir.to_path_buf();
    manifest.save(&dir.join("manifest.json"))?;
    Ok((manifest, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xml::parse_xml;

    #[test]
    fn documents_parse_and_hit_their_size() {
        for (k, &(domain, size)) in MINI_CORPUS_SIZES.iter().enumerate().take(8) {
            let text = generate_document(domain, size, k as u64);
            let doc = parse_xml(text.as_bytes()).unwrap();
            assert!(text.len() >= 300 && text.len() <= size + size / 5 + 400, "{domain}: {}", text.len());
            assert!(doc.depth() >= 2);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_document(Domain::RS, 4000, 5), generate_document(Domain::RS, 4000, 5));
        assert_ne!(generate_document(Domain::RS, 4000, 5), generate_document(Domain::RS, 4000, 6));
    }
}
