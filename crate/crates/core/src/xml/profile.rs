use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::XmlDocument;
use crate::entropy::shannon_entropy;

/// Corpus file domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    /// Books
    BK,
    /// Databases
    DB,
    /// Directory listings
    LI,
    /// Legal documents
    LW,
    /// Office documents
    MU,
    /// Source code (conformance tests)
    NT,
    /// RSS news feeds
    RS,
    /// Scientific data
    SI,
    /// Deep nesting (trees)
    TR,
}

impl Domain {
    pub const ALL: [Domain; 9] = [
        Domain::BK,
        Domain::DB,
        Domain::LI,
        Domain::LW,
        Domain::MU,
        Domain::NT,
        Domain::RS,
        Domain::SI,
        Domain::TR,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Domain::BK => "BK",
            Domain::DB => "DB",
            Domain::LI => "LI",
            Domain::LW => "LW",
            Domain::MU => "MU",
            Domain::NT => "NT",
            Domain::RS => "RS",
            Domain::SI => "SI",
            Domain::TR => "TR",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown domain code `{s}`"))
    }
}

/// One row of the corpus property table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileProfile {
    pub file_id: String,
    pub domain: Domain,
    pub bytes: u64,
    pub lines: u64,
    pub unique_chars: u32,
    pub unique_tags: u32,
    pub depth: u32,
    pub h1: f64,
    pub e_hinf: Option<f64>,
}

/// Newline-separated segments, counting a final unterminated line.
pub fn count_lines(raw: &[u8]) -> u64 {
    let newlines = raw.iter().filter(|&&b| b == b'\n').count() as u64;
    match raw.last() {
        Some(b'\n') | None => newlines,
        Some(_) => newlines + 1,
    }
}

pub fn compute_profile(file_id: &str, raw: &[u8], doc: &XmlDocument, domain: Domain) -> FileProfile {
    let mut seen = [false; 256];
    for &b in raw {
        seen[b as usize] = true;
    }
    FileProfile {
        file_id: file_id.to_string(),
        domain,
        bytes: raw.len() as u64,
        lines: count_lines(raw),
        unique_chars: seen.iter().filter(|&&s| s).count() as u32,
        unique_tags: doc.element_names().len() as u32,
        depth: doc.depth() as u32,
        h1: shannon_entropy(raw, 1).map_or(0.0, |e| e.bits_per_symbol),
        e_hinf: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xml::{parse_xml, serialize, XmlNode, SAMPLE_BOOK};

    #[test]
    fn sample_book_profile() {
        let doc = parse_xml(SAMPLE_BOOK.as_bytes()).unwrap().strip_comments();
        let raw = serialize(&doc);
        let p = compute_profile("BOOK", raw.as_bytes(), &doc, Domain::BK);
        assert_eq!(p.unique_tags, 5);
        assert_eq!(p.depth, 3);
        assert_eq!(p.bytes, raw.len() as u64);
        // comment lines survive as blank lines
        assert_eq!(p.lines, 12);
        assert_eq!(p.lines as usize, raw.trim_end_matches('\n').split('\n').count());
        assert!(p.h1 > 0.0 && p.h1 <= 8.0);
        assert!(p.e_hinf.is_none());
    }

    #[test]
    fn opaque_single_symbol() {
        let doc = XmlDocument::new(XmlNode::new("a"));
        let p = compute_profile("A", b"AAAA", &doc, Domain::SI);
        assert_eq!(p.unique_chars, 1);
        assert_eq!(p.h1, 0.0);
        assert_eq!(p.lines, 1);
    }

    #[test]
    fn nested_depth() {
        let raw = b"<a><b><c/></b></a>";
        let doc = parse_xml(raw).unwrap();
        let p = compute_profile("N", raw, &doc, Domain::TR);
        assert_eq!((p.depth, p.unique_tags), (3, 3));
    }

    #[test]
    fn line_counting() {
        assert_eq!(count_lines(b""), 0);
        assert_eq!(count_lines(b"a"), 1);
        assert_eq!(count_lines(b"a\nb\n"), 2);
        assert_eq!(count_lines(b"a\nb"), 2);
        assert_eq!(count_lines(b"\n\n"), 2);
    }

    #[test]
    fn domain_codes_parse() {
        for d in Domain::ALL {
            assert_eq!(d.code().parse::<Domain>().unwrap(), d);
        }
        assert!("XX".parse::<Domain>().is_err());
    }
}
