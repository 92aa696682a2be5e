//! Container transform: character data and attribute values are routed into
//! containers chosen by path rules, leaving a compact token stream for the
//! tree skeleton.
//!
//! Structure stream layout (varints unless noted):
//!
//! ```text
//! declaration   option string   (0 | 1 len bytes)
//! doctype       option string
//! tags          count, strings
//! attr names    count, strings
//! containers    count, (key string, sub-compressor byte)
//! tokens        0 = end element
//!               1 container len        character data
//!               2 name container len   attribute
//!               3 + tag                begin element
//! ```
//!
//! Value lengths live in the token stream, so the containers hold nothing
//! but value bytes.

use std::collections::HashMap;

use super::{corrupt, put_opt_str, put_str, put_varint, read_archive, write_archive, Part, Reader, TransformError};
use crate::codec::{rle, Backend};
use crate::xml::{XmlContent, XmlDocument, XmlNode};

const MAGIC: &[u8; 4] = b"XMIL";

const TOK_END: u64 = 0;
const TOK_TEXT: u64 = 1;
const TOK_ATTR: u64 = 2;
const TOK_BEGIN: u64 = 3;

/// Per-container coder applied before the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubCompressor {
    /// Pass-through (`=>t`, the default).
    Plain,
    /// Byte-level run-length coding (`=>r1`).
    Rle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    /// `//#` or `/(#)`: one container per trailing element name.
    LastName,
    /// `/a/b/c` (absolute) or `//b/c` (suffix). A final `@name` segment
    /// addresses an attribute.
    Path { absolute: bool, segments: Vec<String> },
    /// `/(*)`: everything in one container.
    AllInOne,
    /// `(#)+`: one container per distinct full path.
    PerPath,
    /// `/(t1|t2|...)` or `/(t1 t2 ...)`: the listed elements share one container.
    ElementList(Vec<String>),
}

impl Pattern {
    /// Container key for a matching path, `None` if the rule does not apply.
    /// Attribute paths end with an `@name` segment.
    fn key(&self, text: &str, path: &[&str]) -> Option<String> {
        let last = *path.last()?;
        let is_attr = last.starts_with('@');
        match self {
            Pattern::LastName if is_attr => {
                let owner = path.len().checked_sub(2).map(|i| path[i]).unwrap_or("");
                Some(format!("{owner}{last}"))
            }
            Pattern::LastName => Some(last.to_string()),
            Pattern::AllInOne => Some("*".into()),
            Pattern::PerPath => Some(format!("/{}", path.join("/"))),
            Pattern::Path { absolute, segments } => {
                let hit = if *absolute {
                    path.len() == segments.len() && path.iter().zip(segments).all(|(a, b)| a == b)
                } else {
                    path.len() >= segments.len()
                        && path[path.len() - segments.len()..].iter().zip(segments).all(|(a, b)| a == b)
                };
                hit.then(|| text.to_string())
            }
            Pattern::ElementList(names) => (!is_attr && names.iter().any(|n| n == last)).then(|| text.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// Path expression without the sub-compressor suffix.
    pub text: String,
    pub pattern: Pattern,
    pub sub: SubCompressor,
}

/// Ordered container rules; the first match wins and a trailing `//#` is
/// always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerSpec {
    pub rules: Vec<Rule>,
}

impl Default for ContainerSpec {
    fn default() -> Self {
        ContainerSpec {
            rules: vec![default_rule()],
        }
    }
}

fn default_rule() -> Rule {
    Rule {
        text: "//#".into(),
        pattern: Pattern::LastName,
        sub: SubCompressor::Plain,
    }
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_' || c == ':')
        && chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | ':' | '-' | '.'))
}

fn parse_rule(raw: &str) -> Result<Rule, TransformError> {
    let err = |message: &str| TransformError::Spec {
        rule: raw.to_string(),
        message: message.to_string(),
    };
    let raw_trim = raw.trim();
    let (text, sub) = match raw_trim.split_once("=>") {
        Some((t, "r1")) => (t, SubCompressor::Rle),
        Some((t, "t")) => (t, SubCompressor::Plain),
        Some(_) => return Err(err("unknown sub-compressor (expected r1 or t)")),
        None => (raw_trim, SubCompressor::Plain),
    };
    let pattern = match text {
        "//#" | "/(#)" | "//(#)" => Pattern::LastName,
        "/(*)" | "//(*)" => Pattern::AllInOne,
        "(#)+" | "//(#)+" | "/(#)+" => Pattern::PerPath,
        _ => {
            let body = text
                .strip_prefix("//")
                .map(|b| (false, b))
                .or_else(|| text.strip_prefix('/').map(|b| (true, b)));
            let Some((absolute, body)) = body else {
                return Err(err("expected a path starting with / or //, or (#)+"));
            };
            if let Some(inner) = body.strip_prefix('(') {
                let inner = inner.strip_suffix(')').ok_or_else(|| err("unbalanced parenthesis"))?;
                let names: Vec<String> = inner
                    .split(|c: char| c == '|' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                if names.is_empty() {
                    return Err(err("empty element list"));
                }
                if let Some(bad) = names.iter().find(|n| !valid_name(n)) {
                    return Err(err(&format!("`{bad}` is not an element name")));
                }
                Pattern::ElementList(names)
            } else {
                let segments: Vec<String> = body.split('/').map(str::to_string).collect();
                let last = segments.len() - 1;
                for (i, s) in segments.iter().enumerate() {
                    let ok = match s.strip_prefix('@') {
                        Some(attr) => i == last && valid_name(attr),
                        None => valid_name(s),
                    };
                    if !ok {
                        return Err(err(&format!("invalid path segment `{s}`")));
                    }
                }
                Pattern::Path { absolute, segments }
            }
        }
    };
    Ok(Rule {
        text: text.to_string(),
        pattern,
        sub,
    })
}

impl ContainerSpec {
    /// Parses path expressions in priority order and appends the default
    /// `//#` rule unless the list already ends with it.
    pub fn parse<S: AsRef<str>>(rules: &[S]) -> Result<ContainerSpec, TransformError> {
        let mut parsed = rules
            .iter()
            .map(|r| parse_rule(r.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        if parsed.last() != Some(&default_rule()) {
            parsed.push(default_rule());
        }
        Ok(ContainerSpec { rules: parsed })
    }

    /// First matching rule and the container key it yields.
    pub fn route(&self, path: &[&str]) -> (usize, String) {
        for (i, rule) in self.rules.iter().enumerate() {
            if let Some(key) = rule.pattern.key(&rule.text, path) {
                return (i, key);
            }
        }
        unreachable!("the trailing //# rule matches every non-empty path")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub key: String,
    pub sub: SubCompressor,
    /// Concatenated value bytes, before the sub-compressor.
    pub data: Vec<u8>,
}

/// Output of [`xmill_split`]: the structure stream and the containers in
/// first-use order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmillParts {
    pub structure: Vec<u8>,
    pub containers: Vec<Container>,
}

struct Splitter<'s> {
    spec: &'s ContainerSpec,
    tags: Vec<String>,
    tag_ids: HashMap<String, usize>,
    attrs: Vec<String>,
    attr_ids: HashMap<String, usize>,
    containers: Vec<Container>,
    container_ids: HashMap<(usize, String), usize>,
    tokens: Vec<u8>,
}

fn intern(table: &mut Vec<String>, ids: &mut HashMap<String, usize>, name: &str) -> usize {
    if let Some(&id) = ids.get(name) {
        return id;
    }
    table.push(name.to_string());
    ids.insert(name.to_string(), table.len() - 1);
    table.len() - 1
}

impl Splitter<'_> {
    fn container(&mut self, path: &[&str]) -> usize {
        let (rule, key) = self.spec.route(path);
        let next = self.containers.len();
        let id = *self.container_ids.entry((rule, key.clone())).or_insert(next);
        if id == next {
            self.containers.push(Container {
                key,
                sub: self.spec.rules[rule].sub,
                data: Vec::new(),
            });
        }
        id
    }

    fn element<'a>(&mut self, node: &'a XmlNode, path: &mut Vec<&'a str>) -> Result<(), TransformError> {
        path.push(&node.name);
        let tag = intern(&mut self.tags, &mut self.tag_ids, &node.name);
        put_varint(&mut self.tokens, TOK_BEGIN + tag as u64);
        // registered up front so text-free elements still own a container
        let text_container = self.container(path);
        for (name, value) in &node.attributes {
            let attr_seg = format!("@{name}");
            let mut attr_path = path.clone();
            attr_path.push(&attr_seg);
            let c = self.container(&attr_path);
            let id = intern(&mut self.attrs, &mut self.attr_ids, name);
            put_varint(&mut self.tokens, TOK_ATTR);
            put_varint(&mut self.tokens, id as u64);
            put_varint(&mut self.tokens, c as u64);
            put_varint(&mut self.tokens, value.len() as u64);
            self.containers[c].data.extend_from_slice(value.as_bytes());
        }
        for child in &node.children {
            match child {
                XmlContent::Element(e) => self.element(e, path)?,
                XmlContent::Text(t) => {
                    put_varint(&mut self.tokens, TOK_TEXT);
                    put_varint(&mut self.tokens, text_container as u64);
                    put_varint(&mut self.tokens, t.len() as u64);
                    self.containers[text_container].data.extend_from_slice(t.as_bytes());
                }
                XmlContent::Comment(_) => return Err(TransformError::Comments),
            }
        }
        put_varint(&mut self.tokens, TOK_END);
        path.pop();
        Ok(())
    }
}

fn sub_code(s: SubCompressor) -> u8 {
    match s {
        SubCompressor::Plain => 0,
        SubCompressor::Rle => 1,
    }
}

/// Separates a comment-free document into a structure stream and containers.
pub fn xmill_split(doc: &XmlDocument, spec: &ContainerSpec) -> Result<XmillParts, TransformError> {
    let mut s = Splitter {
        spec,
        tags: Vec::new(),
        tag_ids: HashMap::new(),
        attrs: Vec::new(),
        attr_ids: HashMap::new(),
        containers: Vec::new(),
        container_ids: HashMap::new(),
        tokens: Vec::new(),
    };
    s.element(&doc.root, &mut Vec::new())?;
    let mut structure = Vec::with_capacity(s.tokens.len() + 64);
    put_opt_str(&mut structure, doc.declaration.as_deref());
    put_opt_str(&mut structure, doc.doctype.as_deref());
    for table in [&s.tags, &s.attrs] {
        put_varint(&mut structure, table.len() as u64);
        for name in table {
            put_str(&mut structure, name);
        }
    }
    put_varint(&mut structure, s.containers.len() as u64);
    for c in &s.containers {
        put_str(&mut structure, &c.key);
        structure.push(sub_code(c.sub));
    }
    structure.extend_from_slice(&s.tokens);
    Ok(XmillParts {
        structure,
        containers: s.containers,
    })
}

struct Header {
    declaration: Option<String>,
    doctype: Option<String>,
    tags: Vec<String>,
    attrs: Vec<String>,
    containers: Vec<(String, SubCompressor)>,
}

fn read_header(r: &mut Reader<'_>) -> Result<Header, TransformError> {
    let declaration = r.opt_string()?;
    let doctype = r.opt_string()?;
    let mut tables = [Vec::new(), Vec::new()];
    for table in tables.iter_mut() {
        let n = r.usize()?;
        for _ in 0..n {
            table.push(r.string()?);
        }
    }
    let [tags, attrs] = tables;
    let n = r.usize()?;
    let mut containers = Vec::new();
    for _ in 0..n {
        let key = r.string()?;
        let sub = match r.byte()? {
            0 => SubCompressor::Plain,
            1 => SubCompressor::Rle,
            b => return Err(corrupt(format!("unknown sub-compressor {b}"))),
        };
        containers.push((key, sub));
    }
    Ok(Header {
        declaration,
        doctype,
        tags,
        attrs,
        containers,
    })
}

/// Rebuilds the document from a structure stream and its containers.
pub fn xmill_join(parts: &XmillParts) -> Result<XmlDocument, TransformError> {
    let mut r = Reader::new(&parts.structure);
    let header = read_header(&mut r)?;
    if header.containers.len() != parts.containers.len() {
        return Err(corrupt(format!(
            "structure stream names {} containers, archive has {}",
            header.containers.len(),
            parts.containers.len()
        )));
    }
    let mut cursors = vec![0usize; parts.containers.len()];
    let mut take = |c: usize, len: usize| -> Result<String, TransformError> {
        let data = &parts
            .containers
            .get(c)
            .ok_or_else(|| corrupt(format!("container {c} does not exist")))?
            .data;
        let start = cursors[c];
        let end = start
            .checked_add(len)
            .filter(|&e| e <= data.len())
            .ok_or_else(|| corrupt(format!("container {c} overrun")))?;
        cursors[c] = end;
        String::from_utf8(data[start..end].to_vec()).map_err(|_| corrupt(format!("container {c} value is not UTF-8")))
    };
    let mut stack: Vec<XmlNode> = Vec::new();
    let root = loop {
        let tok = r.varint()?;
        match tok {
            TOK_END => {
                let node = stack.pop().ok_or_else(|| corrupt("end token outside any element"))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(XmlContent::Element(node)),
                    None => break node,
                }
            }
            TOK_TEXT => {
                let (c, len) = (r.usize()?, r.usize()?);
                let text = take(c, len)?;
                stack
                    .last_mut()
                    .ok_or_else(|| corrupt("text outside the root"))?
                    .children
                    .push(XmlContent::Text(text));
            }
            TOK_ATTR => {
                let (name, c, len) = (r.usize()?, r.usize()?, r.usize()?);
                let name = header
                    .attrs
                    .get(name)
                    .ok_or_else(|| corrupt(format!("attribute id {name} out of range")))?
                    .clone();
                let value = take(c, len)?;
                stack
                    .last_mut()
                    .ok_or_else(|| corrupt("attribute outside the root"))?
                    .attributes
                    .push((name, value));
            }
            t => {
                let tag = (t - TOK_BEGIN) as usize;
                let name = header
                    .tags
                    .get(tag)
                    .ok_or_else(|| corrupt(format!("tag id {tag} out of range")))?;
                stack.push(XmlNode::new(name.as_str()));
            }
        }
    };
    if !r.at_end() {
        return Err(corrupt("tokens after the root element"));
    }
    for (c, (cursor, container)) in cursors.iter().zip(&parts.containers).enumerate() {
        if *cursor != container.data.len() {
            return Err(corrupt(format!(
                "container {c} underrun: {} unread bytes",
                container.data.len() - cursor
            )));
        }
    }
    Ok(XmlDocument {
        declaration: header.declaration,
        doctype: header.doctype,
        root,
        source_bytes: 0,
    })
}

/// Splits the document and codes the structure stream and every container
/// independently with the backend.
pub fn xmill_compress(doc: &XmlDocument, spec: &ContainerSpec, backend: Backend) -> Result<Vec<u8>, TransformError> {
    let parts = xmill_split(doc, spec)?;
    let mut out = Vec::with_capacity(parts.containers.len() + 1);
    out.push(Part {
        data: parts.structure,
        plain: false,
    });
    for c in parts.containers {
        out.push(Part {
            data: match c.sub {
                SubCompressor::Plain => c.data,
                SubCompressor::Rle => rle::rle_encode(&c.data),
            },
            plain: false,
        });
    }
    write_archive(MAGIC, backend, &out)
}

pub fn xmill_decompress(bytes: &[u8], backend: Backend) -> Result<XmlDocument, TransformError> {
    let mut decoded = read_archive(MAGIC, backend, bytes, |_| false)?.into_iter();
    let structure = decoded.next().ok_or_else(|| corrupt("archive has no structure stream"))?;
    let header = read_header(&mut Reader::new(&structure))?;
    let payloads: Vec<Vec<u8>> = decoded.collect();
    if payloads.len() != header.containers.len() {
        return Err(corrupt(format!(
            "structure stream names {} containers, archive has {}",
            header.containers.len(),
            payloads.len()
        )));
    }
    let mut containers = Vec::with_capacity(payloads.len());
    for (i, ((key, sub), data)) in header.containers.into_iter().zip(payloads).enumerate() {
        let data = match sub {
            SubCompressor::Plain => data,
            SubCompressor::Rle => rle::rle_decode(&data).map_err(|e| TransformError::Backend {
                part: i + 1,
                source: Box::new(e),
            })?,
        };
        containers.push(Container { key, sub, data });
    }
    xmill_join(&XmillParts { structure, containers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xml::{parse_xml, SAMPLE_BOOK};

    const COLORS: &str = "<db><car><color>red</color></car><paint><color>blue</color></paint>\
        <fruit><color>green</color></fruit><color>plain</color></db>";

    fn doc(s: &str) -> XmlDocument {
        parse_xml(s.as_bytes()).unwrap()
    }

    fn keys(parts: &XmillParts) -> Vec<(String, String)> {
        parts
            .containers
            .iter()
            .filter(|c| !c.data.is_empty())
            .map(|c| (c.key.clone(), String::from_utf8(c.data.clone()).unwrap()))
            .collect()
    }

    #[test]
    fn default_rule_groups_by_last_name() {
        let parts = xmill_split(&doc(COLORS), &ContainerSpec::default()).unwrap();
        assert_eq!(keys(&parts), [("color".to_string(), "redbluegreenplain".to_string())]);
    }

    #[test]
    fn explicit_path_gets_its_own_container() {
        let spec = ContainerSpec::parse(&["/db/car/color", "//#"]).unwrap();
        assert_eq!(spec.rules.len(), 2);
        let parts = xmill_split(&doc(COLORS), &spec).unwrap();
        assert_eq!(
            keys(&parts),
            [
                ("/db/car/color".to_string(), "red".to_string()),
                ("color".to_string(), "bluegreenplain".to_string())
            ]
        );
        // suffix form from the command-line examples
        let spec = ContainerSpec::parse(&["//car/color"]).unwrap();
        assert_eq!(keys(&xmill_split(&doc(COLORS), &spec).unwrap())[0].1, "red");
    }

    #[test]
    fn per_path_and_all_in_one() {
        let d = doc(r#"<db><car><color>red</color></car><paint k="v"><color>blue</color></paint><fruit><color>green</color></fruit></db>"#);
        let per_path = xmill_split(&d, &ContainerSpec::parse(&["(#)+"]).unwrap()).unwrap();
        let k: Vec<String> = keys(&per_path).into_iter().map(|(k, _)| k).collect();
        assert_eq!(k, ["/db/car/color", "/db/paint/@k", "/db/paint/color", "/db/fruit/color"]);
        let all = xmill_split(&d, &ContainerSpec::parse(&["/(*)"]).unwrap()).unwrap();
        assert_eq!(all.containers.len(), 1);
        assert_eq!(all.containers[0].data, b"redvbluegreen");
    }

    #[test]
    fn element_list_and_attributes() {
        let d = doc(r#"<a x="1"><b>p</b><c>q</c><d>r</d></a>"#);
        let spec = ContainerSpec::parse(&["/(b|c)"]).unwrap();
        let parts = xmill_split(&d, &spec).unwrap();
        assert_eq!(
            keys(&parts),
            [
                ("a@x".to_string(), "1".to_string()),
                ("/(b|c)".to_string(), "pq".to_string()),
                ("d".to_string(), "r".to_string())
            ]
        );
        let spaced = ContainerSpec::parse(&["/(b c)=>r1"]).unwrap();
        assert_eq!(spaced.rules[0].pattern, Pattern::ElementList(vec!["b".into(), "c".into()]));
        assert_eq!(spaced.rules[0].sub, SubCompressor::Rle);
    }

    #[test]
    fn rule_parse_errors() {
        for bad in ["", "db/car", "/a/(b", "/(|)", "/a//b", "/a/b=>zz", "/1a", "/@x/b"] {
            assert!(ContainerSpec::parse(&[bad]).is_err(), "{bad:?}");
        }
        assert_eq!(ContainerSpec::parse(&["//#"]).unwrap().rules.len(), 1);
        assert_eq!(ContainerSpec::parse::<&str>(&[]).unwrap(), ContainerSpec::default());
    }

    #[test]
    fn sample_roundtrip() {
        let d = parse_xml(SAMPLE_BOOK.as_bytes()).unwrap().strip_comments();
        for rules in [vec![], vec!["(#)+"], vec!["/(*)=>r1"], vec!["/Book/Title", "/(Par|Title)"]] {
            let spec = ContainerSpec::parse(&rules).unwrap();
            let parts = xmill_split(&d, &spec).unwrap();
            let total: usize = parts.containers.iter().map(|c| c.data.len()).sum();
            assert_eq!(total, d.value_bytes());
            assert!(xmill_join(&parts).unwrap().same_tree(&d));
            for backend in [Backend::Ari, Backend::Bwt, Backend::Store] {
                let bytes = xmill_compress(&d, &spec, backend).unwrap();
                assert!(xmill_decompress(&bytes, backend).unwrap().same_tree(&d));
            }
        }
    }

    #[test]
    fn comments_are_rejected() {
        let d = parse_xml(SAMPLE_BOOK.as_bytes()).unwrap();
        assert!(matches!(xmill_split(&d, &ContainerSpec::default()), Err(TransformError::Comments)));
    }

    #[test]
    fn empty_and_single_element() {
        let d = doc("<a><b/><c/></a>");
        let parts = xmill_split(&d, &ContainerSpec::default()).unwrap();
        assert!(parts.containers.iter().all(|c| c.data.is_empty()));
        assert!(xmill_join(&parts).unwrap().same_tree(&d));
        let single = xmill_split(&doc("<a>hello</a>"), &ContainerSpec::default()).unwrap();
        assert_eq!(single.containers.len(), 1);
    }

    #[test]
    fn container_faults() {
        let d = doc("<a><b>xy</b><b>z</b></a>");
        let mut parts = xmill_split(&d, &ContainerSpec::default()).unwrap();
        let b = parts.containers.iter().position(|c| c.key == "b").unwrap();
        parts.containers[b].data.push(b'!');
        assert!(matches!(xmill_join(&parts), Err(TransformError::Corrupt(m)) if m.contains("underrun")));
        parts.containers[b].data.truncate(2);
        assert!(matches!(xmill_join(&parts), Err(TransformError::Corrupt(m)) if m.contains("overrun")));
    }
}
