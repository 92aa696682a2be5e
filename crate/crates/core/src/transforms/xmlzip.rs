//! Subtree splitter. Every element at the split depth (the root is depth 1)
//! keeps its tag and attributes in the encoded tree while its content moves
//! to a fragment, leaving a single `<xmlzip id="n"/>` placeholder. Ids run
//! 1..k in document order.
//!
//! Archive parts: 0 is the encoded tree and 1 the mapping (both stored
//! plain), then fragment 1..k backend-coded. The mapping is text: a
//! `depth d` line followed by one `id element-name` line per fragment.

use std::collections::BTreeMap;

use super::{corrupt, read_archive, write_archive, Part, TransformError};
use crate::codec::Backend;
use crate::xml::{parse_fragment, parse_xml, serialize, serialize_children, XmlContent, XmlDocument, XmlNode};

const MAGIC: &[u8; 4] = b"XZIP";
const PLACEHOLDER: &str = "xmlzip";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlzipParts {
    pub depth: usize,
    /// Serialized document with placeholders.
    pub encoded_tree: String,
    /// Fragment id and the name of the element it came from.
    pub mapping: Vec<(usize, String)>,
    /// Fragment id and its canonical serialization.
    pub fragments: Vec<(usize, String)>,
}

impl XmlzipParts {
    pub fn mapping_text(&self) -> String {
        let mut out = format!("depth {}\n", self.depth);
        for (id, name) in &self.mapping {
            out.push_str(&format!("{id} {name}\n"));
        }
        out
    }

    fn parse_mapping(text: &str) -> Result<(usize, Vec<(usize, String)>), TransformError> {
        let mut lines = text.lines();
        let depth = lines
            .next()
            .and_then(|l| l.strip_prefix("depth "))
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| corrupt("mapping lacks its depth line"))?;
        let mut mapping = Vec::new();
        for line in lines {
            let (id, name) = line
                .split_once(' ')
                .ok_or_else(|| corrupt(format!("bad mapping line `{line}`")))?;
            let id = id.parse().map_err(|_| corrupt(format!("bad fragment id `{id}`")))?;
            mapping.push((id, name.to_string()));
        }
        Ok((depth, mapping))
    }
}

/// Number of fragments a split at `depth` produces: the elements at that depth.
pub fn fragment_count(doc: &XmlDocument, depth: usize) -> usize {
    fn count(node: &XmlNode, level: usize, depth: usize) -> usize {
        if level == depth {
            return 1;
        }
        node.element_children().map(|c| count(c, level + 1, depth)).sum()
    }
    count(&doc.root, 1, depth)
}

fn split_node(node: &mut XmlNode, level: usize, depth: usize, parts: &mut XmlzipParts) {
    if level == depth {
        let id = parts.fragments.len() + 1;
        let mut fragment = String::new();
        serialize_children(&node.children, &mut fragment);
        node.children = vec![XmlContent::Element(
            XmlNode::new(PLACEHOLDER).with_attr("id", id.to_string()),
        )];
        parts.mapping.push((id, node.name.clone()));
        parts.fragments.push((id, fragment));
        return;
    }
    for child in node.children.iter_mut() {
        if let XmlContent::Element(e) = child {
            split_node(e, level + 1, depth, parts);
        }
    }
}

/// Replaces the content of every element at `depth` with a placeholder.
pub fn xmlzip_split(doc: &XmlDocument, depth: usize) -> Result<XmlzipParts, TransformError> {
    if depth < 1 {
        return Err(TransformError::Param("split depth must be at least 1".into()));
    }
    if doc.has_comments() {
        return Err(TransformError::Comments);
    }
    let mut parts = XmlzipParts {
        depth,
        encoded_tree: String::new(),
        mapping: Vec::new(),
        fragments: Vec::new(),
    };
    let mut encoded = doc.clone();
    split_node(&mut encoded.root, 1, depth, &mut parts);
    parts.encoded_tree = serialize(&encoded);
    Ok(parts)
}

struct Joiner<'a> {
    depth: usize,
    names: BTreeMap<usize, &'a str>,
    fragments: BTreeMap<usize, &'a str>,
    next_id: usize,
}

impl Joiner<'_> {
    fn node(&mut self, node: &mut XmlNode, level: usize) -> Result<(), TransformError> {
        if level == self.depth {
            let id = match node.children.as_slice() {
                [XmlContent::Element(p)] if p.name == PLACEHOLDER && p.attributes.len() == 1 => p
                    .attr("id")
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| corrupt(format!("placeholder in <{}> has no valid id", node.name)))?,
                _ => return Err(corrupt(format!("<{}> at the split depth has no placeholder", node.name))),
            };
            if id != self.next_id {
                return Err(corrupt(format!("placeholder id {id} out of order, expected {}", self.next_id)));
            }
            self.next_id += 1;
            let fragment = self
                .fragments
                .remove(&id)
                .ok_or_else(|| corrupt(format!("missing fragment {id}")))?;
            if let Some(name) = self.names.get(&id) {
                if *name != node.name {
                    return Err(corrupt(format!("fragment {id} belongs to <{name}>, found <{}>", node.name)));
                }
            }
            node.children = parse_fragment(fragment)?;
            return Ok(());
        }
        for child in node.children.iter_mut() {
            if let XmlContent::Element(e) = child {
                self.node(e, level + 1)?;
            }
        }
        Ok(())
    }
}

/// Substitutes every placeholder with its fragment.
pub fn xmlzip_join(parts: &XmlzipParts) -> Result<XmlDocument, TransformError> {
    let mut doc = parse_xml(parts.encoded_tree.as_bytes())?;
    let mut fragments = BTreeMap::new();
    for (id, text) in &parts.fragments {
        if fragments.insert(*id, text.as_str()).is_some() {
            return Err(corrupt(format!("duplicate fragment {id}")));
        }
    }
    let mut joiner = Joiner {
        depth: parts.depth,
        names: parts.mapping.iter().map(|(id, n)| (*id, n.as_str())).collect(),
        fragments,
        next_id: 1,
    };
    joiner.node(&mut doc.root, 1)?;
    if let Some(id) = joiner.fragments.keys().next() {
        return Err(corrupt(format!("fragment {id} is never referenced")));
    }
    doc.source_bytes = 0;
    Ok(doc)
}

pub fn xmlzip_compress(doc: &XmlDocument, depth: usize, backend: Backend) -> Result<Vec<u8>, TransformError> {
    let parts = xmlzip_split(doc, depth)?;
    let mut out = vec![
        Part {
            data: parts.encoded_tree.clone().into_bytes(),
            plain: true,
        },
        Part {
            data: parts.mapping_text().into_bytes(),
            plain: true,
        },
    ];
    out.extend(parts.fragments.into_iter().map(|(_, f)| Part {
        data: f.into_bytes(),
        plain: false,
    }));
    write_archive(MAGIC, backend, &out)
}

pub fn xmlzip_decompress(bytes: &[u8], backend: Backend) -> Result<XmlDocument, TransformError> {
    let decoded = read_archive(MAGIC, backend, bytes, |i| i < 2)?;
    if decoded.len() < 2 {
        return Err(corrupt("archive lacks the encoded tree or mapping"));
    }
    let text = |i: usize| String::from_utf8(decoded[i].clone()).map_err(|_| corrupt(format!("part {i} is not UTF-8")));
    let encoded_tree = text(0)?;
    let (depth, mapping) = XmlzipParts::parse_mapping(&text(1)?)?;
    let mut fragments = Vec::with_capacity(mapping.len());
    for (i, (id, _)) in mapping.iter().enumerate() {
        if i + 2 < decoded.len() {
            fragments.push((*id, text(i + 2)?));
        }
    }
    if decoded.len() > mapping.len() + 2 {
        return Err(corrupt("archive holds fragments missing from the mapping"));
    }
    xmlzip_join(&XmlzipParts {
        depth,
        encoded_tree,
        mapping,
        fragments,
    })
}
