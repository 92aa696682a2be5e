//! XML document model, the subset parser, canonical serialization, DTD
//! inference and corpus-file profiling.
//!
//! The supported subset is what the corpus preprocessing pipeline leaves
//! behind: UTF-8 input, an optional `<?xml ...?>` declaration, an optional
//! external `<!DOCTYPE>`, elements, attributes, character data and comments.
//! Only the five predefined entities and numeric character references are
//! decoded. Processing instructions, CDATA sections and internal DTD subsets
//! are rejected.

mod dtd;
pub mod gen;
mod parse;
mod profile;
mod write;

use std::collections::BTreeSet;

pub use dtd::{infer_dtd, validate_against_dtd, DtdError};
pub use parse::{parse_xml, XmlError};
pub use profile::{compute_profile, count_lines, Domain, FileProfile};
pub use write::{escape_attr, escape_text, serialize, serialize_node, tidy};
pub(crate) use parse::parse_fragment;
pub(crate) use write::serialize_children;

/// A parsed document with exactly one root element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlDocument {
    /// Raw content of the `<?xml ... ?>` declaration, without the delimiters.
    pub declaration: Option<String>,
    /// Raw content of an external `<!DOCTYPE ...>` line, without the delimiters.
    pub doctype: Option<String>,
    pub root: XmlNode,
    /// Length of the source the document was parsed from (0 for synthesized
    /// documents). Not part of structural equality.
    pub source_bytes: usize,
}

impl XmlDocument {
    pub fn new(root: XmlNode) -> Self {
        Self {
            declaration: None,
            doctype: None,
            root,
            source_bytes: 0,
        }
    }

    /// Structural equality: declaration, doctype and tree, ignoring `source_bytes`.
    pub fn same_tree(&self, other: &XmlDocument) -> bool {
        self.declaration == other.declaration
            && self.doctype == other.doctype
            && self.root == other.root
    }

    /// Maximum element nesting; the root alone has depth 1.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Distinct element names in the tree.
    pub fn element_names(&self) -> BTreeSet<&str> {
        let mut names = BTreeSet::new();
        self.root.walk(&mut |node, _| {
            names.insert(node.name.as_str());
        });
        names
    }

    pub fn has_comments(&self) -> bool {
        fn any_comment(node: &XmlNode) -> bool {
            node.children.iter().any(|c| match c {
                XmlContent::Comment(_) => true,
                XmlContent::Element(e) => any_comment(e),
                XmlContent::Text(_) => false,
            })
        }
        any_comment(&self.root)
    }

    /// Returns the document with every comment removed. Text nodes that
    /// become adjacent are merged so the result reparses to the same tree.
    pub fn strip_comments(&self) -> XmlDocument {
        XmlDocument {
            declaration: self.declaration.clone(),
            doctype: self.doctype.clone(),
            root: self.root.without_comments(),
            source_bytes: self.source_bytes,
        }
    }

    /// Total bytes of character data plus attribute values.
    pub fn value_bytes(&self) -> usize {
        let mut total = 0;
        self.root.walk(&mut |node, _| {
            total += node.attributes.iter().map(|(_, v)| v.len()).sum::<usize>();
            total += node
                .children
                .iter()
                .map(|c| match c {
                    XmlContent::Text(t) => t.len(),
                    _ => 0,
                })
                .sum::<usize>();
        });
        total
    }
}

/// Free function form of [`XmlDocument::strip_comments`].
pub fn strip_comments(doc: &XmlDocument) -> XmlDocument {
    doc.strip_comments()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlNode {
    pub name: String,
    /// Attributes in document order; names are unique within a node.
    pub attributes: Vec<(String, String)>,
    pub children: Vec<XmlContent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XmlContent {
    Element(XmlNode),
    Text(String),
    Comment(String),
}

impl XmlNode {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            attributes: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.push((name.into(), value.into()));
        self
    }

    pub fn with_child(mut self, child: XmlNode) -> Self {
        self.children.push(XmlContent::Element(child));
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.children.push(XmlContent::Text(text.into()));
        self
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn element_children(&self) -> impl Iterator<Item = &XmlNode> {
        self.children.iter().filter_map(|c| match c {
            XmlContent::Element(e) => Some(e),
            _ => None,
        })
    }

    pub fn depth(&self) -> usize {
        1 + self.element_children().map(XmlNode::depth).max().unwrap_or(0)
    }

    /// Pre-order walk; the callback receives each element with its path
    /// (`/Book/Chapter`).
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a XmlNode, &str)) {
        fn go<'a>(node: &'a XmlNode, path: &mut String, f: &mut impl FnMut(&'a XmlNode, &str)) {
            let len = path.len();
            path.push('/');
            path.push_str(&node.name);
            f(node, path);
            for child in node.element_children() {
                go(child, path, f);
            }
            path.truncate(len);
        }
        let mut path = String::new();
        go(self, &mut path, f);
    }

    fn without_comments(&self) -> XmlNode {
        let mut children: Vec<XmlContent> = Vec::with_capacity(self.children.len());
        for child in &self.children {
            match child {
                XmlContent::Comment(_) => {}
                XmlContent::Element(e) => children.push(XmlContent::Element(e.without_comments())),
                XmlContent::Text(t) => {
                    if let Some(XmlContent::Text(prev)) = children.last_mut() {
                        prev.push_str(t);
                    } else {
                        children.push(XmlContent::Text(t.clone()));
                    }
                }
            }
        }
        XmlNode {
            name: self.name.clone(),
            attributes: self.attributes.clone(),
            children,
        }
    }
}

/// Text of the sample document used throughout the tests and
/// examples: a book with a title, an attributed info element, two comments
/// and two chapters.
pub const SAMPLE_BOOK: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<Book><Title>Bestseller</Title>
<Info author="B. A. Writer"></Info>
<!-- Write early, write often -->
<Chapter><Title>Plot begins</Title>
<Par>...dark and stormy...</Par>
</Chapter>
<!-- ... -->
<Chapter><Title>Plot ends</Title>
<Par>...antagonist destroyed!</Par>
</Chapter>
</Book>
"#;
