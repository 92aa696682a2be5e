use std::collections::HashMap;

use thiserror::Error;

use super::{XmlContent, XmlDocument, XmlNode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DtdError {
    #[error("cannot parse DTD line {line}: {text}")]
    Parse { line: usize, text: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Default)]
struct ElementStats {
    children: Vec<String>,
    text: bool,
    any_content: bool,
    attributes: Vec<String>,
}

/// Infers a DTD from the observed tree.
///
/// Element content models are the alternation-star of the observed child
/// names, `(#PCDATA)` when only character data was seen, a mixed model when
/// both were seen and `EMPTY` when no instance had any content. Every
/// attribute is declared `CDATA #IMPLIED`. Declarations are emitted in
/// first-seen (pre-order) order.
pub fn infer_dtd(doc: &XmlDocument) -> String {
    let mut order: Vec<&str> = Vec::new();
    let mut stats: HashMap<&str, ElementStats> = HashMap::new();
    doc.root.walk(&mut |node: &XmlNode, _| {
        let entry = stats.entry(node.name.as_str()).or_insert_with(|| {
            order.push(node.name.as_str());
            ElementStats::default()
        });
        if !node.children.is_empty() {
            entry.any_content = true;
        }
        for child in &node.children {
            match child {
                XmlContent::Element(e) => {
                    if !entry.children.iter().any(|c| c == &e.name) {
                        entry.children.push(e.name.clone());
                    }
                }
                XmlContent::Text(t) => {
                    if !t.trim().is_empty() {
                        entry.text = true;
                    }
                }
                XmlContent::Comment(_) => {}
            }
        }
        for (attr, _) in &node.attributes {
            if !entry.attributes.contains(attr) {
                entry.attributes.push(attr.clone());
            }
        }
    });

    let mut out = String::new();
    for name in order {
        let s = &stats[name];
        let model = match (s.children.is_empty(), s.text, s.any_content) {
            (true, _, false) => "EMPTY".to_string(),
            (true, _, true) => "(#PCDATA)".to_string(),
            (false, false, _) => format!("({})*", s.children.join("|")),
            (false, true, _) => format!("(#PCDATA|{})*", s.children.join("|")),
        };
        out.push_str(&format!("<!ELEMENT {name} {model}>\n"));
        for attr in &s.attributes {
            out.push_str(&format!("<!ATTLIST {name} {attr} CDATA #IMPLIED>\n"));
        }
    }
    out
}

#[derive(Debug)]
enum Model {
    Empty,
    Any,
    Pcdata,
    Mixed(Vec<String>),
    Children(Vec<String>),
}

struct ParsedDtd {
    elements: HashMap<String, Model>,
    attributes: HashMap<String, Vec<String>>,
}

fn parse_dtd(text: &str) -> Result<ParsedDtd, DtdError> {
    let mut elements = HashMap::new();
    let mut attributes: HashMap<String, Vec<String>> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || DtdError::Parse {
            line: i + 1,
            text: raw.to_string(),
        };
        let body = line.strip_suffix('>').ok_or_else(bad)?;
        if let Some(rest) = body.strip_prefix("<!ELEMENT ") {
            let (name, model) = rest.trim().split_once(' ').ok_or_else(bad)?;
            let model = model.trim();
            let parsed = match model {
                "EMPTY" => Model::Empty,
                "ANY" => Model::Any,
                "(#PCDATA)" | "(#PCDATA)*" => Model::Pcdata,
                _ => {
                    let inner = model
                        .strip_prefix('(')
                        .and_then(|m| m.strip_suffix(")*"))
                        .ok_or_else(bad)?;
                    let mut names: Vec<String> = inner.split('|').map(|s| s.trim().to_string()).collect();
                    if names.first().map(String::as_str) == Some("#PCDATA") {
                        names.remove(0);
                        Model::Mixed(names)
                    } else {
                        Model::Children(names)
                    }
                }
            };
            elements.insert(name.to_string(), parsed);
        } else if let Some(rest) = body.strip_prefix("<!ATTLIST ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 4 || parts[2] != "CDATA" || parts[3] != "#IMPLIED" {
                return Err(bad());
            }
            attributes
                .entry(parts[0].to_string())
                .or_default()
                .push(parts[1].to_string());
        } else {
            return Err(bad());
        }
    }
    Ok(ParsedDtd {
        elements,
        attributes,
    })
}

/// Validates a document against a DTD in the subset produced by
/// [`infer_dtd`] (alternation-star, mixed, `#PCDATA`, `EMPTY`, `ANY`
/// content models and `CDATA #IMPLIED` attributes).
pub fn validate_against_dtd(doc: &XmlDocument, dtd: &str) -> Result<(), DtdError> {
    let parsed = parse_dtd(dtd)?;
    let mut result = Ok(());
    doc.root.walk(&mut |node, path| {
        if result.is_err() {
            return;
        }
        result = check_node(&parsed, node, path);
    });
    result
}

fn check_node(dtd: &ParsedDtd, node: &XmlNode, path: &str) -> Result<(), DtdError> {
    let invalid = |message: String| DtdError::Invalid {
        path: path.to_string(),
        message,
    };
    let model = dtd
        .elements
        .get(&node.name)
        .ok_or_else(|| invalid(format!("element <{}> not declared", node.name)))?;
    let declared_attrs = dtd.attributes.get(&node.name);
    for (attr, _) in &node.attributes {
        if !declared_attrs.is_some_and(|a| a.contains(attr)) {
            return Err(invalid(format!("attribute `{attr}` not declared")));
        }
    }
    for child in &node.children {
        match (model, child) {
            (Model::Any, _) => {}
            (Model::Empty, _) => return Err(invalid("EMPTY element has content".into())),
            (_, XmlContent::Comment(_)) => {}
            (Model::Pcdata, XmlContent::Text(_)) | (Model::Mixed(_), XmlContent::Text(_)) => {}
            (Model::Pcdata, XmlContent::Element(e)) => {
                return Err(invalid(format!("child <{}> not allowed in #PCDATA", e.name)))
            }
            (Model::Mixed(names), XmlContent::Element(e))
            | (Model::Children(names), XmlContent::Element(e)) => {
                if !names.contains(&e.name) {
                    return Err(invalid(format!("child <{}> not in content model", e.name)));
                }
            }
            (Model::Children(_), XmlContent::Text(t)) => {
                if !t.trim().is_empty() {
                    return Err(invalid("character data in element-only content".into()));
                }
            }
        }
    }
    Ok(())
}
