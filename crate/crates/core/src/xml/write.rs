use super::{XmlContent, XmlDocument, XmlNode};

pub fn escape_text(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
}

pub fn escape_attr(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
}

/// Canonical serialization: no added whitespace inside the root, attributes
/// double-quoted, childless elements written as `<a/>`.
pub fn serialize(doc: &XmlDocument) -> String {
    let mut out = String::new();
    if let Some(decl) = &doc.declaration {
        out.push_str("<?xml ");
        out.push_str(decl);
        out.push_str("?>\n");
    }
    if let Some(dt) = &doc.doctype {
        out.push_str("<!DOCTYPE ");
        out.push_str(dt);
        out.push_str(">\n");
    }
    serialize_node(&doc.root, &mut out);
    out
}

pub fn serialize_node(node: &XmlNode, out: &mut String) {
    out.push('<');
    out.push_str(&node.name);
    for (k, v) in &node.attributes {
        out.push(' ');
        out.push_str(k);
        out.push_str("=\"");
        escape_attr(v, out);
        out.push('"');
    }
    if node.children.is_empty() {
        out.push_str("/>");
        return;
    }
    out.push('>');
    serialize_children(&node.children, out);
    out.push_str("</");
    out.push_str(&node.name);
    out.push('>');
}

pub(crate) fn serialize_children(children: &[XmlContent], out: &mut String) {
    for child in children {
        match child {
            XmlContent::Element(e) => serialize_node(e, out),
            XmlContent::Text(t) => escape_text(t, out),
            XmlContent::Comment(c) => {
                out.push_str("<!--");
                out.push_str(c);
                out.push_str("-->");
            }
        }
    }
}

/// Beautification step of corpus preprocessing: one tag per line, two-space
/// indentation for element-only content, blank lines removed. Elements that
/// carry non-whitespace character data are left untouched.
pub fn tidy(doc: &XmlDocument) -> XmlDocument {
    fn go(node: &XmlNode, level: usize) -> XmlNode {
        let has_text = node
            .children
            .iter()
            .any(|c| matches!(c, XmlContent::Text(t) if !t.trim().is_empty()));
        if has_text {
            return node.clone();
        }
        let kids: Vec<&XmlContent> = node
            .children
            .iter()
            .filter(|c| !matches!(c, XmlContent::Text(_)))
            .collect();
        let mut children = Vec::with_capacity(kids.len() * 2 + 1);
        for kid in &kids {
            children.push(XmlContent::Text(format!("\n{}", "  ".repeat(level + 1))));
            children.push(match kid {
                XmlContent::Element(e) => XmlContent::Element(go(e, level + 1)),
                other => (*other).clone(),
            });
        }
        if !kids.is_empty() {
            children.push(XmlContent::Text(format!("\n{}", "  ".repeat(level))));
        }
        XmlNode {
            name: node.name.clone(),
            attributes: node.attributes.clone(),
            children,
        }
    }
    XmlDocument {
        declaration: doc.declaration.clone(),
        doctype: doc.doctype.clone(),
        root: go(&doc.root, 0),
        source_bytes: doc.source_bytes,
    }
}
