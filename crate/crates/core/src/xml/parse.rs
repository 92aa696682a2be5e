use thiserror::Error;

use super::{XmlContent, XmlDocument, XmlNode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum XmlError {
    #[error("invalid UTF-8 at byte {offset}")]
    Utf8 { offset: usize },
    #[error("malformed XML at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("unsupported construct at byte {offset}: {construct}")]
    Unsupported { offset: usize, construct: &'static str },
    #[error("document structure error: {0}")]
    Structure(String),
}

/// Parses a document in the supported subset.
pub fn parse_xml(raw: &[u8]) -> Result<XmlDocument, XmlError> {
    let text = std::str::from_utf8(raw).map_err(|e| XmlError::Utf8 {
        offset: e.valid_up_to(),
    })?;
    let mut parser = Parser { src: text, pos: 0 };
    let mut doc = parser.document()?;
    doc.source_bytes = raw.len();
    Ok(doc)
}

/// Parses a sequence of sibling nodes (used for XML-ZIP fragments).
pub(crate) fn parse_fragment(text: &str) -> Result<Vec<XmlContent>, XmlError> {
    let mut parser = Parser { src: text, pos: 0 };
    let children = parser.content(None)?;
    if parser.pos != text.len() {
        return Err(parser.err("unexpected closing tag in fragment"));
    }
    Ok(children)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn is_name_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b':' || b >= 0x80
}

fn is_name_char(b: u8) -> bool {
    is_name_start(b) || b.is_ascii_digit() || b == b'-' || b == b'.'
}

impl<'a> Parser<'a> {
    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes().get(self.pos).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn err(&self, message: impl Into<String>) -> XmlError {
        XmlError::Malformed {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), XmlError> {
        if self.starts_with(s) {
            self.pos += s.len();
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn find(&self, pat: &str) -> Result<usize, XmlError> {
        self.src[self.pos..]
            .find(pat)
            .map(|i| self.pos + i)
            .ok_or_else(|| self.err(format!("unterminated construct, missing `{pat}`")))
    }

    fn document(&mut self) -> Result<XmlDocument, XmlError> {
        if self.src.starts_with('\u{feff}') {
            self.pos = 3;
        }
        let mut declaration = None;
        if self.starts_with("<?xml") && matches!(self.bytes().get(self.pos + 5), Some(b' ' | b'\t' | b'\r' | b'\n' | b'?')) {
            let end = self.find("?>")?;
            declaration = Some(self.src[self.pos + 5..end].trim().to_string());
            self.pos = end + 2;
        }
        let mut doctype = None;
        let mut root: Option<XmlNode> = None;
        loop {
            self.skip_ws();
            if self.pos >= self.src.len() {
                break;
            }
            if self.starts_with("<!DOCTYPE") {
                if root.is_some() || doctype.is_some() {
                    return Err(self.err("DOCTYPE must precede the root element"));
                }
                let end = self.find(">")?;
                let body = &self.src[self.pos + 9..end];
                if body.contains('[') {
                    return Err(XmlError::Unsupported {
                        offset: self.pos,
                        construct: "internal DTD subset",
                    });
                }
                doctype = Some(body.trim().to_string());
                self.pos = end + 1;
            } else if self.starts_with("<!--") {
                return Err(XmlError::Structure(format!(
                    "comment outside the root element at byte {}",
                    self.pos
                )));
            } else if self.starts_with("<?") {
                return Err(XmlError::Unsupported {
                    offset: self.pos,
                    construct: "processing instruction",
                });
            } else if self.peek() == Some(b'<') {
                if root.is_some() {
                    return Err(XmlError::Structure(format!(
                        "multiple root elements (second root at byte {})",
                        self.pos
                    )));
                }
                root = Some(self.element()?);
            } else {
                return Err(self.err("character data outside the root element"));
            }
        }
        let root = root.ok_or_else(|| XmlError::Structure("no root element".into()))?;
        Ok(XmlDocument {
            declaration,
            doctype,
            root,
            source_bytes: 0,
        })
    }

    fn name(&mut self) -> Result<&'a str, XmlError> {
        let start = self.pos;
        match self.peek() {
            Some(b) if is_name_start(b) => self.pos += 1,
            _ => return Err(self.err("expected a name")),
        }
        while matches!(self.peek(), Some(b) if is_name_char(b)) {
            self.pos += 1;
        }
        Ok(&self.src[start..self.pos])
    }

    fn element(&mut self) -> Result<XmlNode, XmlError> {
        self.expect("<")?;
        let name = self.name()?.to_string();
        let mut node = XmlNode::new(name);
        loop {
            let before = self.pos;
            self.skip_ws();
            match self.peek() {
                Some(b'/') => {
                    self.expect("/>")?;
                    return Ok(node);
                }
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => {
                    if before == self.pos {
                        return Err(self.err("expected whitespace before attribute"));
                    }
                    let attr_at = self.pos;
                    let attr = self.name()?.to_string();
                    self.skip_ws();
                    self.expect("=")?;
                    self.skip_ws();
                    let quote = match self.peek() {
                        Some(q @ (b'"' | b'\'')) => q,
                        _ => return Err(self.err("expected quoted attribute value")),
                    };
                    self.pos += 1;
                    let end = self.src[self.pos..]
                        .find(quote as char)
                        .map(|i| self.pos + i)
                        .ok_or_else(|| self.err("unterminated attribute value"))?;
                    let raw = &self.src[self.pos..end];
                    if raw.contains('<') {
                        return Err(self.err("`<` in attribute value"));
                    }
                    let value = decode_entities(raw, self.pos)?;
                    self.pos = end + 1;
                    if node.attr(&attr).is_some() {
                        return Err(XmlError::Malformed {
                            offset: attr_at,
                            message: format!("duplicate attribute `{attr}`"),
                        });
                    }
                    node.attributes.push((attr, value));
                }
                None => return Err(self.err("unexpected end of input in start tag")),
            }
        }
        node.children = self.content(Some(&node.name))?;
        Ok(node)
    }

    /// Parses content up to the matching end tag (consumed) or, for
    /// fragments, up to the end of input.
    fn content(&mut self, parent: Option<&str>) -> Result<Vec<XmlContent>, XmlError> {
        let mut children = Vec::new();
        loop {
            if self.pos >= self.src.len() {
                return match parent {
                    None => Ok(children),
                    Some(p) => Err(self.err(format!("unexpected end of input inside <{p}>"))),
                };
            }
            if self.starts_with("</") {
                let Some(p) = parent else {
                    return Ok(children);
                };
                self.pos += 2;
                let at = self.pos;
                let name = self.name()?;
                if name != p {
                    return Err(XmlError::Malformed {
                        offset: at,
                        message: format!("mismatched end tag: expected </{p}>, found </{name}>"),
                    });
                }
                self.skip_ws();
                self.expect(">")?;
                return Ok(children);
            } else if self.starts_with("<!--") {
                let end = self.find("-->")?;
                let body = &self.src[self.pos + 4..end];
                children.push(XmlContent::Comment(body.to_string()));
                self.pos = end + 3;
            } else if self.starts_with("<![CDATA[") {
                return Err(XmlError::Unsupported {
                    offset: self.pos,
                    construct: "CDATA section",
                });
            } else if self.starts_with("<?") {
                return Err(XmlError::Unsupported {
                    offset: self.pos,
                    construct: "processing instruction",
                });
            } else if self.starts_with("<!") {
                return Err(self.err("markup declaration inside element content"));
            } else if self.peek() == Some(b'<') {
                children.push(XmlContent::Element(self.element()?));
            } else {
                let start = self.pos;
                let end = self.src[start..].find('<').map_or(self.src.len(), |i| start + i);
                let text = decode_entities(&self.src[start..end], start)?;
                self.pos = end;
                children.push(XmlContent::Text(text));
            }
        }
    }
}

fn decode_entities(raw: &str, base: usize) -> Result<String, XmlError> {
    if !raw.contains('&') {
        return Ok(raw.to_string());
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    let mut offset = base;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        let after = &rest[i + 1..];
        let semi = after.find(';').ok_or(XmlError::Malformed {
            offset: offset + i,
            message: "unterminated entity reference".into(),
        })?;
        let entity = &after[..semi];
        let decoded = match entity {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ => {
                let code = if let Some(hex) = entity.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse::<u32>().ok()
                } else {
                    return Err(XmlError::Unsupported {
                        offset: offset + i,
                        construct: "entity other than the predefined five",
                    });
                };
                code.and_then(char::from_u32).ok_or(XmlError::Malformed {
                    offset: offset + i,
                    message: format!("invalid character reference `&{entity};`"),
                })?
            }
        };
        out.push(decoded);
        let consumed = i + 1 + semi + 1;
        rest = &rest[consumed..];
        offset += consumed;
    }
    out.push_str(rest);
    Ok(out)
}
