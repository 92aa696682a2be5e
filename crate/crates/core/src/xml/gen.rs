//! Seeded random document generator for property tests and synthetic corpora.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{XmlContent, XmlDocument, XmlNode};

#[derive(Debug, Clone)]
pub struct GenParams {
    pub max_depth: usize,
    pub max_children: usize,
    pub max_attributes: usize,
    pub comments: bool,
    pub declaration: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            max_children: 5,
            max_attributes: 3,
            comments: true,
            declaration: true,
        }
    }
}

const NAMES: &[&str] = &[
    "db", "car", "paint", "fruit", "color", "item", "name", "id", "x", "p", "row", "Book",
    "Chapter", "Title", "ns:tag", "a-b", "_u", "c.d", "é",
];

const WORDS: &[&str] = &[
    "red", "green", "blue", "42", "3.14", "hello world", " ", "\n  ", "a & b", "<tag>", "\"q\"",
    "it's", "naïve", "日本", "x>y", "\t", "tail ",
];

pub fn random_document(seed: u64, params: &GenParams) -> XmlDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = random_node(&mut rng, params, 1);
    XmlDocument {
        declaration: params
            .declaration
            .then(|| r#"version="1.0" encoding="UTF-8""#.to_string()),
        doctype: None,
        root,
        source_bytes: 0,
    }
}

fn random_text(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect()
}

fn random_node(rng: &mut impl Rng, params: &GenParams, depth: usize) -> XmlNode {
    let mut node = XmlNode::new(*NAMES.choose(rng).unwrap());
    let attrs = rng.random_range(0..=params.max_attributes);
    for _ in 0..attrs {
        let name = *NAMES.choose(rng).unwrap();
        if node.attr(name).is_none() {
            node.attributes.push((name.to_string(), random_text(rng)));
        }
    }
    if depth >= params.max_depth {
        if rng.random_bool(0.5) {
            node.children.push(XmlContent::Text(random_text(rng)));
        }
        return node;
    }
    let n = rng.random_range(0..=params.max_children);
    for _ in 0..n {
        let roll: f64 = rng.random();
        let last_is_text = matches!(node.children.last(), Some(XmlContent::Text(_)));
        if roll < 0.3 && !last_is_text {
            node.children.push(XmlContent::Text(random_text(rng)));
        } else if roll < 0.4 && params.comments {
            node.children.push(XmlContent::Comment(" note ".into()));
        } else {
            node.children
                .push(XmlContent::Element(random_node(rng, params, depth + 1)));
        }
    }
    node
}
