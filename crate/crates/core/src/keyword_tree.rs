//! Section-header hierarchy of a paper.
//!
//! Numbered headers nest by label prefix (`2.1.3` under `2.1` under `2`).
//! Unnumbered sections such as "Abstract" sit at the top level next to the
//! numbered roots. The tree answers two questions: which header a snippet
//! belongs to, and which headers a slide title expands to.

use std::collections::HashMap;

use serde::Serialize;

use crate::doc_model::PaperDoc;
use crate::error::{Error, Result};
use crate::textkit::levenshtein_ratio;

/// Minimum Levenshtein ratio for a title to match a header.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.9;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct HeaderNode {
    pub label: String,
    pub text: String,
    pub section_index: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// 1 for top-level headers.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeaderTree {
    paper_title: String,
    nodes: Vec<HeaderNode>,
    roots: Vec<NodeId>,
    section_len: Vec<usize>,
}

/// A title's matched header plus its recursive descendants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeywordSet {
    pub matched_header: Option<NodeId>,
    pub ratio: Option<f64>,
    pub keywords: Vec<String>,
}

impl KeywordSet {
    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }
}

fn parent_label(label: &str) -> Option<&str> {
    label.rfind('.').map(|i| &label[..i])
}

impl HeaderTree {
    /// One node per section, in document order.
    pub fn build(doc: &PaperDoc) -> HeaderTree {
        let mut nodes: Vec<HeaderNode> = Vec::with_capacity(doc.sections.len());
        let mut by_label: HashMap<&str, NodeId> = HashMap::new();
        for (i, s) in doc.sections.iter().enumerate() {
            if s.is_numbered() {
                by_label.entry(s.header_label.as_str()).or_insert(i);
            }
            nodes.push(HeaderNode {
                label: s.header_label.clone(),
                text: s.header_text.clone(),
                section_index: i,
                parent: None,
                children: Vec::new(),
                depth: 1,
            });
        }

        let mut roots = Vec::new();
        for id in 0..nodes.len() {
            // Nearest existing ancestor label; orphans go to the top level.
            let mut parent = None;
            if !nodes[id].label.is_empty() {
                let mut label = nodes[id].label.as_str();
                while let Some(p) = parent_label(label) {
                    if let Some(&pid) = by_label.get(p) {
                        parent = Some(pid);
                        break;
                    }
                    label = p;
                }
            }
            match parent {
                Some(p) => {
                    nodes[id].parent = Some(p);
                    nodes[p].children.push(id);
                }
                None => roots.push(id),
            }
        }
        // Depths follow parent links; labels are strict prefixes so there are no cycles.
        for id in 0..nodes.len() {
            let mut depth = 1;
            let mut cur = nodes[id].parent;
            while let Some(p) = cur {
                depth += 1;
                cur = nodes[p].parent;
            }
            nodes[id].depth = depth;
        }

        HeaderTree {
            paper_title: doc.title.clone(),
            section_len: doc.sections.iter().map(|s| s.sentences.len()).collect(),
            nodes,
            roots,
        }
    }

    pub fn paper_title(&self) -> &str {
        &self.paper_title
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn nodes(&self) -> &[HeaderNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &HeaderNode {
        &self.nodes[id]
    }

    pub fn find_label(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.label == label)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    /// All recursive descendants of `id` in pre-order (document order).
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.nodes[id].children.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Keyword of the snippet covering `start..end` of section `section`.
    ///
    /// Numbered sections yield their own header text (or the nearest ancestor
    /// with non-empty text); unnumbered sections yield the paper title.
    pub fn snippet_keyword(&self, section: usize, start: usize, end: usize) -> Result<&str> {
        let out_of_range = || Error::SpanOutOfRange { section, start, end };
        let &len = self.section_len.get(section).ok_or_else(out_of_range)?;
        if start >= end || end > len {
            return Err(out_of_range());
        }
        // Node ids coincide with section indices.
        let mut cur = Some(section);
        while let Some(id) = cur {
            let n = &self.nodes[id];
            if n.label.is_empty() {
                break;
            }
            if !n.text.is_empty() {
                return Ok(&n.text);
            }
            cur = n.parent;
        }
        Ok(&self.paper_title)
    }

    /// Best header for `title` by Levenshtein ratio over header text.
    ///
    /// Equal ratios prefer the shallower header, then the earlier one.
    pub fn match_title(&self, title: &str, threshold: f64) -> KeywordSet {
        let title = title.trim();
        let mut best: Option<(NodeId, f64)> = None;
        for (id, node) in self.nodes.iter().enumerate() {
            if node.text.is_empty() {
                continue;
            }
            let ratio = levenshtein_ratio(title, &node.text);
            if ratio < threshold {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, r)) => ratio > r || (ratio == r && node.depth < self.nodes[b].depth),
            };
            if better {
                best = Some((id, ratio));
            }
        }
        match best {
            None => KeywordSet::default(),
            Some((id, ratio)) => {
                let keywords = std::iter::once(id)
                    .chain(self.descendants(id))
                    .map(|n| self.nodes[n].text.clone())
                    .filter(|t| !t.is_empty())
                    .collect();
                KeywordSet { matched_header: Some(id), ratio: Some(ratio), keywords }
            }
        }
    }

    /// Nested `{label, text, children}` outline rooted at the paper title.
    pub fn to_outline(&self) -> OutlineNode {
        OutlineNode {
            label: String::new(),
            text: self.paper_title.clone(),
            children: self.roots.iter().map(|&r| self.outline_of(r)).collect(),
        }
    }

    fn outline_of(&self, id: NodeId) -> OutlineNode {
        let n = &self.nodes[id];
        OutlineNode {
            label: n.label.clone(),
            text: n.text.clone(),
            children: n.children.iter().map(|&c| self.outline_of(c)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlineNode {
    pub label: String,
    pub text: String,
    pub children: Vec<OutlineNode>,
}
