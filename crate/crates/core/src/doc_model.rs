//! Papers and slide decks, and the JSON formats they arrive in.
//!
//! Paper JSON:
//! `{ "paper_id", "title", "sections": [{ "label", "header", "sentences" }], "figures": [{ "id", "kind", "caption", "uri" }] }`
//!
//! Deck JSON:
//! `{ "deck_id", "slides": [{ "index", "title", "lines", "figures" }] }`

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textkit::TokenSeq;

/// Share of non-whitespace characters that may be non-alphanumeric before a
/// sentence is treated as an equation fragment and dropped.
pub const MAX_SYMBOL_SHARE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureKind {
    Figure,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureAsset {
    #[serde(rename = "id")]
    pub figure_id: String,
    pub kind: FigureKind,
    pub caption: String,
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    /// Dotted numeric label such as `2.1`, or empty for unnumbered front matter.
    #[serde(rename = "label")]
    pub header_label: String,
    #[serde(rename = "header")]
    pub header_text: String,
    pub sentences: Vec<String>,
}

impl Section {
    pub fn is_numbered(&self) -> bool {
        !self.header_label.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperDoc {
    pub paper_id: String,
    pub title: String,
    pub sections: Vec<Section>,
    pub figures: Vec<FigureAsset>,
}

impl PaperDoc {
    pub fn sentence_count(&self) -> usize {
        self.sections.iter().map(|s| s.sentences.len()).sum()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &str> {
        self.sections
            .iter()
            .flat_map(|s| s.sentences.iter().map(String::as_str))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlideRecord {
    pub deck_id: String,
    pub slide_index: u32,
    pub title: String,
    pub content_lines: Vec<String>,
    pub linked_figures: Vec<String>,
}

impl SlideRecord {
    pub fn content(&self) -> String {
        self.content_lines.join(" ")
    }
}

#[derive(Serialize, Deserialize)]
struct SlideWire {
    index: i64,
    title: String,
    lines: Vec<String>,
    figures: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct DeckWire {
    deck_id: String,
    slides: Vec<SlideWire>,
}

/// Whether `label` is empty or of the form `d(.d)*`.
pub fn is_valid_label(label: &str) -> bool {
    label.is_empty()
        || label
            .split('.')
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit()))
}

fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_equation_fragment(s: &str) -> bool {
    let mut total = 0usize;
    let mut symbols = 0usize;
    for c in s.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if !c.is_alphanumeric() {
            symbols += 1;
        }
    }
    total > 0 && symbols as f64 > MAX_SYMBOL_SHARE * total as f64
}

/// Collapses whitespace, drops empty and symbol-heavy sentences and exact
/// consecutive duplicates.
pub fn clean_sentences<I, S>(raw: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out: Vec<String> = Vec::new();
    for s in raw {
        let s = normalize_whitespace(s.as_ref());
        if s.is_empty() || is_equation_fragment(&s) {
            continue;
        }
        if out.last() == Some(&s) {
            continue;
        }
        out.push(s);
    }
    out
}

/// Parses, cleans and validates a paper-JSON document.
pub fn ingest_paper(raw: &[u8]) -> Result<PaperDoc> {
    let mut doc: PaperDoc =
        serde_json::from_slice(raw).map_err(|e| Error::Schema(e.to_string()))?;
    if doc.paper_id.trim().is_empty() {
        return Err(Error::Schema("paper_id is empty".into()));
    }
    for section in &mut doc.sections {
        if !is_valid_label(&section.header_label) {
            return Err(Error::Schema(format!(
                "section label {:?} is not dotted-numeric",
                section.header_label
            )));
        }
        section.header_text = normalize_whitespace(&section.header_text);
        section.sentences = clean_sentences(&section.sentences);
    }
    let mut ids = HashSet::new();
    for fig in &doc.figures {
        if fig.caption.trim().is_empty() {
            return Err(Error::Schema(format!("figure {} has an empty caption", fig.figure_id)));
        }
        if !ids.insert(fig.figure_id.as_str()) {
            return Err(Error::Schema(format!("duplicate figure id {}", fig.figure_id)));
        }
    }
    if doc.sentence_count() == 0 {
        return Err(Error::EmptyDocument);
    }
    Ok(doc)
}

/// Parses and validates a deck-JSON document; slides keep file order.
pub fn ingest_deck(raw: &[u8]) -> Result<Vec<SlideRecord>> {
    let deck: DeckWire = serde_json::from_slice(raw).map_err(|e| Error::Schema(e.to_string()))?;
    if deck.deck_id.trim().is_empty() {
        return Err(Error::Schema("deck_id is empty".into()));
    }
    let mut seen = HashSet::new();
    let mut slides = Vec::with_capacity(deck.slides.len());
    for s in deck.slides {
        let index = u32::try_from(s.index)
            .map_err(|_| Error::Schema(format!("slide index {} out of range", s.index)))?;
        if !seen.insert(index) {
            return Err(Error::Schema(format!("duplicate slide index {index}")));
        }
        if s.lines.iter().any(|l| l.contains('\n')) {
            return Err(Error::Schema(format!("slide {index} has a line containing a newline")));
        }
        slides.push(SlideRecord {
            deck_id: deck.deck_id.clone(),
            slide_index: index,
            title: s.title,
            content_lines: s.lines,
            linked_figures: s.figures,
        });
    }
    Ok(slides)
}

/// Serializes slides of one deck back to deck-JSON.
pub fn deck_to_json(deck_id: &str, slides: &[SlideRecord]) -> Result<String> {
    let wire = DeckWire {
        deck_id: deck_id.to_string(),
        slides: slides
            .iter()
            .map(|s| SlideWire {
                index: i64::from(s.slide_index),
                title: s.title.clone(),
                lines: s.content_lines.clone(),
                figures: s.linked_figures.clone(),
            })
            .collect(),
    };
    Ok(serde_json::to_string(&wire)?)
}

/// A deck with its slides grouped under one id.
#[derive(Debug, Clone, PartialEq)]
pub struct Deck {
    pub deck_id: String,
    pub slides: Vec<SlideRecord>,
}

impl Deck {
    pub fn from_json(raw: &[u8]) -> Result<Deck> {
        let slides = ingest_deck(raw)?;
        let deck_id = serde_json::from_slice::<DeckWire>(raw)?.deck_id;
        Ok(Deck { deck_id, slides })
    }

    pub fn to_json(&self) -> Result<String> {
        deck_to_json(&self.deck_id, &self.slides)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeckStats {
    pub avg_title_len: f64,
    pub avg_content_len: f64,
}

/// Mean token count of slide titles and of slide contents.
pub fn deck_stats<F>(slides: &[SlideRecord], tokenizer: F) -> Result<DeckStats>
where
    F: Fn(&str) -> TokenSeq,
{
    if slides.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut title = 0usize;
    let mut content = 0usize;
    for s in slides {
        title += tokenizer(&s.title).len();
        content += s.content_lines.iter().map(|l| tokenizer(l).len()).sum::<usize>();
    }
    let n = slides.len() as f64;
    Ok(DeckStats {
        avg_title_len: title as f64 / n,
        avg_content_len: content as f64 / n,
    })
}
