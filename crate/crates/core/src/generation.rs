//! Slide text generation.
//!
//! The generator input is `title[SEP1]kw1, kw2[SEP2]context`. The default
//! generator is extractive: it picks context sentences closest to the title
//! and keywords, blocks repeated trigrams and keeps the output inside a
//! token window. A remote seq2seq service can be used instead.

use std::collections::HashSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dense_ir::{SnippetIndex, DEFAULT_CONTEXT_TOKENS, DEFAULT_TOP_K};
use crate::doc_model::{PaperDoc, SlideRecord};
use crate::embedder::TextEncoder;
use crate::error::{Error, Result};
use crate::figure_select::{rank_figures, FigureRanking, DEFAULT_RECOMMENDATIONS};
use crate::http;
use crate::keyword_tree::{HeaderTree, KeywordSet, DEFAULT_MATCH_THRESHOLD};
use crate::textkit::{tokenize, TokenSeq};

pub const SEP1: &str = "[SEP1]";
pub const SEP2: &str = "[SEP2]";
pub const DEFAULT_MIN_TOKENS: usize = 64;
pub const DEFAULT_MAX_TOKENS: usize = 128;
pub const GEN_URL_ENV: &str = "D2S_GEN_URL";
pub const DEFAULT_GEN_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationQuery {
    pub title: String,
    pub keywords: Vec<String>,
    pub context: String,
}

pub fn compose_query(title: &str, keywords: &KeywordSet, context: &str) -> Result<GenerationQuery> {
    if title.trim().is_empty() {
        return Err(Error::EmptyTitle);
    }
    Ok(GenerationQuery {
        title: title.to_string(),
        keywords: keywords.keywords.clone(),
        context: context.to_string(),
    })
}

impl GenerationQuery {
    pub fn wire(&self) -> String {
        format!("{}{SEP1}{}{SEP2}{}", self.title, self.keywords.join(", "), self.context)
    }

    /// Inverse of [`wire`](Self::wire). Keywords containing `", "` do not
    /// survive the round trip.
    pub fn parse(wire: &str) -> Result<Self> {
        let (title, rest) = wire
            .split_once(SEP1)
            .ok_or_else(|| Error::Schema(format!("query lacks {SEP1}")))?;
        let (kw, context) = rest
            .split_once(SEP2)
            .ok_or_else(|| Error::Schema(format!("query lacks {SEP2}")))?;
        let keywords = if kw.is_empty() {
            Vec::new()
        } else {
            kw.split(", ").map(str::to_string).collect()
        };
        Ok(GenerationQuery { title: title.into(), keywords, context: context.into() })
    }

    /// Title plus keywords, the text sentences are scored against.
    pub fn focus_text(&self) -> String {
        if self.keywords.is_empty() {
            self.title.clone()
        } else {
            format!("{}, {}", self.title, self.keywords.join(", "))
        }
    }
}

const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "al.", "etc.", "vs.", "fig.", "figs.", "eq.", "eqs.", "sec.", "cf.", "resp.",
    "approx.", "no.",
];

/// Splits at `.`, `!` or `?` (plus closing quotes or brackets) followed by
/// whitespace. Pieces are trimmed substrings of the input.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '"' | '\'' | ')' | ']' | '”' | '’') {
                j += 1;
            }
            let at_break = j == chars.len() || chars[j].1.is_whitespace();
            let end = if j == chars.len() { text.len() } else { chars[j].0 };
            if at_break && !(c == '.' && ends_with_abbreviation(&text[start..pos + 1])) {
                let piece = text[start..end].trim();
                if !piece.is_empty() {
                    out.push(piece);
                }
                start = end;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn ends_with_abbreviation(piece: &str) -> bool {
    let last = piece.split_whitespace().last().unwrap_or("").to_lowercase();
    ABBREVIATIONS.iter().any(|a| last == *a)
}

fn trigrams(seq: &TokenSeq) -> Vec<&[String]> {
    seq.tokens().windows(3).collect()
}

/// Greedy extractive bullets; see the module docs.
///
/// Sentences are visited best-first (ties by position). A sentence is
/// skipped if it has no tokens, repeats an already chosen sentence, shares a
/// trigram with chosen text, or would push the total past `max_tokens`.
/// Selection stops once `min_tokens` is reached. Bullets come out in context order.
pub fn generate_extractive(
    query: &GenerationQuery,
    encoder: &dyn TextEncoder,
    min_tokens: usize,
    max_tokens: usize,
) -> Result<Vec<String>> {
    let sentences = split_sentences(&query.context);
    if sentences.is_empty() {
        return Err(Error::EmptyContext);
    }
    let focus = encoder.encode(&query.focus_text())?;
    let vecs = encoder.encode_batch(&sentences)?;
    let scores: Vec<f64> = vecs.iter().map(|v| focus.dot(v)).collect();
    let tokens: Vec<TokenSeq> = sentences.iter().map(|s| tokenize(s)).collect();

    let mut order: Vec<usize> = (0..sentences.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut chosen: Vec<usize> = Vec::new();
    let mut seen_text: HashSet<&str> = HashSet::new();
    let mut seen_tri: HashSet<&[String]> = HashSet::new();
    let mut total = 0usize;
    for i in order {
        if total >= min_tokens {
            break;
        }
        let len = tokens[i].len();
        if len == 0 || seen_text.contains(sentences[i]) || total + len > max_tokens {
            continue;
        }
        let tri = trigrams(&tokens[i]);
        if tri.iter().any(|t| seen_tri.contains(t)) {
            continue;
        }
        seen_tri.extend(tri);
        seen_text.insert(sentences[i]);
        total += len;
        chosen.push(i);
    }
    if chosen.is_empty() {
        return Err(Error::EmptyGeneration);
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| sentences[i].to_string()).collect())
}

/// Body of `POST /generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub query: String,
    pub min_tokens: usize,
    pub max_tokens: usize,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// Client for an external seq2seq service at `POST {base}/generate`.
#[derive(Debug, Clone)]
pub struct GeneratorClient {
    base_url: String,
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
}

impl GeneratorClient {
    pub fn new(base_url: impl Into<String>, timeout: Duration) -> Self {
        GeneratorClient {
            base_url: base_url.into(),
            agent: http::agent(timeout),
            retries: 2,
            backoff: Duration::from_millis(200),
        }
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    pub fn from_env(timeout: Duration) -> Option<Self> {
        std::env::var(GEN_URL_ENV)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .map(|u| GeneratorClient::new(u, timeout))
    }

    pub fn request_body(query: &GenerationQuery, min_tokens: usize, max_tokens: usize) -> Vec<u8> {
        serde_json::to_vec(&GenerateRequest { query: query.wire(), min_tokens, max_tokens })
            .expect("request serializes")
    }

    /// Sends the query; 5xx answers are retried, then reported as unavailable.
    pub fn generate_remote(
        &self,
        query: &GenerationQuery,
        min_tokens: usize,
        max_tokens: usize,
    ) -> Result<Vec<String>> {
        let body = Self::request_body(query, min_tokens, max_tokens);
        let url = http::endpoint(&self.base_url, "/generate");
        let mut attempt = 0;
        let text = loop {
            let (status, text) = http::post_json(&self.agent, &url, &body)?;
            match status {
                200..=299 => break text,
                500..=599 if attempt < self.retries => {
                    attempt += 1;
                    std::thread::sleep(self.backoff);
                }
                _ => {
                    return Err(Error::ServiceUnavailable(format!(
                        "{url} returned {status} after {} attempt(s)",
                        attempt + 1
                    )))
                }
            }
        };
        let resp: GenerateResponse = serde_json::from_str(&text)
            .map_err(|e| Error::ServiceUnavailable(format!("{url}: malformed response: {e}")))?;
        let bullets: Vec<String> = resp
            .text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if bullets.is_empty() {
            return Err(Error::EmptyGeneration);
        }
        Ok(bullets)
    }
}

#[derive(Debug, Clone, Default)]
pub enum Generator {
    #[default]
    Extractive,
    Remote(GeneratorClient),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorTag {
    #[default]
    Extractive,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlideOptions {
    pub k: usize,
    pub match_threshold: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub context_tokens: usize,
    pub recommendations: usize,
}

impl Default for SlideOptions {
    fn default() -> Self {
        SlideOptions {
            k: DEFAULT_TOP_K,
            match_threshold: DEFAULT_MATCH_THRESHOLD,
            min_tokens: DEFAULT_MIN_TOKENS,
            max_tokens: DEFAULT_MAX_TOKENS,
            context_tokens: DEFAULT_CONTEXT_TOKENS,
            recommendations: DEFAULT_RECOMMENDATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftCandidate {
    pub snippet_id: usize,
    pub score: f64,
    pub text_score: f64,
    pub kw_score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftFigure {
    pub id: String,
    pub kind: crate::doc_model::FigureKind,
    pub caption: String,
    pub uri: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideDraft {
    pub title: String,
    pub keywords: Vec<String>,
    pub candidates: Vec<DraftCandidate>,
    pub context: String,
    pub bullets: Vec<String>,
    pub figures: Vec<DraftFigure>,
    pub generator: GeneratorTag,
}

impl SlideDraft {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("draft serializes")
    }

    /// `# title`, one `- bullet` per line, then the top recommended figure.
    pub fn to_markdown(&self) -> String {
        let mut md = format!("# {}\n\n", self.title);
        for b in &self.bullets {
            md.push_str("- ");
            md.push_str(b);
            md.push('\n');
        }
        if let Some(f) = self.figures.first() {
            md.push_str(&format!("\n![{}]({})\n", f.id, f.uri));
        }
        md
    }

    /// The draft as a deck slide; the top recommended figure is linked.
    pub fn to_slide_record(&self, deck_id: &str, slide_index: u32) -> SlideRecord {
        SlideRecord {
            deck_id: deck_id.to_string(),
            slide_index,
            title: self.title.clone(),
            content_lines: self.bullets.clone(),
            linked_figures: self.figures.first().map(|f| f.id.clone()).into_iter().collect(),
        }
    }
}

/// Slides joined by `---` separator lines.
pub fn drafts_to_markdown(drafts: &[SlideDraft]) -> String {
    drafts
        .iter()
        .map(SlideDraft::to_markdown)
        .collect::<Vec<_>>()
        .join("\n---\n\n")
}

pub fn drafts_to_deck_json(deck_id: &str, drafts: &[SlideDraft]) -> Result<String> {
    let slides: Vec<SlideRecord> = drafts
        .iter()
        .enumerate()
        .map(|(i, d)| d.to_slide_record(deck_id, i as u32))
        .collect();
    crate::doc_model::deck_to_json(deck_id, &slides)
}

/// Title matching, retrieval, context assembly, generation and figure
/// ranking for one slide title.
#[allow(clippy::too_many_arguments)]
pub fn build_slide(
    doc: &PaperDoc,
    tree: &HeaderTree,
    index: &SnippetIndex,
    encoder: &dyn TextEncoder,
    title: &str,
    options: &SlideOptions,
    generator: &Generator,
) -> Result<SlideDraft> {
    let keywords = tree.match_title(title, options.match_threshold);
    let candidates = index.retrieve(title, encoder, options.k)?;
    if candidates.is_empty() {
        return Err(Error::EmptyContext);
    }
    let context = index.context_text(&candidates, options.context_tokens);
    let query = compose_query(title, &keywords, &context)?;
    let (bullets, tag) = match generator {
        Generator::Extractive => (
            generate_extractive(&query, encoder, options.min_tokens, options.max_tokens)?,
            GeneratorTag::Extractive,
        ),
        Generator::Remote(client) => (
            client.generate_remote(&query, options.min_tokens, options.max_tokens)?,
            GeneratorTag::Remote,
        ),
    };
    let figures = match rank_figures(doc, title, &keywords, encoder) {
        Ok(r) => r.top(options.recommendations),
        Err(Error::NoFigures) => FigureRanking { figures: Vec::new() },
        Err(e) => return Err(e),
    };
    Ok(SlideDraft {
        title: title.to_string(),
        keywords: keywords.keywords,
        candidates: candidates
            .iter()
            .map(|c| DraftCandidate {
                snippet_id: c.snippet_id,
                score: c.score,
                text_score: c.text_score,
                kw_score: c.kw_score,
                text: index.snippet(c.snippet_id).text(),
            })
            .collect(),
        context,
        bullets,
        figures: figures
            .figures
            .into_iter()
            .map(|f| DraftFigure { id: f.id, kind: f.kind, caption: f.caption, uri: f.uri, score: f.score })
            .collect(),
        generator: tag,
    })
}
