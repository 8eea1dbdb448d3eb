//! Snippet retrieval.
//!
//! Each section is cut into non-overlapping windows of up to four sentences.
//! A title is scored against every snippet as
//! `alpha * (title · text) + (1 - alpha) * (title · keyword)` where
//! `keyword` is the header enclosing the snippet, and the best `k` are
//! returned. Search is an exhaustive scan, so results are exact.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder};
use crate::doc_model::PaperDoc;
use crate::embedder::{dot, EmbeddingVector, TextEncoder};
use crate::error::{Error, Result};
use crate::keyword_tree::HeaderTree;
use crate::textkit::{tokenize, TokenSeq};

pub const DEFAULT_WINDOW: usize = 4;
pub const DEFAULT_ALPHA: f64 = 0.75;
pub const DEFAULT_TOP_K: usize = 10;
/// Input budget of the downstream generator, in tokens.
pub const DEFAULT_CONTEXT_TOKENS: usize = 1024;

const MAGIC: &[u8; 4] = b"D2SI";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snippet {
    pub snippet_id: usize,
    pub section_index: usize,
    /// Half-open sentence range within the section.
    pub sentence_range: (usize, usize),
    pub sentences: Vec<String>,
    pub keyword: String,
}

impl Snippet {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Cuts every section into consecutive windows of `window` sentences.
pub fn snippetize(doc: &PaperDoc, tree: &HeaderTree, window: usize) -> Result<Vec<Snippet>> {
    if window < 1 {
        return Err(Error::InvalidWindow(window));
    }
    let mut out = Vec::new();
    for (si, section) in doc.sections.iter().enumerate() {
        for (ci, chunk) in section.sentences.chunks(window).enumerate() {
            let start = ci * window;
            let end = start + chunk.len();
            out.push(Snippet {
                snippet_id: out.len(),
                section_index: si,
                sentence_range: (start, end),
                sentences: chunk.to_vec(),
                keyword: tree.snippet_keyword(si, start, end)?.to_string(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub snippet_id: usize,
    pub score: f64,
    pub text_score: f64,
    pub kw_score: f64,
}

impl ScoredCandidate {
    fn new(snippet_id: usize, alpha: f64, text_score: f64, kw_score: f64) -> Self {
        ScoredCandidate {
            snippet_id,
            score: mix(alpha, text_score, kw_score),
            text_score,
            kw_score,
        }
    }
}

#[inline]
pub fn mix(alpha: f64, text_score: f64, kw_score: f64) -> f64 {
    alpha * text_score + (1.0 - alpha) * kw_score
}

/// Higher score first, then lower snippet id.
pub fn rank_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.snippet_id.cmp(&b.snippet_id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnippetIndex {
    snippets: Vec<Snippet>,
    dim: usize,
    alpha: f64,
    text_vecs: Vec<f64>,
    kw_vecs: Vec<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(())
}

impl SnippetIndex {
    /// Embeds each snippet's text and keyword.
    pub fn build(snippets: Vec<Snippet>, encoder: &dyn TextEncoder, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if snippets.is_empty() {
            return Err(Error::EmptySnippets);
        }
        let texts: Vec<String> = snippets.iter().map(Snippet::text).collect();
        let text_refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let text_vecs = encoder.encode_batch(&text_refs)?;

        // Keywords repeat across snippets of a section; embed each once.
        let mut unique: Vec<&str> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for s in &snippets {
            slot.entry(s.keyword.as_str()).or_insert_with(|| {
                unique.push(s.keyword.as_str());
                unique.len() - 1
            });
        }
        let kw_unique = encoder.encode_batch(&unique)?;
        let kw_vecs: Vec<EmbeddingVector> = snippets
            .iter()
            .map(|s| kw_unique[slot[s.keyword.as_str()]].clone())
            .collect();
        Self::from_vectors(snippets, text_vecs, kw_vecs, alpha)
    }

    /// Assembles an index from precomputed vectors.
    pub fn from_vectors(
        snippets: Vec<Snippet>,
        text_vecs: Vec<EmbeddingVector>,
        kw_vecs: Vec<EmbeddingVector>,
        alpha: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if snippets.is_empty() {
            return Err(Error::EmptySnippets);
        }
        if text_vecs.len() != snippets.len() || kw_vecs.len() != snippets.len() {
            return Err(Error::Schema("vector count does not match snippet count".into()));
        }
        let dim = text_vecs[0].dim();
        let mut flat_text = Vec::with_capacity(dim * snippets.len());
        let mut flat_kw = Vec::with_capacity(dim * snippets.len());
        for (t, k) in text_vecs.iter().zip(&kw_vecs) {
            for v in [t, k] {
                if v.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, actual: v.dim() });
                }
            }
            flat_text.extend_from_slice(t.values());
            flat_kw.extend_from_slice(k.values());
        }
        Ok(SnippetIndex { snippets, dim, alpha, text_vecs: flat_text, kw_vecs: flat_kw })
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn snippets(&self) -> &[Snippet] {
        &self.snippets
    }

    pub fn snippet(&self, id: usize) -> &Snippet {
        &self.snippets[id]
    }

    pub fn text_vec(&self, id: usize) -> &[f64] {
        &self.text_vecs[id * self.dim..(id + 1) * self.dim]
    }

    pub fn kw_vec(&self, id: usize) -> &[f64] {
        &self.kw_vecs[id * self.dim..(id + 1) * self.dim]
    }

    /// Same vectors and snippets under a different mixing weight.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(SnippetIndex { alpha, ..self.clone() })
    }

    /// Embeds `title` and returns the top `k` snippets.
    pub fn retrieve(
        &self,
        title: &str,
        encoder: &dyn TextEncoder,
        k: usize,
    ) -> Result<Vec<ScoredCandidate>> {
        if tokenize(title).is_empty() {
            return Err(Error::EmptyTitle);
        }
        let q = encoder.encode(title)?;
        self.retrieve_vector(&q, k)
    }

    /// Exact top-`k` by inner product against a query vector.
    pub fn retrieve_vector(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<ScoredCandidate>> {
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: query.dim() });
        }
        let q = query.values();
        let mut all: Vec<ScoredCandidate> = (0..self.len())
            .map(|i| ScoredCandidate::new(i, self.alpha, dot(q, self.text_vec(i)), dot(q, self.kw_vec(i))))
            .collect();
        let k = k.min(all.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, rank_order);
            all.truncate(k);
        }
        all.sort_unstable_by(rank_order);
        Ok(all)
    }

    /// Ranked snippet texts joined by spaces, cut at the last whole sentence
    /// that fits in `max_tokens`.
    pub fn context_text(&self, candidates: &[ScoredCandidate], max_tokens: usize) -> String {
        let mut parts: Vec<&str> = Vec::new();
        let mut used = 0usize;
        'outer: for c in candidates {
            for sentence in &self.snippets[c.snippet_id].sentences {
                let n = tokenize(sentence).len();
                if used + n > max_tokens {
                    break 'outer;
                }
                used += n;
                parts.push(sentence);
            }
        }
        parts.join(" ")
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut enc = Encoder::new(out);
        enc.bytes(MAGIC)?;
        enc.u16(VERSION)?;
        enc.u32(self.dim as u32)?;
        enc.f64(self.alpha)?;
        enc.len(self.snippets.len())?;
        for (i, s) in self.snippets.iter().enumerate() {
            enc.len(s.snippet_id)?;
            enc.len(s.section_index)?;
            enc.len(s.sentence_range.0)?;
            enc.len(s.sentence_range.1)?;
            enc.str(&s.keyword)?;
            enc.len(s.sentences.len())?;
            for sent in &s.sentences {
                enc.str(sent)?;
            }
            for &v in self.text_vec(i).iter().chain(self.kw_vec(i)) {
                enc.f64(v)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut dec = Decoder::new(input);
        dec.magic(MAGIC, VERSION)?;
        let dim = dec.u32()? as usize;
        let alpha = dec.f64()?;
        let n = dec.len()?;
        let mut snippets = Vec::with_capacity(n);
        let mut text_vecs = Vec::with_capacity(n);
        let mut kw_vecs = Vec::with_capacity(n);
        for _ in 0..n {
            let snippet_id = dec.len()?;
            let section_index = dec.len()?;
            let start = dec.len()?;
            let end = dec.len()?;
            let keyword = dec.str()?;
            let n_sent = dec.len()?;
            let sentences = (0..n_sent).map(|_| dec.str()).collect::<Result<Vec<_>>>()?;
            let mut read_vec = || -> Result<EmbeddingVector> {
                let v = (0..dim).map(|_| dec.f64()).collect::<Result<Vec<_>>>()?;
                EmbeddingVector::new(v).map_err(|e| Error::Format(e.to_string()))
            };
            text_vecs.push(read_vec()?);
            kw_vecs.push(read_vec()?);
            snippets.push(Snippet {
                snippet_id,
                section_index,
                sentence_range: (start, end),
                sentences,
                keyword,
            });
        }
        dec.finish()?;
        if snippets.iter().enumerate().any(|(i, s)| s.snippet_id != i) {
            return Err(Error::Format("snippet ids are not sequential".into()));
        }
        Self::from_vectors(snippets, text_vecs, kw_vecs, alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateView {
    pub snippet_id: usize,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalResponse {
    pub candidates: Vec<CandidateView>,
}

impl RetrievalResponse {
    pub fn new(index: &SnippetIndex, candidates: &[ScoredCandidate]) -> Self {
        RetrievalResponse {
            candidates: candidates
                .iter()
                .map(|c| CandidateView {
                    snippet_id: c.snippet_id,
                    score: c.score,
                    text: index.snippet(c.snippet_id).text(),
                })
                .collect(),
        }
    }
}

/// Okapi BM25 over snippet texts; only used as a comparator in evaluation.
#[derive(Debug, Clone)]
pub struct Bm25 {
    docs: Vec<HashMap<String, usize>>,
    lens: Vec<usize>,
    avg_len: f64,
    df: HashMap<String, usize>,
    k1: f64,
    b: f64,
}

impl Bm25 {
    pub const K1: f64 = 1.2;
    pub const B: f64 = 0.75;

    pub fn new(docs: &[TokenSeq]) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut tfs = Vec::with_capacity(docs.len());
        for d in docs {
            let mut tf: HashMap<String, usize> = HashMap::new();
            for t in d.tokens() {
                *tf.entry(t.clone()).or_insert(0) += 1;
            }
            for t in tf.keys() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
            tfs.push(tf);
        }
        let lens: Vec<usize> = docs.iter().map(TokenSeq::len).collect();
        let avg_len = if lens.is_empty() {
            0.0
        } else {
            lens.iter().sum::<usize>() as f64 / lens.len() as f64
        };
        Bm25 { docs: tfs, lens, avg_len, df, k1: Self::K1, b: Self::B }
    }

    pub fn score(&self, query: &TokenSeq, doc: usize) -> f64 {
        let n = self.docs.len() as f64;
        let mut terms: Vec<&str> = query.types().into_iter().collect();
        terms.sort_unstable();
        let mut s = 0.0;
        for t in terms {
            let Some(&tf) = self.docs[doc].get(t) else { continue };
            let df = self.df[t] as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            let tf = tf as f64;
            let norm = if self.avg_len > 0.0 { self.lens[doc] as f64 / self.avg_len } else { 0.0 };
            s += idf * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * norm));
        }
        s
    }

    /// Top `k` document ids, ties by lower id.
    pub fn top_k(&self, query: &TokenSeq, k: usize) -> Vec<usize> {
        let mut scored: Vec<(usize, f64)> =
            (0..self.docs.len()).map(|i| (i, self.score(query, i))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.into_iter().take(k).map(|(i, _)| i).collect()
    }
}
