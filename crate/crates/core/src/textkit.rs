//! Tokenization, n-grams, string similarity and the evaluation metrics
//! (ROUGE-1/2/L, IDF-recall, novel n-grams, precision@k).
//!
//! Everything here is a pure function over immutable inputs.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercased word tokens in text order. Never contains an empty token.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Wraps pre-split tokens, lowercasing them and dropping empties.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TokenSeq(
            tokens
                .into_iter()
                .map(|t| t.as_ref().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn types(&self) -> HashSet<&str> {
        self.0.iter().map(String::as_str).collect()
    }

    pub fn concat<'a, I: IntoIterator<Item = &'a TokenSeq>>(seqs: I) -> TokenSeq {
        TokenSeq(seqs.into_iter().flat_map(|s| s.0.iter().cloned()).collect())
    }
}

/// Splits on anything that is not alphanumeric and lowercases the pieces.
///
/// `"A B, c."` becomes `[a, b, c]`; punctuation never survives as a token.
pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq(
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect(),
    )
}

/// Every contiguous window of `n` tokens, in order.
pub fn ngrams(seq: &TokenSeq, n: usize) -> Result<Vec<&[String]>> {
    if n < 1 {
        return Err(Error::InvalidN(n));
    }
    Ok(seq.0.windows(n).collect())
}

fn ngram_counts(seq: &TokenSeq, n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for g in seq.0.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

/// Precision, recall and F1 of one ROUGE family.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Prf {
    pub p: f64,
    pub r: f64,
    pub f: f64,
}

impl Prf {
    fn from_overlap(overlap: usize, candidate_units: usize, reference_units: usize) -> Self {
        if candidate_units == 0 || reference_units == 0 {
            return Prf::default();
        }
        let p = overlap as f64 / candidate_units as f64;
        let r = overlap as f64 / reference_units as f64;
        Prf { p, r, f: f_score(p, r) }
    }
}

pub(crate) fn f_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// ROUGE-1, ROUGE-2 and ROUGE-L of a candidate against one reference.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RougeReport {
    pub r1: Prf,
    pub r2: Prf,
    pub rl: Prf,
}

impl RougeReport {
    /// Values in the fixed order `r1_p, r1_r, r1_f, r2_p, r2_r, r2_f, rl_p, rl_r, rl_f`.
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.r1.p, self.r1.r, self.r1.f, self.r2.p, self.r2.r, self.r2.f, self.rl.p,
            self.rl.r, self.rl.f,
        ]
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        RougeReport {
            r1: Prf { p: v[0], r: v[1], f: v[2] },
            r2: Prf { p: v[3], r: v[4], f: v[5] },
            rl: Prf { p: v[6], r: v[7], f: v[8] },
        }
    }

    /// Arithmetic mean of each of the nine values, accumulated in input order.
    pub fn mean<'a, I: IntoIterator<Item = &'a RougeReport>>(reports: I) -> Option<RougeReport> {
        let mut sum = [0.0; 9];
        let mut n = 0usize;
        for r in reports {
            for (s, v) in sum.iter_mut().zip(r.to_array()) {
                *s += v;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        Some(RougeReport::from_array(sum.map(|s| s / n as f64)))
    }
}

#[derive(Serialize, Deserialize)]
struct RougeWire {
    r1_p: f64,
    r1_r: f64,
    r1_f: f64,
    r2_p: f64,
    r2_r: f64,
    r2_f: f64,
    rl_p: f64,
    rl_r: f64,
    rl_f: f64,
}

impl Serialize for RougeReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let [r1_p, r1_r, r1_f, r2_p, r2_r, r2_f, rl_p, rl_r, rl_f] = self.to_array();
        RougeWire { r1_p, r1_r, r1_f, r2_p, r2_r, r2_f, rl_p, rl_r, rl_f }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RougeReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = RougeWire::deserialize(d)?;
        Ok(RougeReport::from_array([
            w.r1_p, w.r1_r, w.r1_f, w.r2_p, w.r2_r, w.r2_f, w.rl_p, w.rl_r, w.rl_f,
        ]))
    }
}

fn rouge_n(candidate: &TokenSeq, reference: &TokenSeq, n: usize) -> Prf {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap: usize = cand
        .iter()
        .map(|(g, &c)| refs.get(g).map_or(0, |&r| c.min(r)))
        .sum();
    Prf::from_overlap(
        overlap,
        candidate.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

/// Length of the longest common subsequence, two-row dynamic program.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-1/2 from clipped n-gram overlap, ROUGE-L from the LCS.
/// No stemming, no stopword removal.
pub fn rouge(candidate: &TokenSeq, reference: &TokenSeq) -> RougeReport {
    let lcs = lcs_len(candidate.tokens(), reference.tokens());
    RougeReport {
        r1: rouge_n(candidate, reference, 1),
        r2: rouge_n(candidate, reference, 2),
        rl: Prf::from_overlap(lcs, candidate.len(), reference.len()),
    }
}

/// Smoothed inverse document frequencies over a small corpus.
///
/// `idf(w) = ln((N + 1) / (df(w) + 1)) + 1`; a token never seen gets `ln(N + 1) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    n_docs: usize,
    idf: HashMap<String, f64>,
}

impl IdfTable {
    pub fn new(corpus: &[TokenSeq]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in corpus {
            for w in doc.types() {
                *df.entry(w).or_insert(0) += 1;
            }
        }
        let n = corpus.len() as f64;
        let idf = df
            .into_iter()
            .map(|(w, d)| (w.to_string(), ((n + 1.0) / (d as f64 + 1.0)).ln() + 1.0))
            .collect();
        Ok(IdfTable { n_docs: corpus.len(), idf })
    }

    /// Rebuilds a table from stored parts (used by model files).
    pub fn from_parts(n_docs: usize, idf: HashMap<String, f64>) -> Self {
        IdfTable { n_docs, idf }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn entries(&self) -> &HashMap<String, f64> {
        &self.idf
    }

    pub fn unseen(&self) -> f64 {
        (self.n_docs as f64 + 1.0).ln() + 1.0
    }

    pub fn get(&self, token: &str) -> f64 {
        self.idf.get(token).copied().unwrap_or_else(|| self.unseen())
    }
}

/// IDF-weighted share of the reference's word types present in `retrieved`.
pub fn idf_recall(reference: &TokenSeq, retrieved: &TokenSeq, idf: &IdfTable) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let found = retrieved.types();
    let mut hit = 0.0;
    let mut total = 0.0;
    // Sorted so the floating-point sum does not depend on hash order.
    let mut types: Vec<&str> = reference.types().into_iter().collect();
    types.sort_unstable();
    for w in types {
        let weight = idf.get(w);
        total += weight;
        if found.contains(w) {
            hit += weight;
        }
    }
    Ok(if total > 0.0 { hit / total } else { 0.0 })
}

/// Fraction of the target's n-gram occurrences that never occur in `source`.
pub fn novel_ngram_ratio(target: &TokenSeq, source: &TokenSeq, n: usize) -> Result<f64> {
    let source_set: HashSet<&[String]> = ngrams(source, n)?.into_iter().collect();
    novel_ngram_ratio_in(target, &source_set, n)
}

/// Same as [`novel_ngram_ratio`] against a prebuilt n-gram set.
pub fn novel_ngram_ratio_in(
    target: &TokenSeq,
    source: &HashSet<&[String]>,
    n: usize,
) -> Result<f64> {
    let grams = ngrams(target, n)?;
    if grams.is_empty() {
        return Err(Error::NoNgrams(n));
    }
    let novel = grams.iter().filter(|g| !source.contains(*g)).count();
    Ok(novel as f64 / grams.len() as f64)
}

/// Edit distance with unit insert/delete and substitution cost 2.
fn indel_distance(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + if x == y { 0 } else { 2 };
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Case-insensitive similarity `(|a| + |b| - D) / (|a| + |b|)` over characters.
pub fn levenshtein_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    (total - indel_distance(&a, &b)) as f64 / total as f64
}

/// `|top-k ∩ relevant| / k`, dividing by `k` even when fewer items are ranked.
pub fn precision_at_k<T: Eq + std::hash::Hash>(
    ranked: &[T],
    relevant: &HashSet<T>,
    k: usize,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidK(k));
    }
    let hits = ranked.iter().take(k).filter(|id| relevant.contains(*id)).count();
    Ok(hits as f64 / k as f64)
}
