//! Dense text vectors.
//!
//! [`HashedTfidfEmbedder`] is the in-repo encoder: tokens are hashed into
//! `dim` buckets weighted by IDF, multiplied by a learned `dim x dim`
//! projection and L2-normalized. The projection is trained with a softmax
//! cross-entropy over inner products of a title against its own slide
//! content and sampled negatives. [`RemoteEmbedder`] delegates to an HTTP
//! service instead.

use std::io::{Read, Write};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder};
use crate::doc_model::SlideRecord;
use crate::error::{Error, Result};
use crate::http;
use crate::textkit::{tokenize, IdfTable, TokenSeq};

pub const DEFAULT_DIM: usize = 128;
pub const EMBED_URL_ENV: &str = "D2S_EMBED_URL";

const MAGIC: &[u8; 4] = b"D2SE";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector(vec![0.0; dim])
    }

    /// Rejects non-finite components.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("embedding has non-finite values".into()));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

/// Plain left-to-right inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Anything that turns text into fixed-dimension vectors.
pub trait TextEncoder: Send + Sync {
    fn dim(&self) -> usize;

    fn encode_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;

    fn encode(&self, text: &str) -> Result<EmbeddingVector> {
        let mut v = self.encode_batch(&[text])?;
        v.pop().ok_or(Error::EmptyGeneration)
    }
}

/// Sparse vector as sorted `(index, value)` pairs.
pub type SparseVec = Vec<(usize, f64)>;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashedTfidfEmbedder {
    dim: usize,
    seed: u64,
    /// Row-major `dim x dim`.
    projection: Vec<f64>,
    idf: Option<IdfTable>,
}

impl HashedTfidfEmbedder {
    /// Identity projection and unit token weights.
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut projection = vec![0.0; dim * dim];
        for i in 0..dim {
            projection[i * dim + i] = 1.0;
        }
        HashedTfidfEmbedder { dim, seed, projection, idf: None }
    }

    pub fn with_idf(mut self, idf: IdfTable) -> Self {
        self.idf = Some(idf);
        self
    }

    /// Fits token weights on `texts`, one document each.
    pub fn fit_idf<S: AsRef<str>>(self, texts: &[S]) -> Result<Self> {
        let corpus: Vec<TokenSeq> = texts.iter().map(|t| tokenize(t.as_ref())).collect();
        Ok(self.with_idf(IdfTable::new(&corpus)?))
    }

    pub fn with_projection(mut self, projection: Vec<f64>) -> Result<Self> {
        if projection.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim * self.dim,
                actual: projection.len(),
            });
        }
        if projection.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("projection has non-finite values".into()));
        }
        self.projection = projection;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn idf(&self) -> Option<&IdfTable> {
        self.idf.as_ref()
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(self.seed, token.as_bytes()) % self.dim as u64) as usize
    }

    /// IDF-weighted token counts folded into `dim` hash buckets.
    pub fn base_vector(&self, text: &str) -> SparseVec {
        let mut dense = vec![0.0; self.dim];
        for tok in tokenize(text).tokens() {
            let w = self.idf.as_ref().map_or(1.0, |t| t.get(tok));
            dense[self.bucket(tok)] += w;
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .collect()
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let x = project(&self.projection, self.dim, &self.base_vector(text));
        EmbeddingVector(normalized(x).0)
    }

    /// Trains a copy of this embedder; `self` is left untouched.
    pub fn train_contrastive(
        &self,
        pairs: &[TrainingPair],
        config: &TrainConfig,
    ) -> Result<(HashedTfidfEmbedder, TrainReport)> {
        config.validate()?;
        if pairs.is_empty() {
            return Err(Error::EmptyTraining);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut examples = Vec::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            if p.negatives.is_empty() {
                return Err(Error::DegenerateConfig(format!("pair {i} has no negatives")));
            }
            // Negatives are drawn once so every epoch optimizes the same objective.
            let picked: Vec<&String> = p
                .negatives
                .choose_multiple(&mut rng, config.k_negatives.min(p.negatives.len()))
                .collect();
            examples.push(ContrastiveExample {
                query: self.base_vector(&p.title),
                positive: self.base_vector(&p.positive_content),
                negatives: picked.iter().map(|n| self.base_vector(n)).collect(),
            });
        }

        let mut projection = self.projection.clone();
        let mut loss_history = Vec::with_capacity(config.epochs);
        for _ in 0..config.epochs {
            let (loss, grad) =
                contrastive_objective(&projection, self.dim, &examples, config.temperature);
            loss_history.push(loss);
            for (p, g) in projection.iter_mut().zip(&grad) {
                *p -= config.lr * g;
            }
        }
        let (final_loss, _) =
            contrastive_objective(&projection, self.dim, &examples, config.temperature);
        let trained = HashedTfidfEmbedder { projection, ..self.clone() };
        Ok((trained, TrainReport { loss_history, final_loss }))
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut enc = Encoder::new(out);
        enc.bytes(MAGIC)?;
        enc.u16(VERSION)?;
        enc.u32(self.dim as u32)?;
        enc.u64(self.seed)?;
        for &v in &self.projection {
            enc.f64(v)?;
        }
        match &self.idf {
            None => {
                enc.u64(0)?;
                enc.len(0)?;
            }
            Some(t) => {
                enc.u64(t.n_docs() as u64)?;
                let mut entries: Vec<(&String, &f64)> = t.entries().iter().collect();
                entries.sort_by(|a, b| a.0.cmp(b.0));
                enc.len(entries.len())?;
                for (tok, &w) in entries {
                    enc.str(tok)?;
                    enc.f64(w)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut dec = Decoder::new(input);
        dec.magic(MAGIC, VERSION)?;
        let dim = dec.u32()? as usize;
        if dim == 0 {
            return Err(Error::Format("zero dimension".into()));
        }
        let seed = dec.u64()?;
        let mut projection = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            projection.push(dec.f64()?);
        }
        let n_docs = dec.u64()? as usize;
        let n_entries = dec.len()?;
        let mut idf = std::collections::HashMap::with_capacity(n_entries);
        for _ in 0..n_entries {
            let tok = dec.str()?;
            idf.insert(tok, dec.f64()?);
        }
        dec.finish()?;
        let base = HashedTfidfEmbedder::new(dim, seed).with_projection(projection)?;
        Ok(if n_docs == 0 {
            base
        } else {
            base.with_idf(IdfTable::from_parts(n_docs, idf))
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

impl TextEncoder for HashedTfidfEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.embed(t)).collect())
    }
}

fn project(projection: &[f64], dim: usize, b: &SparseVec) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (r, xr) in x.iter_mut().enumerate() {
        let row = &projection[r * dim..(r + 1) * dim];
        for &(c, v) in b {
            *xr += row[c] * v;
        }
    }
    x
}

/// Unit vector and the original norm; zero stays zero.
fn normalized(mut x: Vec<f64>) -> (Vec<f64>, f64) {
    let n = dot(&x, &x).sqrt();
    if n > 0.0 {
        for v in &mut x {
            *v /= n;
        }
    }
    (x, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub title: String,
    pub positive_content: String,
    pub negatives: Vec<String>,
}

/// Builds title → content pairs from slides; negatives are contents of
/// slides whose titles differ (case-insensitively) from the anchor's.
pub fn pairs_from_slides(slides: &[SlideRecord], k_negatives: usize, seed: u64) -> Vec<TrainingPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let usable: Vec<(&SlideRecord, String)> = slides
        .iter()
        .map(|s| (s, s.content()))
        .filter(|(s, c)| !s.title.trim().is_empty() && !tokenize(c).is_empty())
        .collect();
    let mut pairs = Vec::new();
    for (slide, content) in &usable {
        let key = slide.title.trim().to_lowercase();
        let pool: Vec<&String> = usable
            .iter()
            .filter(|(o, _)| o.title.trim().to_lowercase() != key)
            .map(|(_, c)| c)
            .collect();
        if pool.is_empty() {
            continue;
        }
        let negatives = pool
            .choose_multiple(&mut rng, k_negatives.min(pool.len()))
            .map(|c| (*c).clone())
            .collect();
        pairs.push(TrainingPair {
            title: slide.title.clone(),
            positive_content: content.clone(),
            negatives,
        });
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub k_negatives: usize,
    pub seed: u64,
    pub temperature: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 2.0, epochs: 100, k_negatives: 4, seed: 0, temperature: 1.0 }
    }
}

impl TrainConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::DegenerateConfig(format!("lr must be positive, got {}", self.lr)));
        }
        if self.epochs < 1 {
            return Err(Error::DegenerateConfig("epochs must be at least 1".into()));
        }
        if self.k_negatives < 1 {
            return Err(Error::DegenerateConfig("k_negatives must be at least 1".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::DegenerateConfig("temperature must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    /// Loss at the start of each epoch.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
}

/// One anchor with its positive (class 0) and negatives, as base vectors.
#[derive(Debug, Clone)]
pub struct ContrastiveExample {
    pub query: SparseVec,
    pub positive: SparseVec,
    pub negatives: Vec<SparseVec>,
}

/// Mean softmax cross-entropy of the positive over `[positive, negatives..]`
/// with normalized inner products as logits, and its gradient with respect
/// to the row-major projection.
pub fn contrastive_objective(
    projection: &[f64],
    dim: usize,
    examples: &[ContrastiveExample],
    temperature: f64,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; dim * dim];
    if examples.is_empty() {
        return (0.0, grad);
    }
    let scale = 1.0 / examples.len() as f64;
    let mut total = 0.0;

    for ex in examples {
        let (u, un) = normalized(project(projection, dim, &ex.query));
        let docs: Vec<(&SparseVec, Vec<f64>, f64)> = std::iter::once(&ex.positive)
            .chain(&ex.negatives)
            .map(|b| {
                let (v, n) = normalized(project(projection, dim, b));
                (b, v, n)
            })
            .collect();

        let logits: Vec<f64> = docs.iter().map(|(_, v, _)| dot(&u, v) / temperature).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|s| (s - max).exp()).sum();
        total += max + z.ln() - logits[0];

        // d loss / d logit_j = softmax_j - [j == 0]
        let g: Vec<f64> = logits
            .iter()
            .enumerate()
            .map(|(j, s)| ((s - max).exp() / z - if j == 0 { 1.0 } else { 0.0 }) / temperature)
            .collect();

        let mut du = vec![0.0; dim];
        for ((_, v, _), gj) in docs.iter().zip(&g) {
            for (a, b) in du.iter_mut().zip(v) {
                *a += gj * b;
            }
        }
        accumulate(&mut grad, dim, &ex.query, &u, un, &du, scale);
        for ((b, v, n), gj) in docs.iter().zip(&g) {
            let dv: Vec<f64> = u.iter().map(|x| gj * x).collect();
            accumulate(&mut grad, dim, b, v, *n, &dv, scale);
        }
    }
    (total * scale, grad)
}

/// Backpropagates `d loss / d unit` through `unit = P b / |P b|` into `grad`.
fn accumulate(
    grad: &mut [f64],
    dim: usize,
    base: &SparseVec,
    unit: &[f64],
    norm: f64,
    d_unit: &[f64],
    scale: f64,
) {
    if norm == 0.0 {
        return;
    }
    let along = dot(unit, d_unit);
    for r in 0..dim {
        let dx = (d_unit[r] - unit[r] * along) / norm * scale;
        if dx == 0.0 {
            continue;
        }
        let row = &mut grad[r * dim..(r + 1) * dim];
        for &(c, v) in base {
            row[c] += dx * v;
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for `POST {base}/embed`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    base_url: String,
    dim: usize,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(base_url: impl Into<String>, dim: usize, timeout: Duration) -> Self {
        RemoteEmbedder { base_url: base_url.into(), dim, agent: http::agent(timeout) }
    }

    /// Remote mode is on when `D2S_EMBED_URL` is set.
    pub fn from_env(dim: usize, timeout: Duration) -> Option<Self> {
        std::env::var(EMBED_URL_ENV)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .map(|u| RemoteEmbedder::new(u, dim, timeout))
    }

    pub fn remote_embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = serde_json::to_vec(&EmbedRequest { texts })?;
        let url = http::endpoint(&self.base_url, "/embed");
        let (status, text) = http::post_json(&self.agent, &url, &body)?;
        if !(200..300).contains(&status) {
            return Err(Error::ServiceUnavailable(format!("{url} returned {status}")));
        }
        let resp: EmbedResponse = serde_json::from_str(&text)
            .map_err(|e| Error::ServiceUnavailable(format!("{url}: malformed response: {e}")))?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::ServiceUnavailable(format!(
                "{url} returned {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, actual: v.len() });
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

impl TextEncoder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        self.remote_embed(texts)
    }
}
