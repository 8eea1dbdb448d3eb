//! Derivability filter for slide lines.
//!
//! A slide line is described by nine ROUGE values against its paper and
//! classified by a random forest of Gini trees. Lines predicted underivable
//! are removed from training decks.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder};
use crate::doc_model::{Deck, PaperDoc};
use crate::error::{Error, Result};
use crate::textkit::{rouge, tokenize, TokenSeq};

pub const N_FEATURES: usize = 9;

const MAGIC: &[u8; 4] = b"D2SF";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Derivable,
    Underivable,
}

impl Label {
    pub fn from_flag(flag: u8) -> Result<Self> {
        match flag {
            1 => Ok(Label::Derivable),
            0 => Ok(Label::Underivable),
            other => Err(Error::Schema(format!("label must be 0 or 1, got {other}"))),
        }
    }

    pub fn flag(self) -> u8 {
        match self {
            Label::Derivable => 1,
            Label::Underivable => 0,
        }
    }
}

/// `(r1, r2, rl) x (p, r, f)` in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

/// Per-component maximum of ROUGE(paper sentence, line) over all sentences.
pub fn featurize(line: &str, paper_sentences: &[TokenSeq]) -> Result<FeatureVector> {
    let line = tokenize(line);
    if line.is_empty() {
        return Err(Error::EmptyLine);
    }
    let mut best = [0.0f64; N_FEATURES];
    for s in paper_sentences {
        for (b, v) in best.iter_mut().zip(rouge(s, &line).to_array()) {
            *b = b.max(v);
        }
    }
    Ok(FeatureVector(best))
}

pub fn paper_sentence_tokens(doc: &PaperDoc) -> Vec<TokenSeq> {
    doc.sentences().map(tokenize).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features_per_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(Label),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, x: &FeatureVector) -> Label {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(l) => return l,
                Node::Split { feature, threshold, left, right } => {
                    i = if x.0[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Majority label; ties go to `Derivable`.
fn majority(derivable: usize, underivable: usize) -> Label {
    if derivable >= underivable {
        Label::Derivable
    } else {
        Label::Underivable
    }
}

struct Grower<'a> {
    xs: &'a [FeatureVector],
    ys: &'a [Label],
    config: &'a ForestConfig,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let pos = idx.iter().filter(|&&i| self.ys[i] == Label::Derivable).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(pos, idx.len() - pos)));
        let pure = pos == 0 || pos == idx.len();
        let depth_ok = self.config.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || idx.len() < self.config.min_samples_split.max(2) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(idx, rng) else {
            return id;
        };
        let mid = partition(idx, |i| self.xs[i].0[feature] <= threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    /// Lowest weighted Gini over a random subset of features. If none of the
    /// drawn features can split, the remaining ones are tried in turn.
    fn best_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let mut features: Vec<usize> = (0..N_FEATURES).collect();
        features.shuffle(rng);
        let n = idx.len();
        let total_pos = idx.iter().filter(|&&i| self.ys[i] == Label::Derivable).count();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, bool)> = Vec::with_capacity(n);
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.config.features_per_split.max(1) && best.is_some() {
                break;
            }
            sorted.clear();
            sorted.extend(idx.iter().map(|&i| (self.xs[i].0[f], self.ys[i] == Label::Derivable)));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0usize;
            for k in 0..n - 1 {
                if sorted[k].1 {
                    left_pos += 1;
                }
                let (a, b) = (sorted[k].0, sorted[k + 1].0);
                if a == b {
                    continue;
                }
                let nl = k + 1;
                let nr = n - nl;
                let w = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(total_pos - left_pos, nr)) / n as f64;
                if best.is_none_or(|(bw, _, _)| w < bw) {
                    let mut t = a + (b - a) / 2.0;
                    if t >= b {
                        t = a;
                    }
                    best = Some((w, f, t));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// In-place partition; returns the count of elements satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut store = 0;
    for i in 0..idx.len() {
        if pred(idx[i]) {
            idx.swap(store, i);
            store += 1;
        }
    }
    store
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    config: ForestConfig,
    oob_accuracy: Option<f64>,
}

impl RandomForest {
    /// Tree `t` bootstraps from stream `t` of a ChaCha generator seeded with
    /// `config.seed`, so the forest depends only on the seed and the data.
    pub fn fit(samples: &[(FeatureVector, Label)], config: &ForestConfig) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTraining);
        }
        let pos = samples.iter().filter(|s| s.1 == Label::Derivable).count();
        if pos == 0 || pos == samples.len() {
            return Err(Error::DegenerateLabels);
        }
        if config.n_trees == 0 {
            return Err(Error::DegenerateConfig("n_trees must be at least 1".into()));
        }
        let xs: Vec<FeatureVector> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<Label> = samples.iter().map(|s| s.1).collect();
        let n = samples.len();

        let mut trees = Vec::with_capacity(config.n_trees);
        let mut oob_votes = vec![(0usize, 0usize); n];
        for t in 0..config.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut in_bag = vec![false; n];
            for &i in &idx {
                in_bag[i] = true;
            }
            let mut grower = Grower { xs: &xs, ys: &ys, config, nodes: Vec::new() };
            grower.grow(&mut idx, 0, &mut rng);
            let tree = DecisionTree { nodes: grower.nodes };
            for (i, votes) in oob_votes.iter_mut().enumerate().filter(|(i, _)| !in_bag[*i]) {
                match tree.predict(&xs[i]) {
                    Label::Derivable => votes.0 += 1,
                    Label::Underivable => votes.1 += 1,
                }
            }
            trees.push(tree);
        }

        let mut scored = 0usize;
        let mut correct = 0usize;
        for (i, &(d, u)) in oob_votes.iter().enumerate() {
            if d + u == 0 {
                continue;
            }
            scored += 1;
            if majority(d, u) == ys[i] {
                correct += 1;
            }
        }
        let oob_accuracy = (scored > 0).then(|| correct as f64 / scored as f64);
        Ok(RandomForest { trees, config: *config, oob_accuracy })
    }

    /// A forest with no trees; `predict` refuses it.
    pub fn unfitted(config: ForestConfig) -> Self {
        RandomForest { trees: Vec::new(), config, oob_accuracy: None }
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Accuracy of out-of-bag votes over samples left out by at least one tree.
    pub fn oob_accuracy(&self) -> Option<f64> {
        self.oob_accuracy
    }

    /// Majority vote over trees, ties to `Derivable`.
    pub fn predict(&self, x: &FeatureVector) -> Result<Label> {
        if self.trees.is_empty() {
            return Err(Error::UnfittedModel);
        }
        let d = self.trees.iter().filter(|t| t.predict(x) == Label::Derivable).count();
        Ok(majority(d, self.trees.len() - d))
    }

    pub fn reversed(&self) -> Self {
        let mut f = self.clone();
        f.trees.reverse();
        f
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut enc = Encoder::new(out);
        enc.bytes(MAGIC)?;
        enc.u16(VERSION)?;
        enc.u32(N_FEATURES as u32)?;
        enc.u32(self.config.n_trees as u32)?;
        enc.u32(self.config.max_depth.map_or(0, |d| d as u32 + 1))?;
        enc.u32(self.config.min_samples_split as u32)?;
        enc.u32(self.config.features_per_split as u32)?;
        enc.u64(self.config.seed)?;
        enc.f64(self.oob_accuracy.unwrap_or(f64::NAN))?;
        enc.len(self.trees.len())?;
        for t in &self.trees {
            enc.len(t.nodes.len())?;
            for node in &t.nodes {
                match *node {
                    Node::Leaf(l) => {
                        enc.u8(0)?;
                        enc.u8(l.flag())?;
                    }
                    Node::Split { feature, threshold, left, right } => {
                        enc.u8(1)?;
                        enc.u32(feature as u32)?;
                        enc.f64(threshold)?;
                        enc.len(left)?;
                        enc.len(right)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut dec = Decoder::new(input);
        dec.magic(MAGIC, VERSION)?;
        let nf = dec.u32()? as usize;
        if nf != N_FEATURES {
            return Err(Error::Format(format!("expected {N_FEATURES} features, file has {nf}")));
        }
        let n_trees = dec.u32()? as usize;
        let max_depth = match dec.u32()? {
            0 => None,
            d => Some(d as usize - 1),
        };
        let min_samples_split = dec.u32()? as usize;
        let features_per_split = dec.u32()? as usize;
        let seed = dec.u64()?;
        let oob = dec.f64()?;
        let count = dec.len()?;
        let mut trees = Vec::with_capacity(count);
        for _ in 0..count {
            let n_nodes = dec.len()?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                nodes.push(match dec.u8()? {
                    0 => Node::Leaf(Label::from_flag(dec.u8()?).map_err(|e| Error::Format(e.to_string()))?),
                    1 => {
                        let feature = dec.u32()? as usize;
                        let threshold = dec.f64()?;
                        let left = dec.len()?;
                        let right = dec.len()?;
                        if feature >= N_FEATURES || left >= n_nodes || right >= n_nodes {
                            return Err(Error::Format("split refers outside the tree".into()));
                        }
                        Node::Split { feature, threshold, left, right }
                    }
                    tag => return Err(Error::Format(format!("unknown node tag {tag}"))),
                });
            }
            if nodes.is_empty() {
                return Err(Error::Format("empty tree".into()));
            }
            trees.push(DecisionTree { nodes });
        }
        dec.finish()?;
        Ok(RandomForest {
            trees,
            config: ForestConfig { n_trees, max_depth, min_samples_split, features_per_split, seed },
            oob_accuracy: (!oob.is_nan()).then_some(oob),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

/// One row of the annotation CSV `deck_id,slide_index,line_index,label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub deck_id: String,
    pub slide_index: u32,
    pub line_index: usize,
    pub label: u8,
}

pub fn read_annotations<R: Read>(input: R) -> Result<Vec<Annotation>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let a: Annotation = row.map_err(|e| Error::Schema(e.to_string()))?;
        Label::from_flag(a.label)?;
        out.push(a);
    }
    Ok(out)
}

fn paper_for<'a>(papers: &'a [PaperDoc], deck_id: &str) -> Option<&'a PaperDoc> {
    papers.iter().find(|p| p.paper_id == deck_id)
}

/// Featurizes each annotated line against its paired paper (`paper_id == deck_id`).
pub fn training_set(
    annotations: &[Annotation],
    decks: &[Deck],
    papers: &[PaperDoc],
) -> Result<Vec<(FeatureVector, Label)>> {
    let mut sentence_cache: HashMap<&str, Vec<TokenSeq>> = HashMap::new();
    let mut out = Vec::with_capacity(annotations.len());
    for a in annotations {
        let deck = decks
            .iter()
            .find(|d| d.deck_id == a.deck_id)
            .ok_or_else(|| Error::Schema(format!("annotation refers to unknown deck {}", a.deck_id)))?;
        let paper = paper_for(papers, &a.deck_id).ok_or_else(|| Error::MisalignedCorpora(a.deck_id.clone()))?;
        let line = deck
            .slides
            .iter()
            .find(|s| s.slide_index == a.slide_index)
            .and_then(|s| s.content_lines.get(a.line_index))
            .ok_or_else(|| {
                Error::Schema(format!(
                    "annotation {}:{}:{} has no matching line",
                    a.deck_id, a.slide_index, a.line_index
                ))
            })?;
        let sentences = sentence_cache
            .entry(paper.paper_id.as_str())
            .or_insert_with(|| paper_sentence_tokens(paper));
        out.push((featurize(line, sentences)?, Label::from_flag(a.label)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub lines_total: usize,
    pub lines_removed: usize,
    pub slides_dropped: usize,
    /// Decks without a paper; passed through untouched.
    pub decks_unpaired: usize,
}

/// Drops lines predicted underivable (and token-less lines), then slides
/// left without lines. Only for training data; evaluation decks stay raw.
pub fn filter_corpus(
    decks: &[Deck],
    papers: &[PaperDoc],
    forest: &RandomForest,
) -> Result<(Vec<Deck>, FilterReport)> {
    let mut report = FilterReport::default();
    let mut out = Vec::with_capacity(decks.len());
    for deck in decks {
        let Some(paper) = paper_for(papers, &deck.deck_id) else {
            report.decks_unpaired += 1;
            out.push(deck.clone());
            continue;
        };
        let sentences = paper_sentence_tokens(paper);
        let mut slides = Vec::with_capacity(deck.slides.len());
        for slide in &deck.slides {
            let mut kept = Vec::with_capacity(slide.content_lines.len());
            for line in &slide.content_lines {
                report.lines_total += 1;
                let keep = match featurize(line, &sentences) {
                    Ok(x) => forest.predict(&x)? == Label::Derivable,
                    Err(Error::EmptyLine) => false,
                    Err(e) => return Err(e),
                };
                if keep {
                    kept.push(line.clone());
                } else {
                    report.lines_removed += 1;
                }
            }
            if kept.is_empty() {
                report.slides_dropped += 1;
                continue;
            }
            let mut s = slide.clone();
            s.content_lines = kept;
            slides.push(s);
        }
        out.push(Deck { deck_id: deck.deck_id.clone(), slides });
    }
    Ok((out, report))
}
