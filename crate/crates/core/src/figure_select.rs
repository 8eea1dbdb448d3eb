//! Figure and table recommendation by caption similarity.

use std::collections::HashSet;

use serde::Serialize;

use crate::doc_model::{FigureKind, PaperDoc, SlideRecord};
use crate::embedder::TextEncoder;
use crate::error::{Error, Result};
use crate::keyword_tree::{HeaderTree, KeywordSet, DEFAULT_MATCH_THRESHOLD};
use crate::textkit::precision_at_k;

pub const DEFAULT_RECOMMENDATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedFigure {
    pub id: String,
    pub kind: FigureKind,
    pub caption: String,
    pub uri: String,
    pub score: f64,
}

/// Every figure of the paper, best first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureRanking {
    pub figures: Vec<RankedFigure>,
}

impl FigureRanking {
    pub fn ids(&self) -> Vec<&str> {
        self.figures.iter().map(|f| f.id.as_str()).collect()
    }

    /// The first `n` entries.
    pub fn top(&self, n: usize) -> FigureRanking {
        FigureRanking { figures: self.figures.iter().take(n).cloned().collect() }
    }
}

/// The title, extended with `, `-joined keywords when any matched.
pub fn figure_query(title: &str, keywords: &KeywordSet) -> String {
    if keywords.is_empty() {
        title.to_string()
    } else {
        format!("{}, {}", title, keywords.keywords.join(", "))
    }
}

pub fn rank_figures(
    doc: &PaperDoc,
    title: &str,
    keywords: &KeywordSet,
    encoder: &dyn TextEncoder,
) -> Result<FigureRanking> {
    if doc.figures.is_empty() {
        return Err(Error::NoFigures);
    }
    let query = encoder.encode(&figure_query(title, keywords))?;
    let captions: Vec<&str> = doc.figures.iter().map(|f| f.caption.as_str()).collect();
    let vecs = encoder.encode_batch(&captions)?;
    let mut figures: Vec<RankedFigure> = doc
        .figures
        .iter()
        .zip(&vecs)
        .map(|(f, v)| RankedFigure {
            id: f.figure_id.clone(),
            kind: f.kind,
            caption: f.caption.clone(),
            uri: f.uri.clone(),
            score: query.dot(v),
        })
        .collect();
    // Stable: equal scores keep document order.
    figures.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(FigureRanking { figures })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigurePrecision {
    pub p1: f64,
    pub p3: f64,
    pub p5: f64,
    pub slides: usize,
}

/// Macro-averaged p@1/3/5 over slides that link at least one figure of `doc`.
pub fn evaluate_figures(
    doc: &PaperDoc,
    tree: &HeaderTree,
    slides: &[SlideRecord],
    encoder: &dyn TextEncoder,
) -> Result<FigurePrecision> {
    let mut sums = [0.0; 3];
    let mut n = 0usize;
    for slide in slides.iter().filter(|s| !s.linked_figures.is_empty()) {
        let keywords = tree.match_title(&slide.title, DEFAULT_MATCH_THRESHOLD);
        let ranking = rank_figures(doc, &slide.title, &keywords, encoder)?;
        let ids = ranking.ids();
        let relevant: HashSet<&str> = slide.linked_figures.iter().map(String::as_str).collect();
        for (s, k) in sums.iter_mut().zip([1, 3, 5]) {
            *s += precision_at_k(&ids, &relevant, k)?;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoEligibleSlides);
    }
    let n_f = n as f64;
    Ok(FigurePrecision { p1: sums[0] / n_f, p3: sums[1] / n_f, p5: sums[2] / n_f, slides: n })
}
