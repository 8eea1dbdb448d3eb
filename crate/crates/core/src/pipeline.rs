//! A paper with its header tree, snippet index and encoder, ready to draft slides.

use std::sync::Arc;

use crate::dense_ir::{snippetize, ScoredCandidate, Snippet, SnippetIndex, DEFAULT_ALPHA, DEFAULT_WINDOW};
use crate::doc_model::PaperDoc;
use crate::embedder::{HashedTfidfEmbedder, TextEncoder, DEFAULT_DIM};
use crate::error::{Error, Result};
use crate::figure_select::{rank_figures, FigureRanking};
use crate::generation::{build_slide, Generator, SlideDraft, SlideOptions};
use crate::keyword_tree::HeaderTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub alpha: f64,
    pub dim: usize,
    pub seed: u64,
    pub window: usize,
    pub slide: SlideOptions,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            alpha: DEFAULT_ALPHA,
            dim: DEFAULT_DIM,
            seed: 0,
            window: DEFAULT_WINDOW,
            slide: SlideOptions::default(),
        }
    }
}

fn default_encoder(snippets: &[Snippet], config: &EngineConfig) -> Result<Arc<dyn TextEncoder>> {
    let texts: Vec<String> = snippets.iter().map(Snippet::text).collect();
    let embedder = HashedTfidfEmbedder::new(config.dim, config.seed);
    Ok(Arc::new(if texts.is_empty() { embedder } else { embedder.fit_idf(&texts)? }))
}

pub struct PaperSession {
    pub doc: PaperDoc,
    pub tree: HeaderTree,
    pub index: SnippetIndex,
    pub encoder: Arc<dyn TextEncoder>,
}

impl std::fmt::Debug for PaperSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PaperSession")
            .field("paper_id", &self.doc.paper_id)
            .field("snippets", &self.index.len())
            .finish()
    }
}

impl PaperSession {
    /// Without an explicit encoder, a hashed embedder is fitted with IDF
    /// weights from this paper's snippets.
    pub fn build(
        doc: PaperDoc,
        config: &EngineConfig,
        encoder: Option<Arc<dyn TextEncoder>>,
    ) -> Result<Self> {
        let tree = HeaderTree::build(&doc);
        let snippets = snippetize(&doc, &tree, config.window)?;
        let encoder = match encoder {
            Some(e) => e,
            None => default_encoder(&snippets, config)?,
        };
        let index = SnippetIndex::build(snippets, encoder.as_ref(), config.alpha)?;
        Ok(PaperSession { doc, tree, index, encoder })
    }

    /// Reuses a saved index; it must have been built from this paper with
    /// the same window and an encoder of the same dimension.
    pub fn from_index(
        doc: PaperDoc,
        index: SnippetIndex,
        config: &EngineConfig,
        encoder: Option<Arc<dyn TextEncoder>>,
    ) -> Result<Self> {
        let tree = HeaderTree::build(&doc);
        if snippetize(&doc, &tree, config.window)? != index.snippets() {
            return Err(Error::Schema("index was built from a different paper".into()));
        }
        let encoder = match encoder {
            Some(e) => e,
            None => default_encoder(index.snippets(), config)?,
        };
        if encoder.dim() != index.dim() {
            return Err(Error::DimensionMismatch { expected: index.dim(), actual: encoder.dim() });
        }
        let index = index.with_alpha(config.alpha)?;
        Ok(PaperSession { doc, tree, index, encoder })
    }

    pub fn retrieve(&self, title: &str, k: usize) -> Result<Vec<ScoredCandidate>> {
        self.index.retrieve(title, self.encoder.as_ref(), k)
    }

    pub fn draft(&self, title: &str, options: &SlideOptions, generator: &Generator) -> Result<SlideDraft> {
        build_slide(&self.doc, &self.tree, &self.index, self.encoder.as_ref(), title, options, generator)
    }

    pub fn figures(&self, title: &str, threshold: f64) -> Result<FigureRanking> {
        let keywords = self.tree.match_title(title, threshold);
        rank_figures(&self.doc, title, &keywords, self.encoder.as_ref())
    }
}
