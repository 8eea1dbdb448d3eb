//! Batch evaluation over paired papers and decks.
//!
//! Decks pair with papers by `deck_id == paper_id`. Every figure is a macro
//! average over slides, accumulated in corpus order.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::dense_ir::Bm25;
use crate::doc_model::{Deck, PaperDoc, SlideRecord};
use crate::embedder::TextEncoder;
use crate::error::{Error, Result};
use crate::figure_select::{evaluate_figures, FigurePrecision};
use crate::generation::{GenerationQuery, Generator, GeneratorClient};
use crate::pipeline::{EngineConfig, PaperSession};
use crate::textkit::{idf_recall, ngrams, novel_ngram_ratio_in, rouge, tokenize, IdfTable, RougeReport, TokenSeq};

/// Pairs each deck with its paper.
pub fn align<'a>(papers: &'a [PaperDoc], decks: &'a [Deck]) -> Result<Vec<(&'a PaperDoc, &'a Deck)>> {
    decks
        .iter()
        .map(|d| {
            papers
                .iter()
                .find(|p| p.paper_id == d.deck_id)
                .map(|p| (p, d))
                .ok_or_else(|| Error::MisalignedCorpora(d.deck_id.clone()))
        })
        .collect()
}

fn sessions(
    pairs: &[(&PaperDoc, &Deck)],
    config: &EngineConfig,
    encoder: &Option<Arc<dyn TextEncoder>>,
) -> Result<Vec<PaperSession>> {
    pairs
        .iter()
        .map(|(p, _)| PaperSession::build((*p).clone(), config, encoder.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Retriever {
    Bm25,
    Dense { alpha: f64 },
}

impl Retriever {
    pub fn name(&self) -> String {
        match self {
            Retriever::Bm25 => "bm25".into(),
            Retriever::Dense { alpha } if *alpha == 1.0 => "dense-text".into(),
            Retriever::Dense { alpha } if *alpha == 0.0 => "dense-keyword".into(),
            Retriever::Dense { alpha } => format!("dense-mix(alpha={alpha})"),
        }
    }

    /// The four comparators: BM25, text only, keyword only, and the mix.
    pub fn standard(alpha: f64) -> Vec<Retriever> {
        vec![
            Retriever::Bm25,
            Retriever::Dense { alpha: 1.0 },
            Retriever::Dense { alpha: 0.0 },
            Retriever::Dense { alpha },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalScore {
    pub retriever: String,
    pub idf_recall: f64,
    pub slides: usize,
}

fn scorable(slide: &SlideRecord) -> Option<(TokenSeq, TokenSeq)> {
    let title = tokenize(&slide.title);
    let content = tokenize(&slide.content());
    (!title.is_empty() && !content.is_empty()).then_some((title, content))
}

/// Mean IDF-recall of each retriever's top-`k` against slide contents.
/// IDF weights come from the paired paper's snippets. Slides with an empty
/// title or content are skipped.
pub fn eval_retrieval(
    papers: &[PaperDoc],
    decks: &[Deck],
    config: &EngineConfig,
    encoder: Option<Arc<dyn TextEncoder>>,
    retrievers: &[Retriever],
    k: usize,
) -> Result<Vec<RetrievalScore>> {
    let pairs = align(papers, decks)?;
    let sessions = sessions(&pairs, config, &encoder)?;
    let mut sums = vec![0.0; retrievers.len()];
    let mut n = 0usize;
    for (session, (_, deck)) in sessions.iter().zip(&pairs) {
        let snippet_tokens: Vec<TokenSeq> = session.index.snippets().iter().map(|s| tokenize(&s.text())).collect();
        let idf = IdfTable::new(&snippet_tokens)?;
        let bm25 = Bm25::new(&snippet_tokens);
        let dense: Vec<Option<crate::dense_ir::SnippetIndex>> = retrievers
            .iter()
            .map(|r| match r {
                Retriever::Bm25 => Ok(None),
                Retriever::Dense { alpha } => session.index.with_alpha(*alpha).map(Some),
            })
            .collect::<Result<_>>()?;
        for slide in &deck.slides {
            let Some((title, content)) = scorable(slide) else { continue };
            n += 1;
            for ((r, idx), sum) in retrievers.iter().zip(&dense).zip(sums.iter_mut()) {
                let ids: Vec<usize> = match (r, idx) {
                    (Retriever::Bm25, _) => bm25.top_k(&title, k),
                    (Retriever::Dense { .. }, Some(idx)) => idx
                        .retrieve(&slide.title, session.encoder.as_ref(), k)?
                        .into_iter()
                        .map(|c| c.snippet_id)
                        .collect(),
                    (Retriever::Dense { .. }, None) => unreachable!(),
                };
                let retrieved = TokenSeq::concat(ids.iter().map(|&i| &snippet_tokens[i]));
                *sum += idf_recall(&content, &retrieved, &idf)?;
            }
        }
    }
    Ok(retrievers
        .iter()
        .zip(sums)
        .map(|(r, s)| RetrievalScore {
            retriever: r.name(),
            idf_recall: if n == 0 { 0.0 } else { s / n as f64 },
            slides: n,
        })
        .collect())
}

/// Produces slide lines for one original slide.
pub trait SlideGenerator {
    fn name(&self) -> &str;
    fn generate(&self, session: &PaperSession, slide: &SlideRecord, config: &EngineConfig) -> Result<Vec<String>>;
}

/// The full drafting pipeline with the extractive generator.
pub struct ExtractiveGenerator;

impl SlideGenerator for ExtractiveGenerator {
    fn name(&self) -> &str {
        "extractive"
    }

    fn generate(&self, session: &PaperSession, slide: &SlideRecord, config: &EngineConfig) -> Result<Vec<String>> {
        Ok(session.draft(&slide.title, &config.slide, &Generator::Extractive)?.bullets)
    }
}

/// The full drafting pipeline with a remote generator.
pub struct RemoteGenerator(pub GeneratorClient);

impl SlideGenerator for RemoteGenerator {
    fn name(&self) -> &str {
        "remote"
    }

    fn generate(&self, session: &PaperSession, slide: &SlideRecord, config: &EngineConfig) -> Result<Vec<String>> {
        Ok(session.draft(&slide.title, &config.slide, &Generator::Remote(self.0.clone()))?.bullets)
    }
}

/// Returns the original slide content; an upper bound for sanity checks.
pub struct CopyGenerator;

impl SlideGenerator for CopyGenerator {
    fn name(&self) -> &str {
        "copy"
    }

    fn generate(&self, _: &PaperSession, slide: &SlideRecord, _: &EngineConfig) -> Result<Vec<String>> {
        Ok(slide.content_lines.clone())
    }
}

/// Emits nothing; a lower bound.
pub struct EmptyGenerator;

impl SlideGenerator for EmptyGenerator {
    fn name(&self) -> &str {
        "empty"
    }

    fn generate(&self, _: &PaperSession, _: &SlideRecord, _: &EngineConfig) -> Result<Vec<String>> {
        Ok(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationScore {
    pub generator: String,
    pub rouge: RougeReport,
    pub slides: usize,
}

/// Mean ROUGE of generated text against the original slide content. Decks
/// are never filtered here. A generator that yields nothing scores zero.
pub fn eval_generation(
    papers: &[PaperDoc],
    decks: &[Deck],
    config: &EngineConfig,
    encoder: Option<Arc<dyn TextEncoder>>,
    generator: &dyn SlideGenerator,
) -> Result<GenerationScore> {
    let pairs = align(papers, decks)?;
    let sessions = sessions(&pairs, config, &encoder)?;
    let mut reports = Vec::new();
    for (session, (_, deck)) in sessions.iter().zip(&pairs) {
        for slide in &deck.slides {
            let Some((_, reference)) = scorable(slide) else { continue };
            let lines = match generator.generate(session, slide, config) {
                Ok(lines) => lines,
                Err(Error::EmptyGeneration | Error::EmptyContext) => Vec::new(),
                Err(e) => return Err(e),
            };
            let candidate = tokenize(&lines.join(" "));
            reports.push(rouge(&candidate, &reference));
        }
    }
    Ok(GenerationScore {
        generator: generator.name().to_string(),
        rouge: RougeReport::mean(&reports).unwrap_or_default(),
        slides: reports.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NovelNgramRow {
    pub n: usize,
    pub title_novel: f64,
    pub title_slides: usize,
    pub content_novel: f64,
    pub content_slides: usize,
}

fn paper_tokens(doc: &PaperDoc) -> Vec<TokenSeq> {
    std::iter::once(doc.title.as_str())
        .chain(doc.sections.iter().map(|s| s.header_text.as_str()))
        .chain(doc.sentences())
        .map(tokenize)
        .collect()
}

/// Share of slide n-grams (n = 1..=3) absent from the paper, per slide and
/// then averaged, for titles and contents separately. Paper n-grams do not
/// cross sentence or header boundaries.
pub fn eval_abstractiveness(decks: &[Deck], papers: &[PaperDoc]) -> Result<Vec<NovelNgramRow>> {
    let pairs = align(papers, decks)?;
    let sources: Vec<Vec<TokenSeq>> = pairs.iter().map(|(p, _)| paper_tokens(p)).collect();
    let mut rows = Vec::new();
    for n in 1..=3 {
        let mut acc = [(0.0, 0usize); 2];
        for (seqs, (_, deck)) in sources.iter().zip(&pairs) {
            let mut set: HashSet<&[String]> = HashSet::new();
            for s in seqs {
                set.extend(ngrams(s, n)?);
            }
            for slide in &deck.slides {
                for (slot, text) in [tokenize(&slide.title), tokenize(&slide.content())].iter().enumerate() {
                    match novel_ngram_ratio_in(text, &set, n) {
                        Ok(r) => {
                            acc[slot].0 += r;
                            acc[slot].1 += 1;
                        }
                        Err(Error::NoNgrams(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        let mean = |(s, c): (f64, usize)| if c == 0 { 0.0 } else { s / c as f64 };
        rows.push(NovelNgramRow {
            n,
            title_novel: mean(acc[0]),
            title_slides: acc[0].1,
            content_novel: mean(acc[1]),
            content_slides: acc[1].1,
        });
    }
    Ok(rows)
}

/// Slide-weighted p@1/3/5 over all papers that have figures.
pub fn eval_figures(
    papers: &[PaperDoc],
    decks: &[Deck],
    config: &EngineConfig,
    encoder: Option<Arc<dyn TextEncoder>>,
) -> Result<Option<FigurePrecision>> {
    let pairs = align(papers, decks)?;
    let sessions = sessions(&pairs, config, &encoder)?;
    let mut sums = [0.0; 3];
    let mut n = 0usize;
    for (session, (paper, deck)) in sessions.iter().zip(&pairs) {
        if paper.figures.is_empty() {
            continue;
        }
        match evaluate_figures(paper, &session.tree, &deck.slides, session.encoder.as_ref()) {
            Ok(p) => {
                let w = p.slides as f64;
                sums[0] += p.p1 * w;
                sums[1] += p.p3 * w;
                sums[2] += p.p5 * w;
                n += p.slides;
            }
            Err(Error::NoEligibleSlides) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((n > 0).then(|| {
        let n_f = n as f64;
        FigurePrecision { p1: sums[0] / n_f, p3: sums[1] / n_f, p5: sums[2] / n_f, slides: n }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub retrieval: Vec<RetrievalScore>,
    pub generation: GenerationScore,
    pub figures: Option<FigurePrecision>,
    pub abstractiveness: Vec<NovelNgramRow>,
}

/// Runs every measurement with the standard retriever set.
pub fn evaluate_all(
    papers: &[PaperDoc],
    decks: &[Deck],
    config: &EngineConfig,
    encoder: Option<Arc<dyn TextEncoder>>,
    generator: &dyn SlideGenerator,
) -> Result<EvalReport> {
    Ok(EvalReport {
        retrieval: eval_retrieval(
            papers,
            decks,
            config,
            encoder.clone(),
            &Retriever::standard(config.alpha),
            config.slide.k,
        )?,
        generation: eval_generation(papers, decks, config, encoder.clone(), generator)?,
        figures: eval_figures(papers, decks, config, encoder)?,
        abstractiveness: eval_abstractiveness(decks, papers)?,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned-column plain text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Retrieval (IDF-recall)");
        for r in &self.retrieval {
            let _ = writeln!(s, "  {:<24} {:>8.4}  slides={}", r.retriever, r.idf_recall, r.slides);
        }
        let g = &self.generation;
        let _ = writeln!(s, "Generation ({}, slides={})", g.generator, g.slides);
        let _ = writeln!(s, "  {:<8} {:>8} {:>8} {:>8}", "", "P", "R", "F");
        for (name, prf) in [("ROUGE-1", g.rouge.r1), ("ROUGE-2", g.rouge.r2), ("ROUGE-L", g.rouge.rl)] {
            let _ = writeln!(s, "  {:<8} {:>8.4} {:>8.4} {:>8.4}", name, prf.p, prf.r, prf.f);
        }
        match &self.figures {
            Some(f) => {
                let _ = writeln!(
                    s,
                    "Figures (slides={})\n  p@1 {:>8.4}  p@3 {:>8.4}  p@5 {:>8.4}",
                    f.slides, f.p1, f.p3, f.p5
                );
            }
            None => {
                let _ = writeln!(s, "Figures\n  no slide links a figure");
            }
        }
        let _ = writeln!(s, "Novel n-grams");
        let _ = writeln!(s, "  {:<4} {:>10} {:>10}", "n", "titles", "contents");
        for row in &self.abstractiveness {
            let _ = writeln!(
                s,
                "  {:<4} {:>9.1}% {:>9.1}%",
                row.n,
                row.title_novel * 100.0,
                row.content_novel * 100.0
            );
        }
        s
    }
}

/// Reconstructs the generator input for a slide, for dumps and debugging.
pub fn query_for(session: &PaperSession, title: &str, config: &EngineConfig) -> Result<GenerationQuery> {
    let keywords = session.tree.match_title(title, config.slide.match_threshold);
    let candidates = session.retrieve(title, config.slide.k)?;
    let context = session.index.context_text(&candidates, config.slide.context_tokens);
    crate::generation::compose_query(title, &keywords, &context)
}
