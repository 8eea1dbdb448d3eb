//! Draft presentation slides from a parsed scientific paper.
//!
//! Given a paper and a slide title, the pipeline matches the title against
//! the paper's section headers, retrieves the most relevant four-sentence
//! snippets, selects bullet sentences from them and recommends figures.
//! The crate also carries the evaluation metrics (ROUGE, IDF-recall, p@k,
//! novel n-grams) and a random-forest filter for underivable slide lines.

mod codec;
mod http;

pub mod data_filter;
pub mod dense_ir;
pub mod doc_model;
pub mod embedder;
pub mod error;
pub mod eval;
pub mod figure_select;
pub mod generation;
pub mod keyword_tree;
pub mod pipeline;
pub mod textkit;

pub use error::{Error, Result};
