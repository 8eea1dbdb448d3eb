mod common;

use common::oracles::{argsort_by, brute_force_top_k};
use d2s_core::dense_ir::{snippetize, Bm25, Snippet, SnippetIndex};
use d2s_core::doc_model::ingest_paper;
use d2s_core::embedder::{EmbeddingVector, HashedTfidfEmbedder};
use d2s_core::keyword_tree::HeaderTree;
use d2s_core::textkit::tokenize;
use d2s_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAPER: &str = include_str!("../fixtures/sample_paper.json");

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn dummy(i: usize) -> Snippet {
    Snippet { snippet_id: i, section_index: 0, sentence_range: (0, 1), sentences: vec![format!("s{i}")], keyword: "k".into() }
}

/// Random corpus; every tenth snippet duplicates its predecessor to force ties.
fn corpus(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut text: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut kw: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        if i % 10 == 9 {
            text.push(text[i - 1].clone());
            kw.push(kw[i - 1].clone());
        } else {
            text.push(unit(rng, dim));
            kw.push(unit(rng, dim));
        }
    }
    (text, kw)
}

fn index(text: &[Vec<f64>], kw: &[Vec<f64>], alpha: f64) -> SnippetIndex {
    let wrap = |v: &[Vec<f64>]| v.iter().map(|x| EmbeddingVector::new(x.clone()).unwrap()).collect();
    SnippetIndex::from_vectors((0..text.len()).map(dummy).collect(), wrap(text), wrap(kw), alpha).unwrap()
}

fn ids(idx: &SnippetIndex, q: &[f64], k: usize) -> Vec<usize> {
    idx.retrieve_vector(&EmbeddingVector::new(q.to_vec()).unwrap(), k)
        .unwrap()
        .into_iter()
        .map(|c| c.snippet_id)
        .collect()
}

#[test]
fn top_k_equals_exhaustive_ranking() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (text, kw) = corpus(&mut rng, 200, 32);
        let alpha = rng.gen_range(0.0..=1.0);
        let idx = index(&text, &kw, alpha);
        for k in [1, 10, 200, 500] {
            let q = unit(&mut rng, 32);
            assert_eq!(ids(&idx, &q, k), brute_force_top_k(&text, &kw, &q, alpha, k));
        }
    }
}

#[test]
fn alpha_endpoints_reduce_to_single_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let (text, kw) = corpus(&mut rng, 120, 16);
    for _ in 0..10 {
        let q = unit(&mut rng, 16);
        assert_eq!(ids(&index(&text, &kw, 1.0), &q, 120), argsort_by(&text, &q, 120));
        assert_eq!(ids(&index(&text, &kw, 0.0), &q, 120), argsort_by(&kw, &q, 120));
    }
}

#[test]
fn bad_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (text, kw) = corpus(&mut rng, 5, 4);
    let idx = index(&text, &kw, 0.5);
    assert!(ids(&idx, &unit(&mut rng, 4), 0).is_empty());
    assert!(matches!(
        idx.retrieve_vector(&EmbeddingVector::zeros(3), 1),
        Err(Error::DimensionMismatch { expected: 4, actual: 3 })
    ));
    assert!(matches!(idx.with_alpha(1.5), Err(Error::AlphaOutOfRange(_))));
    let enc = HashedTfidfEmbedder::new(4, 0);
    assert!(matches!(idx.retrieve("  ...  ", &enc, 3), Err(Error::EmptyTitle)));
}

fn fixture_index() -> (SnippetIndex, HashedTfidfEmbedder) {
    let doc = ingest_paper(PAPER.as_bytes()).unwrap();
    let tree = HeaderTree::build(&doc);
    let snippets = snippetize(&doc, &tree, 4).unwrap();
    let texts: Vec<String> = snippets.iter().map(Snippet::text).collect();
    let enc = HashedTfidfEmbedder::new(128, 0).fit_idf(&texts).unwrap();
    (SnippetIndex::build(snippets, &enc, 0.75).unwrap(), enc)
}

#[test]
fn fixture_title_finds_its_section() {
    let (idx, enc) = fixture_index();
    let top = idx.retrieve("Admission Control", &enc, 10).unwrap();
    assert_eq!(top.len(), 10);
    assert_eq!(idx.snippet(top[0].snippet_id).keyword, "Admission Control");
    assert!(top.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn context_respects_budget_at_sentence_boundaries() {
    let (idx, enc) = fixture_index();
    let top = idx.retrieve("Results", &enc, 10).unwrap();
    for budget in [0, 5, 37, 200, 1024] {
        let ctx = idx.context_text(&top, budget);
        assert!(tokenize(&ctx).len() <= budget);
        let all: Vec<&str> = top.iter().flat_map(|c| idx.snippet(c.snippet_id).sentences.iter().map(String::as_str)).collect();
        let joined = all.join(" ");
        assert!(joined.starts_with(&ctx), "context is a prefix of ranked sentences");
        assert!(ctx.is_empty() || all.iter().any(|s| ctx.ends_with(s)));
    }
}

#[test]
fn index_file_round_trips() {
    let (idx, _) = fixture_index();
    let mut buf = Vec::new();
    idx.write_to(&mut buf).unwrap();
    assert_eq!(SnippetIndex::read_from(buf.as_slice()).unwrap(), idx);
    buf[0] = b'X';
    assert!(matches!(SnippetIndex::read_from(buf.as_slice()), Err(Error::Format(_))));
}

#[test]
fn bm25_prefers_exact_terms() {
    let docs = [tokenize("tile cache eviction"), tokenize("road network"), tokenize("cache cache cache")];
    let bm = Bm25::new(&docs);
    assert_eq!(bm.top_k(&tokenize("road"), 1), vec![1]);
    assert_eq!(bm.top_k(&tokenize("tile cache"), 1), vec![0]);
    assert_eq!(bm.score(&tokenize("absent"), 0), 0.0);
}
