//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Runs without the test harness (`harness = false`), so `cargo test` prints
//! the table as-is.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use d2s_core::data_filter::{
    filter_corpus, read_annotations, training_set, FeatureVector, ForestConfig, Label, RandomForest, N_FEATURES,
};
use d2s_core::dense_ir::{Snippet, SnippetIndex};
use d2s_core::doc_model::{ingest_paper, Deck, FigureAsset, FigureKind, PaperDoc, Section, SlideRecord};
use d2s_core::embedder::{contrastive_objective, ContrastiveExample, EmbeddingVector, HashedTfidfEmbedder, TextEncoder};
use d2s_core::embedder::{TrainConfig, TrainingPair};
use d2s_core::eval::{eval_figures, eval_generation, CopyGenerator};
use d2s_core::generation::{split_sentences, SlideDraft};
use d2s_core::keyword_tree::{HeaderTree, DEFAULT_MATCH_THRESHOLD};
use d2s_core::pipeline::{EngineConfig, PaperSession};
use d2s_core::textkit::{idf_recall, levenshtein_ratio, precision_at_k, rouge, tokenize, IdfTable, TokenSeq};
use oracles::{
    brute_force_top_k, central_difference, descendants_by_label, levenshtein_ratio_oracle, precision_cases,
    rouge_oracle, separable_pairs,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).expect("fixture present")
}

fn fixture_corpus() -> (Vec<PaperDoc>, Vec<Deck>) {
    let paper = ingest_paper(fixture_text("sample_paper.json").as_bytes()).unwrap();
    let deck = Deck::from_json(fixture_text("sample_deck.json").as_bytes()).unwrap();
    (vec![paper], vec![deck])
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_tokens(rng: &mut ChaCha8Rng) -> Vec<String> {
    let alphabet = rng.gen_range(1..=5u8);
    (0..rng.gen_range(0..=12)).map(|_| ((b'a' + rng.gen_range(0..alphabet)) as char).to_string()).collect()
}

fn rouge_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let pairs: Vec<(Vec<String>, Vec<String>)> = (0..1000).map(|_| (random_tokens(&mut rng), random_tokens(&mut rng))).collect();
    let start = Instant::now();
    let got: Vec<[f64; 9]> = pairs
        .iter()
        .map(|(a, b)| rouge(&TokenSeq::from_tokens(a.clone()), &TokenSeq::from_tokens(b.clone())).to_array())
        .collect();
    let elapsed = start.elapsed();
    let mut worst: f64 = 0.0;
    for ((a, b), g) in pairs.iter().zip(&got) {
        let want = rouge_oracle(a, b);
        for (x, y) in g.iter().zip(want) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 pairs, max deviation {worst:e}, {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

struct Corpus {
    text: Vec<Vec<f64>>,
    kw: Vec<Vec<f64>>,
    alpha: f64,
    index: SnippetIndex,
    queries: Vec<Vec<f64>>,
}

/// 100 random corpora of 500 snippets in 128 dimensions. Keywords repeat
/// across runs of snippets the way section keywords do.
fn mips_corpora() -> Vec<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    (0..100)
        .map(|_| {
            let text: Vec<Vec<f64>> = (0..500).map(|_| unit(&mut rng, 128)).collect();
            let mut kw: Vec<Vec<f64>> = Vec::with_capacity(500);
            while kw.len() < 500 {
                let v = unit(&mut rng, 128);
                for _ in 0..rng.gen_range(1..=6) {
                    kw.push(v.clone());
                }
            }
            kw.truncate(500);
            let alpha = rng.gen_range(0.0..=1.0);
            let snippets = (0..500)
                .map(|i| Snippet {
                    snippet_id: i,
                    section_index: 0,
                    sentence_range: (0, 1),
                    sentences: vec![String::new()],
                    keyword: String::new(),
                })
                .collect();
            let wrap = |v: &[Vec<f64>]| v.iter().map(|x| EmbeddingVector::new(x.clone()).unwrap()).collect();
            let index = SnippetIndex::from_vectors(snippets, wrap(&text), wrap(&kw), alpha).unwrap();
            let queries = (0..3).map(|_| unit(&mut rng, 128)).collect();
            Corpus { text, kw, alpha, index, queries }
        })
        .collect()
}

fn ranked(index: &SnippetIndex, q: &[f64], k: usize) -> Vec<usize> {
    index
        .retrieve_vector(&EmbeddingVector::new(q.to_vec()).unwrap(), k)
        .unwrap()
        .into_iter()
        .map(|c| c.snippet_id)
        .collect()
}

fn mips_exactness(corpora: &[Corpus]) -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for (ci, c) in corpora.iter().enumerate() {
        for q in &c.queries {
            let got = ranked(&c.index, q, 10);
            let want = brute_force_top_k(&c.text, &c.kw, q, c.alpha, 10);
            ensure(got == want, || format!("corpus {ci}: {got:?} != {want:?}"))?;
            checks += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{} corpora, {checks} queries, {:.0} ms", corpora.len(), elapsed.as_secs_f64() * 1e3))
}

fn ranking_endpoints(corpora: &[Corpus]) -> Outcome {
    for (ci, c) in corpora.iter().enumerate() {
        let text_only = c.index.with_alpha(1.0).unwrap();
        let kw_only = c.index.with_alpha(0.0).unwrap();
        for q in &c.queries {
            let want_text = brute_force_top_k(&c.text, &c.text, q, 1.0, 500);
            let want_kw = brute_force_top_k(&c.kw, &c.kw, q, 1.0, 500);
            ensure(ranked(&text_only, q, 500) == want_text, || format!("corpus {ci}: alpha=1 differs from text argsort"))?;
            ensure(ranked(&kw_only, q, 500) == want_kw, || format!("corpus {ci}: alpha=0 differs from keyword argsort"))?;
        }
    }
    Ok(format!("{} corpora, full 500-item orderings", corpora.len()))
}

fn sparse(rng: &mut ChaCha8Rng, dim: usize) -> Vec<(usize, f64)> {
    let mut cols: Vec<usize> = (0..dim).collect();
    cols.shuffle(rng);
    cols.truncate(rng.gen_range(1..=4));
    cols.into_iter().map(|c| (c, rng.gen_range(0.2..2.0))).collect()
}

fn contrastive_trainer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let dim = 8;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p: Vec<f64> = (0..dim * dim)
            .map(|i| if i % (dim + 1) == 0 { 1.0 } else { 0.0 } + rng.gen_range(-0.3..0.3))
            .collect();
        let examples: Vec<ContrastiveExample> = (0..rng.gen_range(1..=4))
            .map(|_| ContrastiveExample {
                query: sparse(&mut rng, dim),
                positive: sparse(&mut rng, dim),
                negatives: (0..rng.gen_range(1..=4)).map(|_| sparse(&mut rng, dim)).collect(),
            })
            .collect();
        let t = rng.gen_range(0.5..2.0);
        let (_, analytic) = contrastive_objective(&p, dim, &examples, t);
        let numeric = central_difference(|x| contrastive_objective(x, dim, &examples, t).0, &p, 1e-5);
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-6));
        }
    }
    ensure(worst < 1e-4, || format!("gradient relative error {worst:e}"))?;

    let base = HashedTfidfEmbedder::new(128, 3);
    let pairs = separable_pairs(&base, 50);
    let training: Vec<TrainingPair> = pairs
        .iter()
        .enumerate()
        .map(|(i, (t, c))| TrainingPair {
            title: t.clone(),
            positive_content: c.clone(),
            negatives: pairs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, (_, n))| n.clone()).collect(),
        })
        .collect();
    let (trained, report) = base.train_contrastive(&training, &TrainConfig::default()).unwrap();
    let accuracy = |e: &HashedTfidfEmbedder| {
        let contents: Vec<&str> = pairs.iter().map(|(_, c)| c.as_str()).collect();
        let cv = e.encode_batch(&contents).unwrap();
        let hits = pairs
            .iter()
            .enumerate()
            .filter(|(i, (t, _))| {
                let q = e.embed(t);
                let scores: Vec<f64> = cv.iter().map(|v| q.dot(v)).collect();
                scores.iter().enumerate().all(|(j, s)| j == *i || *s < scores[*i])
            })
            .count();
        hits as f64 / pairs.len() as f64
    };
    let (before, after) = (accuracy(&base), accuracy(&trained));
    ensure(after >= 0.9, || format!("post-training accuracy {after}"))?;
    let first: Vec<f64> = report.loss_history.iter().take(10).copied().collect();
    ensure(first.windows(2).all(|w| w[1] <= w[0]), || format!("loss rose in first epochs: {first:?}"))?;
    Ok(format!("grad rel err {worst:.1e}; accuracy {before:.2} -> {after:.2}; loss {:.3} -> {:.3}", first[0], report.final_loss))
}

fn tree_paper(labels: &[String]) -> PaperDoc {
    PaperDoc {
        paper_id: "t".into(),
        title: "T".into(),
        sections: labels
            .iter()
            .map(|l| Section { header_label: l.clone(), header_text: format!("Header {l}"), sentences: vec!["x.".into()] })
            .collect(),
        figures: vec![],
    }
}

fn keyword_tree() -> Outcome {
    let labels: Vec<String> = ["1", "1.1", "1.1.1", "1.2", "2"].iter().map(|s| s.to_string()).collect();
    let tree = HeaderTree::build(&tree_paper(&labels));
    let d: Vec<&str> = tree.descendants(0).iter().map(|&i| tree.node(i).label.as_str()).collect();
    ensure(d == ["1.1", "1.1.1", "1.2"], || format!("descendants(1) = {d:?}"))?;
    let m = tree.match_title("Header 1.2", DEFAULT_MATCH_THRESHOLD);
    ensure(m.ratio == Some(1.0) && m.matched_header == Some(3), || format!("exact title matched {m:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for t in 0..100 {
        let mut labels = Vec::new();
        let mut stack: Vec<(String, u32)> = vec![(String::new(), 0)];
        for _ in 0..rng.gen_range(1..30) {
            // descend, stay, or climb, then emit the next sibling
            match rng.gen_range(0..3) {
                0 if stack.len() < 5 && !labels.is_empty() => stack.push((labels.last().cloned().unwrap(), 0)),
                1 if stack.len() > 1 => {
                    stack.pop();
                }
                _ => {}
            }
            let (prefix, count) = stack.last_mut().unwrap();
            *count += 1;
            let label = if prefix.is_empty() { count.to_string() } else { format!("{prefix}.{count}") };
            labels.push(label);
        }
        let tree = HeaderTree::build(&tree_paper(&labels));
        for root in 0..labels.len() {
            let got: BTreeSet<usize> = tree.descendants(root).into_iter().collect();
            ensure(got == descendants_by_label(&labels, root), || format!("tree {t}: {labels:?} at {root}"))?;
        }
    }
    Ok("fixture descendants, exact match 1.0, 100 random trees".into())
}

fn levenshtein() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let word = |rng: &mut ChaCha8Rng, n: usize| -> String {
        (0..rng.gen_range(0..=n)).map(|_| *b"abcdeAB ".choose(rng).unwrap() as char).collect()
    };
    for _ in 0..1000 {
        let (a, b) = (word(&mut rng, 16), word(&mut rng, 16));
        let (got, want) = (levenshtein_ratio(&a, &b), levenshtein_ratio_oracle(&a, &b));
        ensure(got == want, || format!("{a:?} vs {b:?}: {got} != {want}"))?;
    }
    let mut matched = 0;
    for _ in 0..1000 {
        let header: String = (0..rng.gen_range(20..40)).map(|_| (b'a' + rng.gen_range(0..26u8)) as char).collect();
        let mut title = header.clone();
        if rng.gen_bool(0.5) {
            let at = rng.gen_range(0..title.len());
            title.replace_range(at..at + 1, "#");
        }
        let before = levenshtein_ratio(&title, &header);
        if before < DEFAULT_MATCH_THRESHOLD {
            continue;
        }
        matched += 1;
        // noise: a character the header does not contain
        let noise = *b"#0123456789~@%".choose(&mut rng).unwrap() as char;
        let noisy = format!("{title}{noise}");
        let after = levenshtein_ratio(&noisy, &header);
        ensure(after <= before, || format!("{title:?} + noise raised {before} to {after}"))?;
    }
    Ok(format!("1000 oracle pairs exact; {matched} matched titles stay monotone"))
}

fn blobs(rng: &mut ChaCha8Rng, n: usize) -> Vec<(FeatureVector, Label)> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: [f64; N_FEATURES] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
        let m = (x[0] + x[1] + x[2]) / 3.0 - 0.5;
        if m.abs() >= 0.15 {
            out.push((FeatureVector(x), if m > 0.0 { Label::Derivable } else { Label::Underivable }));
        }
    }
    out
}

fn random_forest() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let train = blobs(&mut rng, 200);
    let test = blobs(&mut rng, 200);
    let config = ForestConfig::default();
    let a = RandomForest::fit(&train, &config).unwrap();
    let b = RandomForest::fit(&train, &config).unwrap();
    let preds = |f: &RandomForest| test.iter().map(|(x, _)| f.predict(x).unwrap()).collect::<Vec<_>>();
    let pa = preds(&a);
    ensure(pa == preds(&b) && a.to_bytes() == b.to_bytes(), || "same seed, different forests".into())?;
    let acc = pa.iter().zip(&test).filter(|(p, (_, y))| *p == y).count() as f64 / test.len() as f64;
    ensure(acc >= 0.95, || format!("held-out accuracy {acc}"))?;

    let (papers, decks) = fixture_corpus();
    let rows = read_annotations(fixture_text("annotations.csv").as_bytes()).unwrap();
    let forest = RandomForest::fit(&training_set(&rows, &decks, &papers).unwrap(), &config).unwrap();
    let (once, _) = filter_corpus(&decks, &papers, &forest).unwrap();
    let (twice, _) = filter_corpus(&once, &papers, &forest).unwrap();
    ensure(once == twice, || "filter_corpus not idempotent".into())?;
    Ok(format!("held-out accuracy {acc:.3}; deterministic; filter idempotent"))
}

fn idf_recall_ordinal() -> Outcome {
    let (papers, decks) = fixture_corpus();
    let session = PaperSession::build(papers[0].clone(), &EngineConfig::default(), None).unwrap();
    let snippets: Vec<TokenSeq> = session.index.snippets().iter().map(|s| tokenize(&s.text())).collect();
    let idf = IdfTable::new(&snippets).unwrap();
    let contents: Vec<TokenSeq> = decks[0].slides.iter().map(|s| tokenize(&s.content())).filter(|t| !t.is_empty()).collect();
    let score = |ids: &[usize], c: &TokenSeq| idf_recall(c, &TokenSeq::concat(ids.iter().map(|&i| &snippets[i])), &idf).unwrap();
    let mut best = 0.0;
    for c in &contents {
        let own: Vec<f64> = (0..snippets.len()).map(|i| score(&[i], c)).collect();
        let mut order: Vec<usize> = (0..snippets.len()).collect();
        order.sort_by(|&a, &b| own[b].total_cmp(&own[a]).then(a.cmp(&b)));
        best += score(&order[..10], c);
    }
    best /= contents.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let all: Vec<usize> = (0..snippets.len()).collect();
    let mut random = 0.0;
    for _ in 0..100 {
        for c in &contents {
            let ids: Vec<usize> = all.choose_multiple(&mut rng, 10).copied().collect();
            random += score(&ids, c);
        }
    }
    random /= 100.0 * contents.len() as f64;
    ensure(best - random >= 0.1, || format!("best-overlap {best:.4} vs random {random:.4}"))?;
    Ok(format!("best-overlap {best:.4} vs random {random:.4} over {} slides", contents.len()))
}

fn figure_selection() -> Outcome {
    let fig = |id: &str, caption: &str| FigureAsset {
        figure_id: id.into(),
        kind: FigureKind::Figure,
        caption: caption.into(),
        uri: format!("{id}.png"),
    };
    let paper = PaperDoc {
        paper_id: "figs".into(),
        title: "Figures".into(),
        sections: vec![Section { header_label: "1".into(), header_text: "Body".into(), sentences: vec!["Text here.".into()] }],
        figures: vec![
            fig("a", "Loss curves for three optimizers"),
            fig("b", "Throughput of the sharded key value store"),
            fig("c", "Ablation of the attention heads"),
        ],
    };
    let slide = SlideRecord {
        deck_id: "figs".into(),
        slide_index: 0,
        title: "Throughput of the sharded key value store".into(),
        content_lines: vec!["fast".into()],
        linked_figures: vec!["b".into()],
    };
    let decks = vec![Deck { deck_id: "figs".into(), slides: vec![slide] }];
    let p = eval_figures(&[paper], &decks, &EngineConfig::default(), None).unwrap().unwrap();
    ensure(p.p1 == 1.0, || format!("p@1 = {}", p.p1))?;
    let cases = precision_cases();
    for (ranked, relevant, k, want) in &cases {
        let rel: HashSet<u32> = relevant.iter().copied().collect();
        let got = precision_at_k(ranked, &rel, *k).unwrap();
        ensure((got - want).abs() < 1e-12, || format!("{ranked:?} {relevant:?} k={k}: {got} != {want}"))?;
    }
    Ok(format!("caption-equals-title p@1 = 1.0; {} precision cases", cases.len()))
}

fn d2s(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_d2s"))
        .args(args)
        .env_remove("D2S_GEN_URL")
        .env_remove("D2S_EMBED_URL")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("d2s {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn deck_titles() -> Vec<String> {
    let (_, decks) = fixture_corpus();
    decks[0].slides.iter().map(|s| s.title.clone()).filter(|t| !tokenize(t).is_empty()).collect()
}

fn cli_generate() -> Outcome {
    let paper = fixtures().join("sample_paper.json");
    let titles = deck_titles();
    let mut args = vec!["generate", "--paper", paper.to_str().unwrap(), "--format", "json"];
    for t in &titles {
        args.extend(["--title", t.as_str()]);
    }
    let start = Instant::now();
    let stdout = d2s(&args)?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    let text = String::from_utf8(stdout).map_err(|e| e.to_string())?;
    let drafts: Vec<SlideDraft> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    ensure(drafts.len() == titles.len(), || format!("{} drafts for {} titles", drafts.len(), titles.len()))?;
    let mut bullets = 0;
    for d in &drafts {
        ensure(!d.bullets.is_empty(), || format!("{:?} has no bullets", d.title))?;
        let context: HashSet<&str> = split_sentences(&d.context).into_iter().collect();
        let mut seen = HashSet::new();
        let mut total = 0;
        for b in &d.bullets {
            ensure(context.contains(b.as_str()), || format!("{b:?} not verbatim in context"))?;
            let t = tokenize(b);
            total += t.len();
            for w in t.tokens().windows(3) {
                ensure(seen.insert(w.to_vec()), || format!("{:?}: repeated trigram {w:?}", d.title))?;
            }
        }
        ensure(total <= 128, || format!("{:?}: {total} bullet tokens", d.title))?;
        bullets += d.bullets.len();
    }
    Ok(format!("{} titles, {bullets} bullets, {:.0} ms", titles.len(), elapsed.as_secs_f64() * 1e3))
}

fn copy_generator() -> Outcome {
    let (papers, decks) = fixture_corpus();
    let score = eval_generation(&papers, &decks, &EngineConfig::default(), None, &CopyGenerator).unwrap();
    let v = score.rouge.to_array();
    ensure(v.iter().all(|&x| x == 1.0), || format!("{v:?}"))?;
    Ok(format!("all nine F/P/R = 1.0 over {} slides", score.slides))
}

/// filter, train-embedder, generate and eval through the binary.
fn pipeline_run(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let f = fixtures();
    let paper = f.join("sample_paper.json");
    let deck = f.join("sample_deck.json");
    let p = |x: &Path| x.to_str().unwrap().to_string();
    let filtered = dir.join("filtered");
    let emb = dir.join("embedder.bin");
    let reports = dir.join("reports");
    let mut outputs = Vec::new();
    outputs.push(("filter".into(), d2s(&[
        "--seed", "7", "filter", "--papers", &p(&paper), "--decks", &p(&deck),
        "--annotations", &p(&f.join("annotations.csv")), "--trees", "25",
        "--save-model", &p(&dir.join("forest.bin")), "--out-dir", &p(&filtered),
    ])?));
    outputs.push(("train".into(), d2s(&[
        "--seed", "7", "train-embedder", "--decks", &p(&filtered.join("tilecache.json")),
        "--out", &p(&emb), "--epochs", "20",
    ])?));
    let titles = deck_titles();
    let mut args = vec!["--seed".to_string(), "7".into(), "--embedder".into(), p(&emb), "generate".into(), "--paper".into(), p(&paper), "--format".into(), "json".into()];
    for t in &titles {
        args.extend(["--title".to_string(), t.clone()]);
    }
    let args_ref: Vec<&str> = args.iter().map(String::as_str).collect();
    outputs.push(("drafts".into(), d2s(&args_ref)?));
    d2s(&["--seed", "7", "eval", "--papers", &p(&paper), "--decks", &p(&deck), "--report-dir", &p(&reports)])?;
    for name in ["forest.bin", "embedder.bin", "filtered/tilecache.json", "reports/report.json", "reports/report.txt"] {
        outputs.push((name.into(), std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?));
    }
    Ok(outputs)
}

fn determinism() -> Outcome {
    let root = std::env::temp_dir().join(format!("d2s-acceptance-{}", std::process::id()));
    let a = pipeline_run(&root.join("a"))?;
    let b = pipeline_run(&root.join("b"))?;
    let _ = std::fs::remove_dir_all(&root);
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical across two seeded runs", a.len()))
}

fn run(n: usize, name: &str, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
        .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into())));
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS  {n:>2}  {name:<28} {detail} [{secs:.2}s]");
            true
        }
        Err(why) => {
            println!("FAIL  {n:>2}  {name:<28} {why} [{secs:.2}s]");
            false
        }
    }
}

fn main() {
    let corpora = mips_corpora();
    let results = [
        run(1, "rouge oracle equivalence", rouge_oracle_equivalence),
        run(2, "mips exactness", || mips_exactness(&corpora)),
        run(3, "ranking endpoints", || ranking_endpoints(&corpora)),
        run(4, "contrastive trainer", contrastive_trainer),
        run(5, "keyword tree", keyword_tree),
        run(6, "levenshtein ratio", levenshtein),
        run(7, "random forest", random_forest),
        run(8, "idf-recall ordinal sanity", idf_recall_ordinal),
        run(9, "figure selection", figure_selection),
        run(10, "cli generate end-to-end", cli_generate),
        run(11, "copy-generator rouge", copy_generator),
        run(12, "determinism", determinism),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
