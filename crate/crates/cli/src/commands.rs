use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde_json::json;

use d2s_core::data_filter::{filter_corpus, read_annotations, training_set, ForestConfig, RandomForest};
use d2s_core::dense_ir::{RetrievalResponse, SnippetIndex};
use d2s_core::doc_model::{deck_stats, ingest_paper, Deck, PaperDoc, SlideRecord};
use d2s_core::embedder::{pairs_from_slides, HashedTfidfEmbedder, TrainConfig};
use d2s_core::eval::{evaluate_all, CopyGenerator, ExtractiveGenerator, RemoteGenerator, SlideGenerator};
use d2s_core::generation::{drafts_to_markdown, Generator, SlideOptions};
use d2s_core::pipeline::PaperSession;
use d2s_core::textkit::tokenize;

use crate::args::{Cli, Command, EvalGeneratorArg, Format, GeneratorArg};
use crate::{Runtime, UsageError};

pub fn read_paper(path: &Path) -> anyhow::Result<PaperDoc> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    ingest_paper(&raw).with_context(|| format!("in {}", path.display()))
}

pub fn read_deck(path: &Path) -> anyhow::Result<Deck> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Deck::from_json(&raw).with_context(|| format!("in {}", path.display()))
}

fn read_all<T>(paths: &[impl AsRef<Path>], f: fn(&Path) -> anyhow::Result<T>) -> anyhow::Result<Vec<T>> {
    paths.iter().map(|p| f(p.as_ref())).collect()
}

fn write_output(out: &mut dyn Write, path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// The generator a command asked for; remote needs `D2S_GEN_URL`.
pub fn generator_for(choice: GeneratorArg, rt: &Runtime) -> anyhow::Result<Generator> {
    match choice {
        GeneratorArg::Extractive => Ok(Generator::Extractive),
        GeneratorArg::Remote => rt
            .generator
            .clone()
            .map(Generator::Remote)
            .ok_or_else(|| UsageError("--generator remote requires D2S_GEN_URL".into()).into()),
    }
}

/// Runs one subcommand, writing its primary output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let rt = Runtime::from_args(&cli.global)?;
    let config = rt.config;
    match cli.command {
        Command::Ingest { paper, deck, out: dest } => {
            let text = match (paper, deck) {
                (Some(p), _) => serde_json::to_string_pretty(&read_paper(&p)?)?,
                (None, Some(d)) => read_deck(&d)?.to_json()?,
                (None, None) => return Err(UsageError("pass --paper or --deck".into()).into()),
            };
            write_output(out, dest.as_deref(), &format!("{text}\n"))
        }
        Command::Index { paper, out: dest } => {
            let session = PaperSession::build(read_paper(&paper)?, &config, rt.encoder.clone())?;
            let file = fs::File::create(&dest).with_context(|| format!("creating {}", dest.display()))?;
            let mut w = BufWriter::new(file);
            session.index.write_to(&mut w)?;
            w.flush()?;
            let summary = json!({
                "paper_id": session.doc.paper_id,
                "snippets": session.index.len(),
                "dim": session.index.dim(),
            });
            writeln!(out, "{summary}")?;
            Ok(())
        }
        Command::Retrieve { paper, title, k, index } => {
            let doc = read_paper(&paper)?;
            let session = match index {
                Some(path) => {
                    let file = fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
                    let idx = SnippetIndex::read_from(BufReader::new(file))?;
                    PaperSession::from_index(doc, idx, &config, rt.encoder.clone())?
                }
                None => PaperSession::build(doc, &config, rt.encoder.clone())?,
            };
            let candidates = session.retrieve(&title, k)?;
            let resp = RetrievalResponse::new(&session.index, &candidates);
            writeln!(out, "{}", serde_json::to_string(&resp)?)?;
            Ok(())
        }
        Command::Generate { paper, title, k, generator, format } => {
            let generator = generator_for(generator, &rt)?;
            let session = PaperSession::build(read_paper(&paper)?, &config, rt.encoder.clone())?;
            let options = SlideOptions { k, ..config.slide };
            let drafts = title
                .iter()
                .map(|t| session.draft(t, &options, &generator).with_context(|| format!("title {t:?}")))
                .collect::<anyhow::Result<Vec<_>>>()?;
            match format {
                Format::Markdown => out.write_all(drafts_to_markdown(&drafts).as_bytes())?,
                Format::Json => {
                    for d in &drafts {
                        writeln!(out, "{}", d.to_json())?;
                    }
                }
            }
            Ok(())
        }
        Command::Figures { paper, title, top } => {
            let session = PaperSession::build(read_paper(&paper)?, &config, rt.encoder.clone())?;
            let ranking = session.figures(&title, config.slide.match_threshold)?.top(top);
            writeln!(out, "{}", serde_json::to_string(&ranking)?)?;
            Ok(())
        }
        Command::Filter { papers, decks, annotations, model, save_model, trees, out_dir } => {
            let papers = read_all(&papers, read_paper)?;
            let decks = read_all(&decks, read_deck)?;
            let forest = match (model, annotations) {
                (Some(path), _) => {
                    let file = fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
                    RandomForest::read_from(BufReader::new(file))?
                }
                (None, Some(path)) => {
                    let file = fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
                    let rows = read_annotations(BufReader::new(file))?;
                    let samples = training_set(&rows, &decks, &papers)?;
                    let fc = ForestConfig { n_trees: trees, seed: config.seed, ..ForestConfig::default() };
                    RandomForest::fit(&samples, &fc)?
                }
                (None, None) => return Err(UsageError("pass --annotations or --model".into()).into()),
            };
            if let Some(path) = save_model {
                fs::write(&path, forest.to_bytes()).with_context(|| format!("writing {}", path.display()))?;
            }
            let (filtered, report) = filter_corpus(&decks, &papers, &forest)?;
            fs::create_dir_all(&out_dir)?;
            for deck in &filtered {
                let path = out_dir.join(format!("{}.json", deck.deck_id));
                fs::write(&path, deck.to_json()? + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            let summary = json!({ "report": report, "oob_accuracy": forest.oob_accuracy() });
            writeln!(out, "{summary}")?;
            Ok(())
        }
        Command::TrainEmbedder { decks, out: dest, epochs, lr, k_negatives, temperature } => {
            let decks = read_all(&decks, read_deck)?;
            let slides: Vec<SlideRecord> = decks.into_iter().flat_map(|d| d.slides).collect();
            let contents: Vec<String> =
                slides.iter().map(SlideRecord::content).filter(|c| !tokenize(c).is_empty()).collect();
            if contents.is_empty() {
                return Err(d2s_core::Error::EmptyTraining.into());
            }
            let base = HashedTfidfEmbedder::new(config.dim, config.seed).fit_idf(&contents)?;
            let pairs = pairs_from_slides(&slides, k_negatives, config.seed);
            let tc = TrainConfig { lr, epochs, k_negatives, seed: config.seed, temperature };
            let (trained, report) = base.train_contrastive(&pairs, &tc)?;
            let file = fs::File::create(&dest).with_context(|| format!("creating {}", dest.display()))?;
            let mut w = BufWriter::new(file);
            trained.write_to(&mut w)?;
            w.flush()?;
            let summary = json!({
                "pairs": pairs.len(),
                "initial_loss": report.loss_history.first(),
                "final_loss": report.final_loss,
            });
            writeln!(out, "{summary}")?;
            Ok(())
        }
        Command::Eval { papers, decks, generator, report_dir } => {
            let papers = read_all(&papers, read_paper)?;
            let decks = read_all(&decks, read_deck)?;
            let remote;
            let generator: &dyn SlideGenerator = match generator {
                EvalGeneratorArg::Extractive => &ExtractiveGenerator,
                EvalGeneratorArg::Copy => &CopyGenerator,
                EvalGeneratorArg::Remote => {
                    let Generator::Remote(client) = generator_for(GeneratorArg::Remote, &rt)? else { unreachable!() };
                    remote = RemoteGenerator(client);
                    &remote
                }
            };
            let report = evaluate_all(&papers, &decks, &config, rt.encoder.clone(), generator)?;
            if let Some(dir) = report_dir {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("report.json"), report.to_json() + "\n")?;
                fs::write(dir.join("report.txt"), report.to_text())?;
            }
            out.write_all(report.to_text().as_bytes())?;
            Ok(())
        }
        Command::Stats { decks } => {
            let decks = read_all(&decks, read_deck)?;
            let mut rows = Vec::new();
            for d in &decks {
                let s = deck_stats(&d.slides, tokenize)?;
                rows.push(json!({
                    "deck_id": d.deck_id,
                    "slides": d.slides.len(),
                    "avg_title_len": s.avg_title_len,
                    "avg_content_len": s.avg_content_len,
                }));
            }
            let all: Vec<SlideRecord> = decks.iter().flat_map(|d| d.slides.iter().cloned()).collect();
            let s = deck_stats(&all, tokenize)?;
            let summary = json!({
                "decks": rows,
                "overall": { "slides": all.len(), "avg_title_len": s.avg_title_len, "avg_content_len": s.avg_content_len },
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
            Ok(())
        }
        Command::Serve { port, host, papers } => {
            let papers = read_all(&papers, read_paper)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::server::serve(rt, &host, port, papers))
        }
    }
}
