use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use d2s_core::dense_ir::DEFAULT_TOP_K;
use d2s_core::embedder::DEFAULT_DIM;
use d2s_core::figure_select::DEFAULT_RECOMMENDATIONS;
use d2s_core::generation::DEFAULT_GEN_TIMEOUT_MS;

#[derive(Debug, Parser)]
#[command(name = "d2s", version, about = "Draft presentation slides from parsed papers")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&a) {
        Ok(a)
    } else {
        Err(format!("alpha must lie in [0, 1], got {a}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Weight of the snippet-text score against the keyword score.
    #[arg(long, global = true, default_value_t = 0.75, value_parser = parse_alpha)]
    pub alpha: f64,
    /// Dimension of the hashed embedder (and of remote vectors).
    #[arg(long = "embed-dim", global = true, default_value_t = DEFAULT_DIM)]
    pub embed_dim: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Trained embedder file from `train-embedder`.
    #[arg(long, global = true)]
    pub embedder: Option<PathBuf>,
    /// Timeout for remote generator and embedder calls.
    #[arg(long = "gen-timeout-ms", global = true, default_value_t = DEFAULT_GEN_TIMEOUT_MS)]
    pub gen_timeout_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    Extractive,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalGeneratorArg {
    Extractive,
    Remote,
    /// Returns the original slide text; a sanity upper bound.
    Copy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and normalize a paper or deck; prints the cleaned JSON.
    Ingest {
        #[arg(long, required_unless_present = "deck", conflicts_with = "deck")]
        paper: Option<PathBuf>,
        #[arg(long)]
        deck: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the snippet index of a paper and save it.
    Index {
        #[arg(long)]
        paper: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Top-k snippets for a title.
    Retrieve {
        #[arg(long)]
        paper: PathBuf,
        #[arg(long)]
        title: String,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        k: usize,
        /// Saved index from `index`; rebuilt when absent.
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Draft one slide per title.
    Generate {
        #[arg(long)]
        paper: PathBuf,
        #[arg(long, required = true)]
        title: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        k: usize,
        #[arg(long, value_enum, default_value_t = GeneratorArg::Extractive)]
        generator: GeneratorArg,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Rank a paper's figures and tables for a title.
    Figures {
        #[arg(long)]
        paper: PathBuf,
        #[arg(long)]
        title: String,
        #[arg(long, default_value_t = DEFAULT_RECOMMENDATIONS)]
        top: usize,
    },
    /// Train (or load) the line filter and drop underivable deck lines.
    Filter {
        #[arg(long, num_args = 1.., required = true)]
        papers: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        decks: Vec<PathBuf>,
        /// CSV `deck_id,slide_index,line_index,label`; required without --model.
        #[arg(long, required_unless_present = "model")]
        annotations: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "save-model")]
        save_model: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        /// Directory for the filtered decks.
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Contrastively train the hashed embedder on slide title/content pairs.
    TrainEmbedder {
        #[arg(long, num_args = 1.., required = true)]
        decks: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 2.0)]
        lr: f64,
        #[arg(long = "k-negatives", default_value_t = 4)]
        k_negatives: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
    },
    /// Retrieval, generation, figure and novelty measurements.
    Eval {
        #[arg(long, num_args = 1.., required = true)]
        papers: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        decks: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = EvalGeneratorArg::Extractive)]
        generator: EvalGeneratorArg,
        /// Writes report.json and report.txt here.
        #[arg(long = "report-dir")]
        report_dir: Option<PathBuf>,
    },
    /// Average title and content lengths per deck.
    Stats {
        #[arg(long, num_args = 1.., required = true)]
        decks: Vec<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Papers loaded at startup.
        #[arg(long, num_args = 1..)]
        papers: Vec<PathBuf>,
    },
}
