//! Command-line and HTTP front ends for the slide drafting engine.

pub mod args;
pub mod commands;
pub mod server;

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use d2s_core::embedder::{HashedTfidfEmbedder, RemoteEmbedder, TextEncoder};
use d2s_core::generation::GeneratorClient;
use d2s_core::pipeline::EngineConfig;

use crate::args::GlobalArgs;

/// Misuse of the command line; exits with status 1 rather than 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Everything a command or the server needs to build paper sessions.
#[derive(Clone)]
pub struct Runtime {
    pub config: EngineConfig,
    /// `None` means a hashed embedder fitted per paper.
    pub encoder: Option<Arc<dyn TextEncoder>>,
    pub generator: Option<GeneratorClient>,
}

impl Runtime {
    /// A remote embedder (`D2S_EMBED_URL`) wins over `--embedder`.
    pub fn from_args(g: &GlobalArgs) -> anyhow::Result<Runtime> {
        let config = EngineConfig { alpha: g.alpha, dim: g.embed_dim, seed: g.seed, ..EngineConfig::default() };
        let timeout = Duration::from_millis(g.gen_timeout_ms);
        let encoder: Option<Arc<dyn TextEncoder>> = match (RemoteEmbedder::from_env(g.embed_dim, timeout), &g.embedder) {
            (Some(remote), _) => Some(Arc::new(remote)),
            (None, Some(path)) => {
                let file = std::fs::File::open(path)?;
                Some(Arc::new(HashedTfidfEmbedder::read_from(std::io::BufReader::new(file))?))
            }
            (None, None) => None,
        };
        Ok(Runtime { config, encoder, generator: GeneratorClient::from_env(timeout) })
    }

    pub fn offline(config: EngineConfig) -> Runtime {
        Runtime { config, encoder: None, generator: None }
    }
}

/// Process exit status for an error returned by a command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        1
    } else {
        2
    }
}
