//! Blocking JSON-over-HTTP calls shared by the remote embedder and generator.

use std::time::Duration;

use ureq::Agent;

use crate::error::{Error, Result};

pub(crate) fn agent(timeout: Duration) -> Agent {
    Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

/// POSTs `body` as JSON and returns the status code and response text.
pub(crate) fn post_json(agent: &Agent, url: &str, body: &[u8]) -> Result<(u16, String)> {
    let mut resp = agent
        .post(url)
        .header("content-type", "application/json")
        .send(body)
        .map_err(|e| map_err(url, e))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| map_err(url, e))?;
    Ok((status, text))
}

fn map_err(url: &str, e: ureq::Error) -> Error {
    match e {
        ureq::Error::Timeout(t) => Error::Timeout(format!("{url}: {t}")),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
            Error::Timeout(format!("{url}: {io}"))
        }
        other => Error::ServiceUnavailable(format!("{url}: {other}")),
    }
}

pub(crate) fn endpoint(base: &str, path: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), path)
}
