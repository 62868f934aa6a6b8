//! Client for a Kubo-compatible HTTP RPC daemon.
//!
//! `add` is always invoked with `raw-leaves=true&cid-version=1&hash=sha2-256`
//! so that single-chunk adds return byte-identical CIDs to [`cid_of_blob`].
//! Multi-chunk adds delegate chunking to the daemon and trust its root CID;
//! the embedded manifest format is never sent over the wire.

use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use super::cid::Cid;

/// Environment variable selecting the daemon endpoint.
pub const ENV_IPFS_API: &str = "AQUA_IPFS_API";

const DEFAULT_ENDPOINT: &str = "http://127.0.0.1:5001";
const TIMEOUT: Duration = Duration::from_secs(30);

/// Endpoint from `AQUA_IPFS_API`, falling back to the local daemon default.
pub fn default_endpoint() -> String {
    std::env::var(ENV_IPFS_API).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string())
}

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("remote unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("remote returned status {status}: {body}")]
    RemoteStatus { status: u16, body: String },
    #[error("could not parse remote cid {0:?}: {1}")]
    BadRemoteCid(String, String),
}

#[derive(Deserialize)]
struct AddResponse {
    #[serde(rename = "Hash")]
    hash: String,
}

fn client() -> Result<reqwest::blocking::Client, RemoteError> {
    reqwest::blocking::Client::builder()
        .timeout(TIMEOUT)
        .build()
        .map_err(|e| RemoteError::RemoteUnavailable(e.to_string()))
}

/// POSTs `data` to `/api/v0/add` and parses the returned hash into a [`Cid`].
pub fn remote_add(endpoint: &str, data: &[u8]) -> Result<Cid, RemoteError> {
    let url = format!(
        "{}/api/v0/add?raw-leaves=true&cid-version=1&hash=sha2-256",
        endpoint.trim_end_matches('/')
    );
    let form = reqwest::blocking::multipart::Form::new().part(
        "file",
        reqwest::blocking::multipart::Part::bytes(data.to_vec()).file_name("blob"),
    );
    let resp = client()?
        .post(&url)
        .multipart(form)
        .send()
        .map_err(|e| RemoteError::RemoteUnavailable(e.to_string()))?;
    let status = resp.status();
    let body = resp.text().map_err(|e| RemoteError::RemoteUnavailable(e.to_string()))?;
    if !status.is_success() {
        return Err(RemoteError::RemoteStatus { status: status.as_u16(), body });
    }
    // The daemon streams one JSON object per line; the last line is the root.
    let last = body
        .lines().rfind(|l| !l.trim().is_empty())
        .ok_or_else(|| RemoteError::BadRemoteCid(String::new(), "empty response".into()))?;
    let parsed: AddResponse = serde_json::from_str(last)
        .map_err(|e| RemoteError::BadRemoteCid(last.to_string(), e.to_string()))?;
    parsed
        .hash
        .parse()
        .map_err(|e: super::cid::CidError| RemoteError::BadRemoteCid(parsed.hash.clone(), e.to_string()))
}

/// POSTs `/api/v0/cat?arg=<cid>` and returns the body bytes.
pub fn remote_cat(endpoint: &str, cid: &Cid) -> Result<Vec<u8>, RemoteError> {
    let url = format!("{}/api/v0/cat?arg={}", endpoint.trim_end_matches('/'), cid);
    let resp = client()?
        .post(&url)
        .send()
        .map_err(|e| RemoteError::RemoteUnavailable(e.to_string()))?;
    let status = resp.status();
    if !status.is_success() {
        let body = resp.text().unwrap_or_default();
        return Err(RemoteError::RemoteStatus { status: status.as_u16(), body });
    }
    resp.bytes()
        .map(|b| b.to_vec())
        .map_err(|e| RemoteError::RemoteUnavailable(e.to_string()))
}
