use std::collections::BTreeMap;
use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crisismine_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Total attempts including the first.
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            initial_backoff_ms: 250,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    /// Exponential backoff before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64 << retry.saturating_sub(1).min(20);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

/// Base address plus request settings shared by every client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpEndpoint {
    pub url: String,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    /// Environment variable holding a bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout() -> u64 {
    60
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        HttpEndpoint {
            url: url.into(),
            headers: BTreeMap::new(),
            api_key_env: None,
            timeout_secs: default_timeout(),
            retry: RetryPolicy::default(),
        }
    }

    /// `url` joined with `path`, with exactly one slash between them.
    pub fn join(&self, path: &str) -> String {
        if path.is_empty() {
            return self.url.clone();
        }
        format!("{}/{}", self.url.trim_end_matches('/'), path.trim_start_matches('/'))
    }

    pub(crate) fn client(&self) -> Result<Client> {
        Client::builder()
            .timeout(Duration::from_secs(self.timeout_secs))
            .build()
            .map_err(|e| Error::Config(format!("cannot build HTTP client for {}: {e}", self.url)))
    }
}

#[derive(Debug)]
pub(crate) struct CallError {
    pub retriable: bool,
    pub message: String,
}

impl CallError {
    pub fn into_error(self, ids: Vec<String>) -> Error {
        Error::Provider {
            retriable: self.retriable,
            ids,
            message: self.message,
        }
    }
}

fn attempt(client: &Client, endpoint: &HttpEndpoint, url: &str, body: &Value) -> Result<Value, CallError> {
    let mut req = client.post(url).json(body);
    for (k, v) in &endpoint.headers {
        req = req.header(k, v);
    }
    if let Some(var) = &endpoint.api_key_env {
        let key = std::env::var(var).map_err(|_| CallError {
            retriable: false,
            message: format!("environment variable {var} is not set"),
        })?;
        req = req.bearer_auth(key);
    }
    let resp = req.send().map_err(|e| CallError {
        retriable: true,
        message: format!("{url}: {e}"),
    })?;
    let status = resp.status();
    if !status.is_success() {
        let text = resp.text().unwrap_or_default();
        let snippet: String = text.chars().take(200).collect();
        return Err(CallError {
            retriable: status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408,
            message: format!("{url}: HTTP {status}: {snippet}"),
        });
    }
    resp.json::<Value>().map_err(|e| CallError {
        retriable: false,
        message: format!("{url}: response is not JSON: {e}"),
    })
}

/// POSTs `body` as JSON, retrying connection failures, timeouts, 408, 429
/// and 5xx responses per the endpoint's policy.
pub(crate) fn post_json(client: &Client, endpoint: &HttpEndpoint, url: &str, body: &Value) -> Result<Value, CallError> {
    let policy = &endpoint.retry;
    let mut tries = 0;
    loop {
        tries += 1;
        match attempt(client, endpoint, url, body) {
            Ok(v) => return Ok(v),
            Err(e) if e.retriable && tries < policy.max_attempts.max(1) => {
                std::thread::sleep(policy.backoff(tries));
            }
            Err(mut e) => {
                if tries > 1 {
                    e.message = format!("{} (after {tries} attempts)", e.message);
                }
                return Err(e);
            }
        }
    }
}

/// Reads a numeric `"score"` field.
pub(crate) fn score_field(url: &str, v: &Value) -> Result<f64, CallError> {
    v.get("score").and_then(Value::as_f64).ok_or_else(|| CallError {
        retriable: false,
        message: format!("{url}: response has no numeric `score`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_attempts: 10,
            initial_backoff_ms: 100,
            max_backoff_ms: 500,
        };
        let ms: Vec<u128> = (1..=5).map(|r| p.backoff(r).as_millis()).collect();
        assert_eq!(ms, [100, 200, 400, 500, 500]);
    }

    #[test]
    fn join_normalizes_slashes() {
        let e = HttpEndpoint::new("http://h:1/api/");
        assert_eq!(e.join("/embed"), "http://h:1/api/embed");
        assert_eq!(e.join(""), "http://h:1/api/");
    }
}
