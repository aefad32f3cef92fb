//! HTTP GET transports: live, recorded, and recording.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request to {url} failed: {reason}")]
    Request { url: String, reason: String },
    #[error("no recorded response for {0}")]
    NotRecorded(String),
    #[error("recording {path}: {reason}")]
    Recording { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// Header names are lowercase.
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).map(String::as_str)
    }
}

/// Issues GET requests against the forge API.
pub trait Transport: Send + Sync {
    /// `token`, when present, is sent as a bearer credential.
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse, TransportError>;
}

/// Live HTTP over reqwest.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("forkscope/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| TransportError::Request {
                url: String::new(),
                reason: e.to_string(),
            })?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse, TransportError> {
        let fail = |e: reqwest::Error| TransportError::Request {
            url: url.to_string(),
            reason: e.to_string(),
        };
        let mut req = self
            .client
            .get(url)
            .header("Accept", "application/vnd.github+json")
            .header("X-GitHub-Api-Version", "2022-11-28");
        if let Some(token) = token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(fail)?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let body = resp.text().map_err(fail)?;
        Ok(HttpResponse {
            status,
            headers,
            body,
        })
    }
}

/// One recorded request/response pair. JSON bodies are stored as values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Exchange {
    pub url: String,
    pub status: u16,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    pub body: Value,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Recording {
    pub exchanges: Vec<Exchange>,
}

impl Recording {
    pub fn load(path: &Path) -> Result<Self, TransportError> {
        let err = |reason: String| TransportError::Recording {
            path: path.display().to_string(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), TransportError> {
        let err = |reason: String| TransportError::Recording {
            path: path.display().to_string(),
            reason,
        };
        let text = serde_json::to_string_pretty(self).map_err(|e| err(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| err(e.to_string()))
    }
}

/// Serves responses from a [`Recording`]; never touches the network.
pub struct ReplayTransport {
    responses: HashMap<String, HttpResponse>,
    requests: AtomicUsize,
}

impl ReplayTransport {
    pub fn new(recording: Recording) -> Self {
        let responses = recording
            .exchanges
            .into_iter()
            .map(|ex| {
                let body = match ex.body {
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                let headers = ex
                    .headers
                    .into_iter()
                    .map(|(k, v)| (k.to_ascii_lowercase(), v))
                    .collect();
                (
                    ex.url,
                    HttpResponse {
                        status: ex.status,
                        headers,
                        body,
                    },
                )
            })
            .collect();
        ReplayTransport {
            responses,
            requests: AtomicUsize::new(0),
        }
    }

    pub fn load(path: &Path) -> Result<Self, TransportError> {
        Ok(Self::new(Recording::load(path)?))
    }

    /// Requests served so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Transport for ReplayTransport {
    fn get(&self, url: &str, _token: Option<&str>) -> Result<HttpResponse, TransportError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        self.responses
            .get(url)
            .cloned()
            .ok_or_else(|| TransportError::NotRecorded(url.to_string()))
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse, TransportError> {
        (**self).get(url, token)
    }
}

/// Wraps another transport and keeps every exchange for later replay.
/// Credentials are never part of a recording.
pub struct RecordingTransport<T> {
    inner: T,
    exchanges: Mutex<Vec<Exchange>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            exchanges: Mutex::new(Vec::new()),
        }
    }

    /// Exchanges so far, sorted by URL so recordings diff cleanly.
    pub fn recording(&self) -> Recording {
        let mut exchanges = self.exchanges.lock().expect("recording lock").clone();
        exchanges.sort_by(|a, b| a.url.cmp(&b.url));
        exchanges.dedup_by(|a, b| a.url == b.url);
        Recording { exchanges }
    }
}

const RECORDED_HEADERS: [&str; 4] = [
    "link",
    "x-ratelimit-remaining",
    "x-ratelimit-reset",
    "retry-after",
];

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse, TransportError> {
        let resp = self.inner.get(url, token)?;
        let body = serde_json::from_str(&resp.body).unwrap_or_else(|_| Value::String(resp.body.clone()));
        let headers = resp
            .headers
            .iter()
            .filter(|(k, _)| RECORDED_HEADERS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        self.exchanges.lock().expect("recording lock").push(Exchange {
            url: url.to_string(),
            status: resp.status,
            headers,
            body,
        });
        Ok(resp)
    }
}
