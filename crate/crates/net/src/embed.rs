use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use reqwest::blocking::Client;
use serde_json::{json, Value};

use crate::http::{post_json, CallError, HttpEndpoint};
use crisismine_core::embedding::{EmbedItem, EmbeddingProvider};
use crisismine_core::{Error, Result};

/// Embedding service speaking `POST /embed {"texts": [...]}` ->
/// `{"vectors": [[...], ...]}`.
pub struct HttpEmbeddingProvider {
    endpoint: HttpEndpoint,
    path: String,
    model: String,
    dim: usize,
    batch_size: usize,
    concurrency: usize,
    client: Client,
}

impl HttpEmbeddingProvider {
    pub fn new(endpoint: HttpEndpoint, model: impl Into<String>, dim: usize) -> Result<Self> {
        let client = endpoint.client()?;
        Ok(HttpEmbeddingProvider {
            endpoint,
            path: "/embed".into(),
            model: model.into(),
            dim,
            batch_size: 64,
            concurrency: 4,
            client,
        })
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = path.into();
        self
    }

    pub fn with_batch_size(mut self, n: usize) -> Self {
        self.batch_size = n.max(1);
        self
    }

    pub fn with_concurrency(mut self, n: usize) -> Self {
        self.concurrency = n.max(1);
        self
    }

    fn embed_batch(&self, url: &str, batch: &[EmbedItem]) -> Result<Vec<Vec<f32>>, CallError> {
        let texts: Vec<&str> = batch.iter().map(|it| it.text.as_str()).collect();
        let body = json!({ "texts": texts, "model": self.model });
        let resp = post_json(&self.client, &self.endpoint, url, &body)?;
        let bad = |message: String| CallError {
            retriable: false,
            message,
        };
        let vectors = resp
            .get("vectors")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(format!("{url}: response has no `vectors` array")))?;
        if vectors.len() != batch.len() {
            return Err(bad(format!("{url}: {} vectors for {} texts", vectors.len(), batch.len())));
        }
        vectors
            .iter()
            .map(|row| {
                let row = row
                    .as_array()
                    .ok_or_else(|| bad(format!("{url}: vector is not an array")))?;
                let v: Vec<f32> = row
                    .iter()
                    .map(|x| x.as_f64().map(|f| f as f32).filter(|f| f.is_finite()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad(format!("{url}: non-finite or non-numeric vector entry")))?;
                if v.len() != self.dim {
                    return Err(bad(format!("{url}: vector of dimension {}, expected {}", v.len(), self.dim)));
                }
                Ok(v)
            })
            .collect()
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn fingerprint(&self) -> String {
        format!("http:{}|model={}|dim={}", self.endpoint.join(&self.path), self.model, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Batches are sent by up to `concurrency` workers; rows come back in
    /// item order. The first failing batch aborts the rest.
    fn embed(&self, items: &[EmbedItem]) -> Result<Vec<Vec<f32>>> {
        let url = self.endpoint.join(&self.path);
        let batches: Vec<&[EmbedItem]> = items.chunks(self.batch_size).collect();
        let results: Mutex<Vec<Option<Vec<Vec<f32>>>>> = Mutex::new(vec![None; batches.len()]);
        let failure: Mutex<Option<Error>> = Mutex::new(None);
        let next = AtomicUsize::new(0);
        let stop = AtomicBool::new(false);
        let workers = self.concurrency.min(batches.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if stop.load(Ordering::Relaxed) {
                        return;
                    }
                    let b = next.fetch_add(1, Ordering::Relaxed);
                    let Some(batch) = batches.get(b) else { return };
                    match self.embed_batch(&url, batch) {
                        Ok(rows) => results.lock().unwrap()[b] = Some(rows),
                        Err(e) => {
                            stop.store(true, Ordering::Relaxed);
                            let ids = batch.iter().map(|it| it.id.clone()).collect();
                            failure.lock().unwrap().get_or_insert(e.into_error(ids));
                            return;
                        }
                    }
                });
            }
        });
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        Ok(results
            .into_inner()
            .unwrap()
            .into_iter()
            .flat_map(|r| r.expect("every batch finished"))
            .collect())
    }
}
