use reqwest::blocking::Client;
use serde_json::json;

use crate::http::{post_json, score_field, HttpEndpoint};
use crisismine_core::dataset::AdequacyScorer;
use crisismine_core::mteval::ExternalScorer;
use crisismine_core::Result;

/// Corpus-level metric service (COMET or similar):
/// `{"sources","hypotheses","references"}` -> `{"score"}`.
pub struct HttpMetricScorer {
    endpoint: HttpEndpoint,
    name: String,
    client: Client,
}

impl HttpMetricScorer {
    pub fn new(endpoint: HttpEndpoint, name: impl Into<String>) -> Result<Self> {
        let client = endpoint.client()?;
        Ok(HttpMetricScorer {
            endpoint,
            name: name.into(),
            client,
        })
    }
}

impl ExternalScorer for HttpMetricScorer {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn corpus_score(&self, sources: &[String], hypotheses: &[String], references: &[String]) -> Result<f64> {
        let url = self.endpoint.join("");
        let body = json!({ "sources": sources, "hypotheses": hypotheses, "references": references });
        post_json(&self.client, &self.endpoint, &url, &body)
            .and_then(|v| score_field(&url, &v))
            .map_err(|e| e.into_error(vec![]))
    }
}

/// Semantic adequacy service: `{"original","simplified"}` -> `{"score"}` in [0, 1].
pub struct HttpAdequacyScorer {
    endpoint: HttpEndpoint,
    client: Client,
}

impl HttpAdequacyScorer {
    pub fn new(endpoint: HttpEndpoint) -> Result<Self> {
        let client = endpoint.client()?;
        Ok(HttpAdequacyScorer { endpoint, client })
    }
}

impl AdequacyScorer for HttpAdequacyScorer {
    fn name(&self) -> String {
        format!("http:{}", self.endpoint.url)
    }

    fn adequacy(&self, original: &str, simplified: &str) -> Result<f64> {
        let url = self.endpoint.join("");
        let body = json!({ "original": original, "simplified": simplified });
        post_json(&self.client, &self.endpoint, &url, &body)
            .and_then(|v| score_field(&url, &v))
            .map_err(|e| e.into_error(vec![]))
    }
}
