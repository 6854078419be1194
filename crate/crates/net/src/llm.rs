use std::collections::BTreeMap;

use reqwest::blocking::Client;
use serde_json::{json, Map, Value};

use crate::http::{post_json, CallError, HttpEndpoint};
use crisismine_core::dataset::{SimplificationClient, SimplificationRequest};
use crisismine_core::Result;

/// Chat-completions style LLM endpoint. Sends the rendered prompt as a single
/// user message and reads `choices[0].message.content`.
pub struct ChatClient {
    endpoint: HttpEndpoint,
    path: String,
    /// Extra body fields (temperature, max_tokens, ...); request params win.
    defaults: BTreeMap<String, Value>,
    client: Client,
}

impl ChatClient {
    pub fn new(endpoint: HttpEndpoint) -> Result<Self> {
        let client = endpoint.client()?;
        Ok(ChatClient {
            endpoint,
            path: "/v1/chat/completions".into(),
            defaults: BTreeMap::new(),
            client,
        })
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = path.into();
        self
    }

    pub fn with_default(mut self, key: impl Into<String>, value: Value) -> Self {
        self.defaults.insert(key.into(), value);
        self
    }

    pub fn request_body(&self, request: &SimplificationRequest) -> Result<Value> {
        let mut body = Map::new();
        for (k, v) in &self.defaults {
            body.insert(k.clone(), v.clone());
        }
        for (k, v) in &request.params {
            // "0.0" -> 0.0, "true" -> true, anything else stays a string
            let parsed = serde_json::from_str::<Value>(v)
                .ok()
                .filter(|p| p.is_number() || p.is_boolean())
                .unwrap_or_else(|| Value::String(v.clone()));
            body.insert(k.clone(), parsed);
        }
        body.insert("model".into(), Value::String(request.model_name.clone()));
        body.insert(
            "messages".into(),
            json!([{ "role": "user", "content": request.render()? }]),
        );
        Ok(Value::Object(body))
    }
}

fn message_content(url: &str, v: &Value) -> Result<String, CallError> {
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(|s| s.trim().to_string())
        .ok_or_else(|| CallError {
            retriable: false,
            message: format!("{url}: response has no choices[0].message.content"),
        })
}

impl SimplificationClient for ChatClient {
    fn name(&self) -> String {
        format!("chat:{}", self.endpoint.join(&self.path))
    }

    fn simplify(&self, id: &str, request: &SimplificationRequest) -> Result<String> {
        let url = self.endpoint.join(&self.path);
        let body = self.request_body(request)?;
        post_json(&self.client, &self.endpoint, &url, &body)
            .and_then(|v| message_content(&url, &v))
            .map_err(|e| e.into_error(vec![id.to_string()]))
    }
}
