//! HTTP clients for external embedding, LLM and scoring services, and the
//! annotation service used by the labelling UI.

mod embed;
mod http;
mod llm;
mod scorer;
pub mod server;

pub use embed::HttpEmbeddingProvider;
pub use http::{HttpEndpoint, RetryPolicy};
pub use llm::ChatClient;
pub use scorer::{HttpAdequacyScorer, HttpMetricScorer};
pub use server::{AnnotationService, ServerHandle};
