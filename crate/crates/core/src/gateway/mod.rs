//! Uniform interface to token-producing models: an HTTP client for inference
//! servers that return per-token log-probabilities, and a deterministic
//! scripted mock used throughout the test suite.

pub mod http;
pub mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::TokenRecord;
use crate::Scalar;

pub use http::{HttpGateway, HttpGatewayConfig};
pub use mock::{MockGateway, MockRule, MockScript, MockToken};

/// One model invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: Scalar,
    pub top_p: Scalar,
    pub max_tokens: u32,
    /// Per-token top-k logprobs to request from network backends; the mock
    /// ignores it (it knows full distributions).
    pub logprob_k: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

/// A completed generation with per-token entropy already attached.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    pub text: String,
    pub tokens: Vec<TokenRecord>,
    pub duration_ms: u64,
    pub finish_reason: FinishReason,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempts (request {correlation_id}): {message}")]
    Transport {
        correlation_id: String,
        attempts: u32,
        message: String,
    },
    #[error("protocol violation (request {correlation_id}): {message}")]
    Protocol {
        correlation_id: String,
        message: String,
    },
    #[error("server refused request {correlation_id} with status {status}")]
    ServerRefused { correlation_id: String, status: u16 },
    #[error("no mock rule matched request {correlation_id} (script has no catch-all)")]
    NoRuleMatched { correlation_id: String },
    #[error("invalid mock script: {0}")]
    InvalidScript(String),
}

/// A model backend. Implementations must be shareable across threads; each
/// call is independent.
pub trait Gateway: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, GatewayError>;

    /// Short descriptor recorded in run manifests (e.g. `mock:path` or a URL).
    fn descriptor(&self) -> String;
}
