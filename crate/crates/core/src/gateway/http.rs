//! Chat-completion HTTP client. Requests per-token top-k logprobs and derives
//! a truncated entropy lower bound for every token; responses without
//! logprobs are protocol errors — entropy is never fabricated.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{FinishReason, Gateway, GatewayError, GenerationRequest, GenerationResult};
use crate::stats::entropy_from_truncated_logprobs;
use crate::trace::TokenRecord;

/// Attempts per request; sleeps between attempts follow [`BACKOFF_MS`].
const MAX_ATTEMPTS: u32 = 3;
const BACKOFF_MS: [u64; 3] = [100, 400, 1600];

#[derive(Debug, Clone)]
pub struct HttpGatewayConfig {
    /// Server base URL; `/v1/chat/completions` is appended unless the URL
    /// already points at a chat-completions path.
    pub base_url: String,
    pub model: String,
    /// Bearer token, normally sourced from the environment by the caller.
    pub api_key: Option<String>,
    /// Maximum concurrent in-flight requests.
    pub max_in_flight: usize,
    pub timeout_ms: u64,
}

impl HttpGatewayConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        HttpGatewayConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            max_in_flight: 4,
            timeout_ms: 120_000,
        }
    }

    fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/v1/chat/completions")
        }
    }
}

pub struct HttpGateway {
    config: HttpGatewayConfig,
    client: reqwest::blocking::Client,
    limiter: Semaphore,
    counter: AtomicU64,
}

impl HttpGateway {
    pub fn new(config: HttpGatewayConfig) -> Result<HttpGateway, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| GatewayError::Protocol {
                correlation_id: "init".to_string(),
                message: format!("client construction failed: {e}"),
            })?;
        let limiter = Semaphore::new(config.max_in_flight.max(1));
        Ok(HttpGateway {
            config,
            client,
            limiter,
            counter: AtomicU64::new(0),
        })
    }

    fn attempt(
        &self,
        request: &GenerationRequest,
        correlation_id: &str,
    ) -> Result<GenerationResult, AttemptError> {
        let mut body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "top_p": request.top_p,
            "max_tokens": request.max_tokens,
        });
        if request.logprob_k > 0 {
            body["logprobs"] = json!(true);
            body["top_logprobs"] = json!(request.logprob_k);
        }

        let mut http = self.client.post(self.config.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            http = http.header("Authorization", format!("Bearer {key}"));
        }

        let started = Instant::now();
        let response = http
            .send()
            .map_err(|e| AttemptError::Transient(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(AttemptError::Transient(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Refused(status.as_u16()));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| AttemptError::Protocol(format!("undecodable body: {e}")))?;
        let duration_ms = started.elapsed().as_millis() as u64;

        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| AttemptError::Protocol("no choices in response".to_string()))?;
        let logprobs = choice
            .logprobs
            .and_then(|l| l.content)
            .ok_or_else(|| AttemptError::Protocol("response carries no logprobs".to_string()))?;
        if logprobs.is_empty() {
            return Err(AttemptError::Protocol("empty completion".to_string()));
        }

        let mut text = String::new();
        let mut tokens = Vec::with_capacity(logprobs.len());
        for entry in logprobs {
            if entry.top_logprobs.is_empty() {
                return Err(AttemptError::Protocol(format!(
                    "token {:?} carries no top_logprobs",
                    entry.token
                )));
            }
            let pairs: Vec<(String, f64)> = entry
                .top_logprobs
                .into_iter()
                .map(|t| (t.token, t.logprob))
                .collect();
            let entropy = entropy_from_truncated_logprobs(&pairs)
                .map_err(|e| AttemptError::Protocol(format!("bad logprobs: {e}")))?;
            text.push_str(&entry.token);
            tokens.push(TokenRecord {
                token_text: entry.token,
                entropy,
                truncation_k: Some(pairs.len() as u32),
                top_logprobs: Some(pairs),
            });
        }
        let _ = correlation_id;

        let finish_reason = match choice.finish_reason.as_deref() {
            Some("length") => FinishReason::Length,
            _ => FinishReason::Stop,
        };
        Ok(GenerationResult {
            text,
            tokens,
            duration_ms,
            finish_reason,
        })
    }
}

impl Gateway for HttpGateway {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, GatewayError> {
        let seq = self.counter.fetch_add(1, Ordering::Relaxed);
        let correlation_id = format!("req-{seq:08}");
        let _permit = self.limiter.acquire();

        let mut last_transient = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            match self.attempt(request, &correlation_id) {
                Ok(result) => return Ok(result),
                Err(AttemptError::Transient(message)) => {
                    last_transient = message;
                    if attempt + 1 < MAX_ATTEMPTS {
                        std::thread::sleep(Duration::from_millis(BACKOFF_MS[attempt as usize]));
                    }
                }
                Err(AttemptError::Refused(status)) => {
                    return Err(GatewayError::ServerRefused {
                        correlation_id,
                        status,
                    })
                }
                Err(AttemptError::Protocol(message)) => {
                    return Err(GatewayError::Protocol {
                        correlation_id,
                        message,
                    })
                }
            }
        }
        Err(GatewayError::Transport {
            correlation_id,
            attempts: MAX_ATTEMPTS,
            message: last_transient,
        })
    }

    fn descriptor(&self) -> String {
        format!("{}#{}", self.config.endpoint(), self.config.model)
    }
}

enum AttemptError {
    Transient(String),
    Refused(u16),
    Protocol(String),
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    finish_reason: Option<String>,
    logprobs: Option<LogprobBlock>,
}

#[derive(Deserialize)]
struct LogprobBlock {
    content: Option<Vec<TokenLogprobs>>,
}

#[derive(Deserialize)]
struct TokenLogprobs {
    token: String,
    top_logprobs: Vec<TopLogprob>,
}

#[derive(Deserialize)]
struct TopLogprob {
    token: String,
    logprob: f64,
}

/// Minimal counting semaphore (std has none); permits release on drop.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Semaphore {
        Semaphore {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut permits = self.0.permits.lock().unwrap();
        *permits += 1;
        self.0.available.notify_one();
    }
}
