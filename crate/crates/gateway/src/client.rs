//! OpenAI-compatible chat completions over a pluggable transport.

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{GatewayError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// Single user message, the only shape this crate sends.
    pub fn user(model: impl Into<String>, temperature: f64, prompt: impl Into<String>, max_tokens: u32) -> Self {
        Self {
            model: model.into(),
            temperature,
            messages: vec![ChatMessage { role: "user".into(), content: prompt.into() }],
            max_tokens,
        }
    }

    pub fn prompt(&self) -> &str {
        self.messages.last().map(|m| m.content.as_str()).unwrap_or("")
    }

    fn body(&self) -> Value {
        json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": self.messages,
            "max_tokens": self.max_tokens,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// One HTTP POST. `Err` means the request never produced a status line.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> std::result::Result<HttpReply, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(120))
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> std::result::Result<HttpReply, String> {
        let mut response = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {bearer}"))
            .send_json(body)
            .map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 5, base_delay: Duration::from_secs(1), factor: 2.0 }
    }
}

impl RetryPolicy {
    /// Wait after the `failed`-th consecutive failure (1-based).
    pub fn delay(&self, failed: u32) -> Duration {
        self.base_delay.mul_f64(self.factor.powi(failed.saturating_sub(1) as i32))
    }
}

/// Token bucket refilled continuously at `per_minute / 60` tokens per second.
#[derive(Debug)]
pub struct RateLimiter {
    per_minute: Option<u32>,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_minute: Option<u32>) -> Self {
        let capacity = per_minute.unwrap_or(0) as f64;
        Self { per_minute: per_minute.filter(|&n| n > 0), state: Mutex::new((capacity, Instant::now())) }
    }

    pub fn unlimited() -> Self {
        Self::new(None)
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        let Some(per_minute) = self.per_minute else { return };
        let capacity = per_minute as f64;
        let rate = capacity / 60.0;
        loop {
            let wait = {
                let mut state = self.state.lock().expect("rate limiter poisoned");
                let now = Instant::now();
                state.0 = (state.0 + now.duration_since(state.1).as_secs_f64() * rate).min(capacity);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (1.0 - state.0) / rate
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub api_base: String,
    pub api_key: String,
    pub retry: RetryPolicy,
    pub requests_per_minute: Option<u32>,
}

impl ClientConfig {
    /// Reads `LLM_API_BASE` and `LLM_API_KEY`.
    pub fn from_env() -> Result<Self> {
        let var = |name: &str| {
            std::env::var(name).map_err(|_| GatewayError::Config(format!("environment variable {name} is not set")))
        };
        Ok(Self {
            api_base: var("LLM_API_BASE")?,
            api_key: var("LLM_API_KEY")?,
            retry: RetryPolicy::default(),
            requests_per_minute: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// HTTP attempts spent, including the successful one.
    pub attempts: u32,
}

pub struct ChatClient {
    config: ClientConfig,
    transport: Arc<dyn Transport>,
    limiter: RateLimiter,
}

impl ChatClient {
    pub fn new(config: ClientConfig, transport: Arc<dyn Transport>) -> Self {
        let limiter = RateLimiter::new(config.requests_per_minute);
        Self { config, transport, limiter }
    }

    pub fn with_ureq(config: ClientConfig) -> Self {
        Self::new(config, Arc::new(UreqTransport::default()))
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.config.api_base.trim_end_matches('/'))
    }

    /// Sends one request, retrying 429, 5xx and connection failures with
    /// exponential backoff. 401/403 fail at once.
    pub fn complete(&self, request: &ChatRequest) -> Result<Completion> {
        let url = self.endpoint();
        let body = request.body();
        let max = self.config.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=max {
            self.limiter.acquire();
            match self.transport.post_json(&url, &self.config.api_key, &body) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    return Ok(Completion { text: first_choice_content(&reply.body)?, attempts: attempt });
                }
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return Err(GatewayError::Auth { status: reply.status, body: reply.body });
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    last = format!("HTTP {}: {}", reply.status, reply.body);
                }
                Ok(reply) => return Err(GatewayError::Http { status: reply.status, body: reply.body }),
                Err(io) => last = io,
            }
            log::warn!("chat request attempt {attempt}/{max} failed: {last}");
            if attempt < max {
                thread::sleep(self.config.retry.delay(attempt));
            }
        }
        Err(GatewayError::RetriesExhausted { attempts: max, last })
    }
}

fn first_choice_content(body: &str) -> Result<String> {
    let value: Value = serde_json::from_str(body).map_err(|e| GatewayError::Envelope(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| GatewayError::Envelope("missing choices[0].message.content".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(1), Duration::from_secs(1));
        assert_eq!(p.delay(2), Duration::from_secs(2));
        assert_eq!(p.delay(4), Duration::from_secs(8));
    }

    #[test]
    fn envelope_parsing() {
        assert_eq!(first_choice_content(r##"{"choices":[{"message":{"role":"assistant","content":"#1.0#"}}]}"##).unwrap(), "#1.0#");
        assert!(matches!(first_choice_content("{}"), Err(GatewayError::Envelope(_))));
        assert!(matches!(first_choice_content("<html>"), Err(GatewayError::Envelope(_))));
    }

    #[test]
    fn request_body_has_one_user_message() {
        let r = ChatRequest::user("m", 0.5, "hi", 64);
        let b = r.body();
        assert_eq!(b["messages"].as_array().unwrap().len(), 1);
        assert_eq!(b["messages"][0]["role"], "user");
        assert_eq!(b["max_tokens"], 64);
    }

    #[test]
    fn limiter_blocks_after_capacity() {
        let l = RateLimiter::new(Some(600));
        let start = Instant::now();
        for _ in 0..601 {
            l.acquire();
        }
        // Ten tokens per second: the 601st waits about 100ms.
        assert!(start.elapsed() >= Duration::from_millis(80));
        let u = RateLimiter::unlimited();
        for _ in 0..10_000 {
            u.acquire();
        }
    }
}
