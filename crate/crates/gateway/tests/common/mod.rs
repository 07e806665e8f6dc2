#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use llmab_gateway::{ChatClient, ClientConfig, RetryPolicy};
use serde_json::{json, Value};

/// Local chat-completions endpoint driven by a handler of
/// (request number, parsed body) -> (status, response body).
pub struct StubServer {
    pub base: String,
    hits: Arc<AtomicUsize>,
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(handler: impl Fn(usize, &Value) -> (u16, String) + Send + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let base = format!("http://{}", server.server_addr().to_ip().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let (srv, count) = (server.clone(), hits.clone());
        let handle = std::thread::spawn(move || {
            for mut request in srv.incoming_requests() {
                let n = count.fetch_add(1, Ordering::SeqCst);
                let mut body = String::new();
                request.as_reader().read_to_string(&mut body).unwrap();
                let authorized = request
                    .headers()
                    .iter()
                    .any(|h| h.field.equiv("Authorization") && h.value.as_str() == "Bearer test-key");
                let (status, reply) = if !authorized || request.url() != "/v1/chat/completions" {
                    (400, "bad request".to_string())
                } else {
                    handler(n, &serde_json::from_str(&body).unwrap())
                };
                let _ = request.respond(tiny_http::Response::from_string(reply).with_status_code(status));
            }
        });
        Self { base, hits, server, handle: Some(handle) }
    }

    /// Always answers with `content`.
    pub fn constant(content: &str) -> Self {
        let content = content.to_string();
        Self::start(move |_, _| (200, chat_body(&content)))
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn client(&self) -> ChatClient {
        ChatClient::with_ureq(ClientConfig {
            api_base: self.base.clone(),
            api_key: "test-key".into(),
            retry: RetryPolicy { max_attempts: 5, base_delay: Duration::from_millis(5), factor: 2.0 },
            requests_per_minute: None,
        })
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

pub fn chat_body(content: &str) -> String {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}

pub fn prompt_of(body: &Value) -> String {
    body["messages"][0]["content"].as_str().unwrap().to_string()
}
