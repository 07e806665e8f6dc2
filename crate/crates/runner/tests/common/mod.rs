#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use llmab_gateway::{CachedClient, ChatClient, ClientConfig, RetryPolicy};
use serde_json::{json, Value};

/// Local chat-completions endpoint. The handler maps the prompt to the reply content.
pub struct StubServer {
    pub base: String,
    hits: Arc<AtomicUsize>,
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(handler: impl Fn(&str) -> String + Send + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let base = format!("http://{}", server.server_addr().to_ip().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let (srv, count) = (server.clone(), hits.clone());
        let handle = std::thread::spawn(move || {
            for mut request in srv.incoming_requests() {
                count.fetch_add(1, Ordering::SeqCst);
                let mut body = String::new();
                request.as_reader().read_to_string(&mut body).unwrap();
                let body: Value = serde_json::from_str(&body).unwrap();
                let prompt = body["messages"][0]["content"].as_str().unwrap_or_default();
                let reply = json!({"choices": [{"message": {"role": "assistant", "content": handler(prompt)}}]});
                let _ = request.respond(tiny_http::Response::from_string(reply.to_string()));
            }
        });
        Self { base, hits, server, handle: Some(handle) }
    }

    /// Replies `#v#` with v a deterministic function of the prompt bytes.
    pub fn hashing() -> Self {
        Self::start(|prompt| {
            let h = prompt.bytes().fold(17u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
            format!("#{:.2}#", (h % 100) as f64 / 100.0)
        })
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn client(&self) -> ChatClient {
        ChatClient::with_ureq(ClientConfig {
            api_base: self.base.clone(),
            api_key: "test-key".into(),
            retry: RetryPolicy { max_attempts: 2, base_delay: Duration::from_millis(5), factor: 2.0 },
            requests_per_minute: None,
        })
    }

    pub fn recording(&self, log: &Path) -> Arc<CachedClient> {
        Arc::new(CachedClient::record(self.client(), log).unwrap())
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

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Record files (not transcripts or sidecars) under a method directory, sorted.
pub fn record_files(method_dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(method_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let n = p.file_name().unwrap().to_str().unwrap();
            n.ends_with(".jsonl") && !n.ends_with(".transcript.jsonl")
        })
        .collect();
    v.sort();
    v
}

pub fn bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_llmab"))
}
