//! Response cache with record/replay logs.
//!
//! A replay log is line-delimited JSON, one `{key, response, timestamp_ms}`
//! object per completion, `response` base64-encoded.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::client::{ChatClient, ChatRequest};
use crate::error::{GatewayError, Result};

/// Hex SHA-256 over the model, temperature bits, sample index, parse attempt
/// and prompt. Fields are length-prefixed so no two tuples share an encoding.
pub fn cache_key(model: &str, temperature: f64, prompt: &str, sample_index: u64, attempt: u32) -> String {
    let mut h = Sha256::new();
    h.update((model.len() as u64).to_le_bytes());
    h.update(model.as_bytes());
    h.update(temperature.to_bits().to_le_bytes());
    h.update(sample_index.to_le_bytes());
    h.update(attempt.to_le_bytes());
    h.update((prompt.len() as u64).to_le_bytes());
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub key: String,
    pub response: String,
    pub timestamp_ms: u64,
}

impl ReplayEntry {
    pub fn new(key: String, text: &str) -> Self {
        let timestamp_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
        Self { key, response: STANDARD.encode(text), timestamp_ms }
    }

    pub fn text(&self) -> Result<String> {
        let bytes = STANDARD
            .decode(&self.response)
            .map_err(|e| GatewayError::Envelope(format!("replay entry {}: {e}", self.key)))?;
        String::from_utf8(bytes).map_err(|e| GatewayError::Envelope(format!("replay entry {}: {e}", self.key)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "log", rename_all = "snake_case")]
pub enum GatewayMode {
    Live,
    Record(PathBuf),
    Replay(PathBuf),
}

fn log_error(path: &Path, message: impl ToString) -> GatewayError {
    GatewayError::Log { path: path.display().to_string(), message: message.to_string() }
}

/// Reads a replay log; the first entry for a key wins.
pub fn load_replay_log(path: &Path) -> Result<HashMap<String, String>> {
    let file = File::open(path).map_err(|e| log_error(path, e))?;
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| log_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ReplayEntry =
            serde_json::from_str(&line).map_err(|e| log_error(path, format!("line {}: {e}", i + 1)))?;
        let text = entry.text()?;
        map.entry(entry.key).or_insert(text);
    }
    Ok(map)
}

/// Serves completions from memory first, then from the log (replay) or the
/// network (live, record). Shareable across threads.
pub struct CachedClient {
    client: Option<ChatClient>,
    mode: GatewayMode,
    entries: Mutex<HashMap<String, String>>,
    log: Mutex<Option<File>>,
    network_calls: AtomicU64,
}

impl CachedClient {
    pub fn live(client: ChatClient) -> Self {
        Self {
            client: Some(client),
            mode: GatewayMode::Live,
            entries: Mutex::default(),
            log: Mutex::new(None),
            network_calls: AtomicU64::new(0),
        }
    }

    /// Appends every network response to `path`. Entries already in the log
    /// are served without a request, so an interrupted recording resumes.
    pub fn record(client: ChatClient, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let entries = if path.exists() { load_replay_log(&path)? } else { HashMap::new() };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| log_error(&path, e))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| log_error(&path, e))?;
        Ok(Self {
            client: Some(client),
            mode: GatewayMode::Record(path),
            entries: Mutex::new(entries),
            log: Mutex::new(Some(file)),
            network_calls: AtomicU64::new(0),
        })
    }

    /// Serves strictly from the log; there is no client to reach the network.
    pub fn replay(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let entries = load_replay_log(&path)?;
        Ok(Self {
            client: None,
            mode: GatewayMode::Replay(path),
            entries: Mutex::new(entries),
            log: Mutex::new(None),
            network_calls: AtomicU64::new(0),
        })
    }

    pub fn mode(&self) -> &GatewayMode {
        &self.mode
    }

    /// Requests that went to the chat client.
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn cached_complete(&self, request: &ChatRequest, sample_index: u64, attempt: u32) -> Result<String> {
        let key = cache_key(&request.model, request.temperature, request.prompt(), sample_index, attempt);
        if let Some(hit) = self.entries.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let client = match (&self.mode, &self.client) {
            (GatewayMode::Replay(_), _) | (_, None) => return Err(GatewayError::ReplayMiss { digest: key }),
            (_, Some(c)) => c,
        };
        self.network_calls.fetch_add(1, Ordering::SeqCst);
        let text = client.complete(request)?.text;
        if let GatewayMode::Record(path) = &self.mode {
            let mut line = serde_json::to_string(&ReplayEntry::new(key.clone(), &text)).expect("entry serializes");
            line.push('\n');
            let mut log = self.log.lock().expect("log poisoned");
            if let Some(file) = log.as_mut() {
                file.write_all(line.as_bytes()).and_then(|_| file.flush()).map_err(|e| log_error(path, e))?;
            }
        }
        // Concurrent identical misses keep the first stored response.
        let mut entries = self.entries.lock().expect("cache poisoned");
        Ok(entries.entry(key).or_insert(text).clone())
    }
}
