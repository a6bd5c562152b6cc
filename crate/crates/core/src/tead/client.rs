//! Annotation providers. Two implementations ship: a live chat-completion
//! HTTP client, and an offline client that answers from a directory of
//! response files keyed by a hash of the request. Tests and CI use the
//! offline client, so no network or API key is ever required there.

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("response missing completion content")]
    MissingContent,
    #[error("fixture not found: {0}")]
    FixtureMissing(String),
    #[error("API key environment variable {0} is not set")]
    MissingApiKey(String),
}

/// A provider that turns a prompt into a raw completion.
pub trait AnnotationClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ClientError>;

    /// Human-readable provider name for logs and summaries.
    fn name(&self) -> &str;
}

/// Stable key for offline fixtures: first 16 hex chars of SHA-256(prompt).
pub fn request_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    hex::encode(&digest[..8])
}

/// Offline provider: responses live in a directory as `<hash>.txt` files.
pub struct FixtureClient {
    dir: PathBuf,
}

impl FixtureClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn fixture_path(&self, prompt: &str) -> PathBuf {
        self.dir.join(format!("{}.txt", request_hash(prompt)))
    }

    /// Write the canned response a prompt should receive.
    pub fn store_fixture(&self, prompt: &str, response: &str) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.fixture_path(prompt);
        fs::write(&path, response)?;
        Ok(path)
    }
}

impl AnnotationClient for FixtureClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let path = self.fixture_path(prompt);
        fs::read_to_string(&path)
            .map_err(|_| ClientError::FixtureMissing(path.display().to_string()))
    }

    fn name(&self) -> &str {
        "fixtures"
    }
}

/// Configuration for the live chat-completion provider. The API key comes
/// from the environment, never from the config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HttpClientConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_api_key_env() -> String {
    "EXPCLIP_API_KEY".to_string()
}

fn default_timeout_secs() -> u64 {
    60
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: Option<String>,
}

/// Live provider speaking the common chat-completion JSON protocol.
pub struct HttpClient {
    config: HttpClientConfig,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(config: HttpClientConfig) -> Result<Self, ClientError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| ClientError::MissingApiKey(config.api_key_env.clone()))?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self {
            config,
            api_key,
            http,
        })
    }
}

impl AnnotationClient for HttpClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: 0.0,
        };
        let response = self
            .http
            .post(&self.config.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(ClientError::Status(status.as_u16()));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or(ClientError::MissingContent)
    }

    fn name(&self) -> &str {
        "http"
    }
}
