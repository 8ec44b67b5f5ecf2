//! Client for OpenAI-compatible chat-completion endpoints.
//!
//! Serves hosted and self-hosted (vLLM-style) deployments through one wire
//! protocol. Three behaviors matter to the pipelines built on top:
//!
//! - **Bounded concurrency**: batches keep at most `max_in_flight` requests
//!   outstanding and return results in input order regardless of completion
//!   order.
//! - **Retry with backoff**: transport failures, 429s, and 5xx responses are
//!   retried with exponential backoff up to a configured cap; authentication
//!   failures are never retried.
//! - **Journaling**: when a journal path is configured, every
//!   request/response pair is appended to a JSONL cache keyed by a content
//!   hash. Re-runs replay from the journal without touching the network,
//!   which makes pipelines resumable, reproducible, and cheap.
//!
//! The "thinking mode" switch is provider-specific, so the exact JSON merged
//! into the request body for each mode is configuration
//! ([`GatewayConfig::thinking_extra`] / [`GatewayConfig::non_thinking_extra`]),
//! defaulting to the `chat_template_kwargs.enable_thinking` convention.

mod client;
mod journal;

pub use client::GatewayClient;
pub use journal::{Journal, JournalEntry, JournalResponse};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("authentication rejected (status {status})")]
    Auth { status: u16 },
    #[error("request rejected (status {status}): {body}")]
    Http { status: u16, body: String },
    #[error("retries exhausted after {attempts} attempts (last status {last_status:?}): {message}")]
    ExhaustedRetries { attempts: u32, last_status: Option<u16>, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("journal error: {0}")]
    Journal(#[from] std::io::Error),
}

/// Endpoint, credential, retry, and journaling settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    /// Endpoint base, e.g. `http://localhost:8000`.
    pub base_url: String,
    /// Bearer token; omitted entirely when `None` (local deployments).
    pub api_key: Option<String>,
    /// Appended to `base_url`.
    pub completions_path: String,
    pub timeout_secs: u64,
    /// Additional attempts after the first (so 3 means up to 4 calls).
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    /// Global cap on concurrently outstanding requests for this client.
    pub max_in_flight: usize,
    /// JSONL journal for replayable runs; `None` disables caching.
    pub journal_path: Option<std::path::PathBuf>,
    /// JSON merged into the request body when `thinking_mode` is on.
    pub thinking_extra: serde_json::Value,
    /// JSON merged into the request body when `thinking_mode` is off.
    pub non_thinking_extra: serde_json::Value,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            base_url: "http://localhost:8000".to_string(),
            api_key: None,
            completions_path: "/v1/chat/completions".to_string(),
            timeout_secs: 600,
            max_retries: 3,
            initial_backoff_ms: 250,
            max_backoff_ms: 10_000,
            max_in_flight: 8,
            journal_path: None,
            thinking_extra: serde_json::json!({
                "chat_template_kwargs": {"enable_thinking": true}
            }),
            non_thinking_extra: serde_json::json!({
                "chat_template_kwargs": {"enable_thinking": false}
            }),
        }
    }
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: "user".into(), content: content.into() }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Message { role: "system".into(), content: content.into() }
    }
}

/// A single generation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub model_name: String,
    pub messages: Vec<Message>,
    pub thinking_mode: bool,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Caller-chosen id, echoed on the result; unique within a run.
    pub request_id: String,
    /// Folded into the journal hash; set it to force a fresh sample for an
    /// otherwise identical payload (e.g. a parse-failure retry).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_salt: Option<String>,
}

impl GenerationRequest {
    /// Single user-message request.
    pub fn user(
        model_name: impl Into<String>,
        content: impl Into<String>,
        thinking_mode: bool,
        max_tokens: u32,
        temperature: f64,
        request_id: impl Into<String>,
    ) -> Self {
        GenerationRequest {
            model_name: model_name.into(),
            messages: vec![Message::user(content)],
            thinking_mode,
            max_tokens,
            temperature,
            request_id: request_id.into(),
            cache_salt: None,
        }
    }

    /// Copy with a cache salt (forces a cache miss for retries).
    pub fn with_salt(mut self, salt: impl Into<String>) -> Self {
        self.cache_salt = Some(salt.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// A completed (or failed) generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub request_id: String,
    pub text: String,
    pub finish_reason: FinishReason,
    pub usage: TokenUsage,
    pub attempts: u32,
    /// Populated on error-marked results in batch mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GenerationResult {
    pub fn is_error(&self) -> bool {
        self.finish_reason == FinishReason::Error
    }
}
