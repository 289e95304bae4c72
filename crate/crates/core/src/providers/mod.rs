//! Provider dialects: renders attack plans into bit-exact wire requests for
//! the three tool-calling API families (plus anything OpenAI-compatible),
//! parses tool-call responses and safety-filter blocks back out, and supplies
//! the deterministic mock used by offline campaigns and tests.

mod mock;
mod parse;
mod render;
mod transport;

pub use mock::{mock_send, MockPolicy, MockTransport};
pub use parse::parse_outcome;
pub use render::{openai_tool_json, render_request};
pub use transport::{chat_complete, EndpointConfig, LiveTransport, OutcomeSource};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::ToolChoiceMode;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProviderError {
    /// The dialect has no wire encoding for the requested mode (and no sanctioned
    /// emulation). Never silently downgraded.
    #[error("tool-choice mode {mode:?} is not supported by the {dialect} dialect")]
    UnsupportedMode { dialect: Dialect, mode: String },
    #[error("unparsable {dialect} response body (http {status}): {detail}")]
    MalformedResponse {
        dialect: Dialect,
        status: u16,
        detail: String,
    },
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

/// The three wire dialects we speak. `OpenAi` covers every OpenAI-compatible
/// chat-completions endpoint (the open-weights hosts included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    #[serde(rename = "openai")]
    OpenAi,
    Gemini,
    Claude,
}

impl Dialect {
    pub fn slug(&self) -> &'static str {
        match self {
            Dialect::OpenAi => "openai",
            Dialect::Gemini => "gemini",
            Dialect::Claude => "claude",
        }
    }

    pub fn default_endpoint(&self) -> &'static str {
        match self {
            Dialect::OpenAi => "https://api.openai.com/v1/chat/completions",
            Dialect::Gemini => "https://generativelanguage.googleapis.com/v1beta",
            Dialect::Claude => "https://api.anthropic.com/v1/messages",
        }
    }

    pub fn default_auth_env(&self) -> &'static str {
        match self {
            Dialect::OpenAi => "OPENAI_API_KEY",
            Dialect::Gemini => "GEMINI_API_KEY",
            Dialect::Claude => "ANTHROPIC_API_KEY",
        }
    }

    /// Whether the mode has a wire encoding on this dialect. Gemini's forced
    /// mode is emulated (ANY restricted to the one offered function) and
    /// reported as such via [`Dialect::mode_is_emulated`].
    pub fn supports_mode(&self, mode: &ToolChoiceMode) -> bool {
        !matches!((self, mode), (Dialect::Claude, ToolChoiceMode::None))
    }

    pub fn mode_is_emulated(&self, mode: &ToolChoiceMode) -> bool {
        matches!((self, mode), (Dialect::Gemini, ToolChoiceMode::Forced(_)))
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// One concrete endpoint to attack: dialect family, URL, model id, and the
/// name of the environment variable holding the credential. The credential
/// value itself never lives in this struct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderTarget {
    pub dialect: Dialect,
    pub endpoint: String,
    pub model: String,
    pub auth_env: String,
}

impl ProviderTarget {
    pub fn new(dialect: Dialect, model: impl Into<String>) -> Self {
        Self {
            dialect,
            endpoint: dialect.default_endpoint().to_string(),
            model: model.into(),
            auth_env: dialect.default_auth_env().to_string(),
        }
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = endpoint.into();
        self
    }
}

/// A rendered request: URL, serialized JSON body, header names. The auth
/// value is injected at send time from `auth_env`; no secret material ever
/// appears in these bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRequest {
    pub url: String,
    pub body: Vec<u8>,
    /// Header that carries the credential, e.g. `authorization`.
    pub auth_header: String,
    /// Prefix prepended to the credential value, e.g. `Bearer `.
    pub auth_prefix: String,
    /// Environment variable the credential is read from at send time.
    pub auth_env: String,
    /// Non-secret headers sent as-is (content type, API version).
    pub static_headers: Vec<(String, String)>,
}

impl WireRequest {
    pub fn body_str(&self) -> &str {
        std::str::from_utf8(&self.body).expect("wire bodies are serialized as UTF-8 JSON")
    }

    /// Digest over URL + body, used as the request id in attempt records.
    pub fn sha256_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.url.as_bytes());
        hasher.update(b"\n");
        hasher.update(&self.body);
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// What came back from a provider, reduced to the four cases the campaign
/// cares about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderOutcome {
    /// The model emitted a tool call; `arguments` maps argument names to their
    /// (stringified) values.
    ToolCall {
        name: String,
        arguments: BTreeMap<String, String>,
        raw_body: String,
    },
    /// An ordinary assistant message with no tool call.
    PlainText { text: String },
    /// The provider's safety layer blocked the request or response.
    SafetyBlocked { reason: String },
    /// HTTP/network-level failure (after retries) or a spent request budget.
    TransportError { detail: String },
}

impl ProviderOutcome {
    /// The text a judge should adjudicate: the named argument of a tool call
    /// (falling back to the first argument), or the plain message body.
    pub fn candidate_text(&self, arg_name: &str) -> Option<&str> {
        match self {
            ProviderOutcome::ToolCall { arguments, .. } => arguments
                .get(arg_name)
                .or_else(|| arguments.values().next())
                .map(String::as_str),
            ProviderOutcome::PlainText { text } => Some(text.as_str()),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ProviderOutcome::ToolCall { .. } => "tool_call",
            ProviderOutcome::PlainText { .. } => "plain_text",
            ProviderOutcome::SafetyBlocked { .. } => "safety_blocked",
            ProviderOutcome::TransportError { .. } => "transport_error",
        }
    }
}
