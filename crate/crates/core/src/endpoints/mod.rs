//! External endpoint roles: image search, chat (planner / selector / judge),
//! grounded segmentation, and plan scoring.
//!
//! Every role is a trait so pipelines can run against live HTTP services or
//! deterministic fixture-backed mocks. Wire formats for the live clients are
//! documented in `docs/endpoints.md`.

pub mod http;
pub mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::media::Image;

#[derive(Debug, Error, Clone)]
pub enum EndpointError {
    /// Transport-level failure (connection, timeout, non-2xx status).
    /// Retriable.
    #[error("transport failure: {0}")]
    Transport(String),
    /// The endpoint answered but the payload did not match the documented
    /// shape. Never retried.
    #[error("protocol violation: {0}")]
    Protocol(String),
}

/// Retry schedule for transport failures: `attempts` tries total, sleeping
/// `base_delay_ms * factor^n` between them. Parse/protocol errors are never
/// retried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay_ms: 500,
            factor: 2,
        }
    }
}

impl RetryPolicy {
    /// No-delay variant for tests and offline fixtures.
    pub fn immediate() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay_ms: 0,
            factor: 2,
        }
    }

    /// Run `op`, retrying transport errors per the schedule. On success
    /// returns the value and the number of attempts used (1-based).
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, EndpointError>,
    ) -> Result<(T, u32), (EndpointError, u32)> {
        let mut delay = self.base_delay_ms;
        for attempt in 1..=self.attempts.max(1) {
            match op() {
                Ok(value) => return Ok((value, attempt)),
                Err(err @ EndpointError::Protocol(_)) => return Err((err, attempt)),
                Err(err @ EndpointError::Transport(_)) => {
                    if attempt == self.attempts.max(1) {
                        return Err((err, attempt));
                    }
                    if delay > 0 {
                        std::thread::sleep(std::time::Duration::from_millis(delay));
                    }
                    delay = delay.saturating_mul(u64::from(self.factor));
                }
            }
        }
        unreachable!("loop always returns");
    }
}

/// One retrieved image-search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub image_url: String,
    pub title: String,
    /// Pixel payload when the endpoint supplies one; live web search records
    /// the URL only and carries a placeholder.
    pub image: Image,
}

pub trait ImageSearchEndpoint: Send + Sync {
    fn search(&self, query: &str) -> Result<Vec<SearchHit>, EndpointError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChatPart {
    Text { text: String },
    ImageUri { uri: String },
    ImageInline { image: Image },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub parts: Vec<ChatPart>,
}

impl ChatMessage {
    pub fn user(parts: Vec<ChatPart>) -> Self {
        ChatMessage {
            role: "user".into(),
            parts,
        }
    }

    pub fn user_text(text: impl Into<String>) -> Self {
        Self::user(vec![ChatPart::Text { text: text.into() }])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    /// All text and URI content concatenated, newline-separated. Mocks key
    /// fixture lookups on this.
    pub fn flat_text(&self) -> String {
        let mut out = String::new();
        for msg in &self.messages {
            for part in &msg.parts {
                match part {
                    ChatPart::Text { text } => {
                        out.push_str(text);
                        out.push('\n');
                    }
                    ChatPart::ImageUri { uri } => {
                        out.push_str(uri);
                        out.push('\n');
                    }
                    ChatPart::ImageInline { .. } => {}
                }
            }
        }
        out
    }
}

/// Chat-style endpoint; the response is read as plain text.
pub trait ChatEndpoint: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String, EndpointError>;
}

/// Raw grounded-segmentation response: a boolean grid encoded as run
/// lengths over row-major order, alternating false/true and starting with
/// a false run. `sum(counts)` must equal `height * width`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationResponse {
    pub found: bool,
    pub height: u32,
    pub width: u32,
    #[serde(default)]
    pub counts: Vec<u32>,
}

pub trait SegmentationEndpoint: Send + Sync {
    fn ground(&self, phrase: &str, frame: &Image) -> Result<SegmentationResponse, EndpointError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreModel {
    Policy,
    Reference,
}

impl ScoreModel {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreModel::Policy => "policy",
            ScoreModel::Reference => "reference",
        }
    }
}

/// Returns per-token log-probabilities of a candidate plan text under the
/// named model, given the agent context.
pub trait ScoringEndpoint: Send + Sync {
    fn token_logprobs(
        &self,
        model: ScoreModel,
        context: &str,
        plan_text: &str,
    ) -> Result<Vec<f64>, EndpointError>;
}
