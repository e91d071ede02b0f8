//! Chat-completion access: an HTTP client, an offline mock, transcript
//! logging and replay, and usage accounting.

mod http;
mod mock;
mod transcript;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::ClassCodeMap;
use crate::tabular::Dataset;

pub use http::{backoff_delay, HttpModel, HttpResponse, Transport, TransportConfig, UreqTransport};
pub use mock::{MockConfig, MockModel, MockState};
pub use transcript::{read_transcript, ReplayModel, TranscriptEntry, TranscriptWriter};

/// Default name of the environment variable holding the API key.
pub const DEFAULT_CREDENTIAL_ENV: &str = "RDDG_API_KEY";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("authentication failed (HTTP {status}): {body}")]
    Auth { status: u16, body: String },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("gave up after {attempts} attempts; last error: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("environment variable {0} is not set")]
    MissingCredential(String),
    #[error("{0} message has empty content")]
    EmptyMessage(&'static str),
    #[error("mock model has no registered reference rows")]
    NoReference,
    #[error("replay: {0}")]
    Replay(String),
    #[error("invalid transport config: {0}")]
    InvalidConfig(String),
    #[error("model state: {0}")]
    State(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.role != Role::Assistant && self.content.trim().is_empty() {
            return Err(LlmError::EmptyMessage(self.role.as_str()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Counts were estimated from text length rather than reported.
    pub estimated: bool,
}

impl Usage {
    /// Four characters per token, rounded up.
    pub fn estimate(messages: &[ChatMessage], output: &str) -> Self {
        let chars = |s: &str| s.chars().count() as u64;
        let input: u64 = messages.iter().map(|m| chars(&m.content)).sum();
        Self {
            input_tokens: input.div_ceil(4),
            output_tokens: chars(output).div_ceil(4),
            estimated: true,
        }
    }

    pub fn total(&self) -> u64 {
        self.input_tokens + self.output_tokens
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
    pub latency_secs: f64,
}

/// Currency units per million input and output tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PricePair {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

impl PricePair {
    pub fn cost(&self, usage: &Usage) -> f64 {
        (usage.input_tokens as f64 * self.input_per_million + usage.output_tokens as f64 * self.output_per_million)
            / 1e6
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageLedger {
    pub price: PricePair,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub requests: u64,
    pub estimated_requests: u64,
    pub seconds: f64,
    pub cost: f64,
}

impl UsageLedger {
    pub fn new(price: PricePair) -> Self {
        Self {
            price,
            ..Self::default()
        }
    }

    pub fn record(&mut self, completion: &Completion) {
        self.input_tokens += completion.usage.input_tokens;
        self.output_tokens += completion.usage.output_tokens;
        self.requests += 1;
        self.estimated_requests += u64::from(completion.usage.estimated);
        self.seconds += completion.latency_secs;
        self.cost += self.price.cost(&completion.usage);
    }

    pub fn total_tokens(&self) -> u64 {
        self.input_tokens + self.output_tokens
    }
}

/// Rows the next request is about, handed to models that synthesize
/// locally instead of reading them back out of the prompt.
#[derive(Clone, Copy, Debug)]
pub struct ReferenceContext<'a> {
    pub rows: &'a Dataset,
    pub codes: &'a ClassCodeMap,
    pub per_class: usize,
}

pub trait LanguageModel: Send {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, LlmError>;

    fn register_reference(&mut self, _ctx: ReferenceContext<'_>) {}

    /// Serializable internal state, for checkpoints.
    fn snapshot(&self) -> serde_json::Value {
        serde_json::Value::Null
    }

    fn restore(&mut self, _state: &serde_json::Value) -> Result<(), LlmError> {
        Ok(())
    }

    fn describe(&self) -> String;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatewaySnapshot {
    pub model: serde_json::Value,
    pub ledger: UsageLedger,
    pub seq: u64,
}

/// Wraps a model with usage accounting and optional transcript logging.
pub struct Gateway {
    model: Box<dyn LanguageModel>,
    ledger: UsageLedger,
    transcript: Option<TranscriptWriter>,
    seq: u64,
}

impl Gateway {
    pub fn new(model: Box<dyn LanguageModel>, price: PricePair) -> Self {
        Self {
            model,
            ledger: UsageLedger::new(price),
            transcript: None,
            seq: 0,
        }
    }

    pub fn with_transcript(mut self, writer: TranscriptWriter) -> Self {
        self.transcript = Some(writer);
        self
    }

    pub fn complete(&mut self, phase: &str, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        for m in messages {
            m.validate()?;
        }
        let completion = self.model.complete(messages)?;
        self.ledger.record(&completion);
        if let Some(t) = self.transcript.as_mut() {
            t.append(&TranscriptEntry {
                seq: self.seq,
                phase: phase.to_string(),
                messages: messages.to_vec(),
                response: completion.text.clone(),
                usage: completion.usage,
                latency_secs: completion.latency_secs,
            })?;
        }
        self.seq += 1;
        Ok(completion)
    }

    pub fn register_reference(&mut self, ctx: ReferenceContext<'_>) {
        self.model.register_reference(ctx);
    }

    pub fn ledger(&self) -> &UsageLedger {
        &self.ledger
    }

    pub fn describe(&self) -> String {
        self.model.describe()
    }

    pub fn snapshot(&self) -> GatewaySnapshot {
        GatewaySnapshot {
            model: self.model.snapshot(),
            ledger: self.ledger.clone(),
            seq: self.seq,
        }
    }

    pub fn restore(&mut self, snap: &GatewaySnapshot) -> Result<(), LlmError> {
        self.model.restore(&snap.model)?;
        self.ledger = snap.ledger.clone();
        self.seq = snap.seq;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<Completion>);

    impl LanguageModel for Fixed {
        fn complete(&mut self, _: &[ChatMessage]) -> Result<Completion, LlmError> {
            Ok(self.0.remove(0))
        }
        fn describe(&self) -> String {
            "fixed".into()
        }
    }

    fn completion(i: u64, o: u64) -> Completion {
        Completion {
            text: "ok".into(),
            usage: Usage {
                input_tokens: i,
                output_tokens: o,
                estimated: false,
            },
            latency_secs: 0.5,
        }
    }

    #[test]
    fn ledger_sums_deltas() {
        let mut g = Gateway::new(Box::new(Fixed(vec![completion(100, 50), completion(7, 3)])), PricePair::default());
        g.complete("x", &[ChatMessage::user("hi")]).unwrap();
        assert_eq!(g.ledger().total_tokens(), 150);
        g.complete("x", &[ChatMessage::user("hi")]).unwrap();
        assert_eq!(g.ledger().total_tokens(), 160);
        assert_eq!(g.ledger().requests, 2);
        assert_eq!(g.ledger().seconds, 1.0);
    }

    #[test]
    fn cost_per_million() {
        let price = PricePair {
            input_per_million: 0.5,
            output_per_million: 1.5,
        };
        let u = Usage {
            input_tokens: 100_000,
            output_tokens: 20_000,
            estimated: false,
        };
        assert!((price.cost(&u) - 0.08).abs() < 1e-12);
    }

    #[test]
    fn empty_user_message_rejected() {
        let mut g = Gateway::new(Box::new(Fixed(vec![])), PricePair::default());
        assert!(matches!(
            g.complete("x", &[ChatMessage::user("  ")]),
            Err(LlmError::EmptyMessage("user"))
        ));
        assert!(ChatMessage::assistant("").validate().is_ok());
    }

    #[test]
    fn estimate_rounds_up() {
        let u = Usage::estimate(&[ChatMessage::user("abcde")], "abc");
        assert_eq!((u.input_tokens, u.output_tokens, u.estimated), (2, 1, true));
    }
}
