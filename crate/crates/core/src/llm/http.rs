use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ChatMessage, Completion, LanguageModel, LlmError, Usage, DEFAULT_CREDENTIAL_ENV};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransportConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_attempts: u32,
    /// First backoff ceiling in seconds; doubles per retry.
    pub backoff_base_secs: f64,
    pub backoff_max_secs: f64,
    pub timeout_secs: f64,
    /// Name of the environment variable that holds the API key.
    pub credential_env: String,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo-0125".into(),
            temperature: 0.7,
            max_tokens: 4096,
            max_attempts: 5,
            backoff_base_secs: 1.0,
            backoff_max_secs: 30.0,
            timeout_secs: 120.0,
            credential_env: DEFAULT_CREDENTIAL_ENV.into(),
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: String| Err(LlmError::InvalidConfig(m));
        if self.max_attempts < 1 {
            return bad("max_attempts must be at least 1".into());
        }
        if !(self.temperature >= 0.0) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.backoff_base_secs >= 0.0) || !(self.backoff_max_secs >= 0.0) {
            return bad("backoff times must be >= 0".into());
        }
        if !(self.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive".into());
        }
        if self.endpoint.is_empty() || self.model.is_empty() {
            return bad("endpoint and model must be set".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// One POST of a JSON body. Network-level failures are `Err`; any HTTP
/// status, including errors, is `Ok`.
pub trait Transport: Send {
    fn post_json(&mut self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        Self { agent: config.into() }
    }
}

impl Transport for UreqTransport {
    fn post_json(&mut self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpResponse, String> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        for (k, v) in headers {
            req = req.header(k, v);
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Full-jitter exponential backoff: uniform in [0, min(max, base·2^(retry-1))].
pub fn backoff_delay(retry: u32, base: f64, max: f64, rng: &mut impl Rng) -> Duration {
    let ceiling = (base * 2f64.powi(retry.saturating_sub(1).min(30) as i32)).min(max);
    if ceiling <= 0.0 {
        return Duration::ZERO;
    }
    Duration::from_secs_f64(rng.random_range(0.0..=ceiling))
}

enum Failure {
    Retry(String),
    Fatal(LlmError),
}

/// OpenAI-style chat-completion client.
pub struct HttpModel {
    cfg: TransportConfig,
    transport: Box<dyn Transport>,
    sleep: Box<dyn FnMut(Duration) + Send>,
    rng: ChaCha8Rng,
}

impl HttpModel {
    pub fn new(cfg: TransportConfig) -> Result<Self, LlmError> {
        let timeout = Duration::from_secs_f64(cfg.timeout_secs.max(0.001));
        Self::with_transport(cfg, Box::new(UreqTransport::new(timeout)))
    }

    pub fn with_transport(cfg: TransportConfig, transport: Box<dyn Transport>) -> Result<Self, LlmError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            transport,
            sleep: Box::new(std::thread::sleep),
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    /// Replaces the sleep used between retries.
    pub fn with_sleep(mut self, sleep: impl FnMut(Duration) + Send + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    fn credential(&self) -> Result<String, LlmError> {
        std::env::var(&self.cfg.credential_env).map_err(|_| LlmError::MissingCredential(self.cfg.credential_env.clone()))
    }

    fn attempt(&mut self, headers: &[(String, String)], body: &str, messages: &[ChatMessage]) -> Result<Completion, Failure> {
        let resp = self
            .transport
            .post_json(&self.cfg.endpoint, headers, body)
            .map_err(Failure::Retry)?;
        match resp.status {
            200..=299 => parse_response(&resp.body, messages).map_err(Failure::Fatal),
            401 | 403 => Err(Failure::Fatal(LlmError::Auth {
                status: resp.status,
                body: resp.body,
            })),
            408 | 429 | 500..=599 => Err(Failure::Retry(format!("HTTP {}: {}", resp.status, resp.body))),
            status => Err(Failure::Fatal(LlmError::Rejected { status, body: resp.body })),
        }
    }
}

fn parse_response(body: &str, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| LlmError::Malformed(e.to_string()))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))?
        .to_string();
    let reported = v.get("usage").and_then(|u| {
        Some(Usage {
            input_tokens: u.get("prompt_tokens")?.as_u64()?,
            output_tokens: u.get("completion_tokens")?.as_u64()?,
            estimated: false,
        })
    });
    let usage = reported.unwrap_or_else(|| Usage::estimate(messages, &text));
    Ok(Completion {
        text,
        usage,
        latency_secs: 0.0,
    })
}

impl LanguageModel for HttpModel {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        let key = self.credential()?;
        let headers = vec![("Authorization".to_string(), format!("Bearer {key}"))];
        let body = json!({
            "model": self.cfg.model,
            "messages": messages.iter().map(|m| json!({"role": m.role.as_str(), "content": m.content})).collect::<Vec<_>>(),
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        })
        .to_string();
        let started = Instant::now();
        let mut last = String::new();
        for attempt in 1..=self.cfg.max_attempts {
            if attempt > 1 {
                let d = backoff_delay(attempt - 1, self.cfg.backoff_base_secs, self.cfg.backoff_max_secs, &mut self.rng);
                log::warn!("retrying request (attempt {attempt}) after {:.2}s: {last}", d.as_secs_f64());
                (self.sleep)(d);
            }
            match self.attempt(&headers, &body, messages) {
                Ok(mut c) => {
                    c.latency_secs = started.elapsed().as_secs_f64();
                    return Ok(c);
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(msg)) => last = msg,
            }
        }
        Err(LlmError::Exhausted {
            attempts: self.cfg.max_attempts,
            last,
        })
    }

    fn describe(&self) -> String {
        format!("http:{}@{}", self.cfg.model, self.cfg.endpoint)
    }
}
