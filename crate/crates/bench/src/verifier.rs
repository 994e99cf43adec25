//! Verifier implementations shipped with the workflow.

use std::time::Duration;

use kgxbench::fsv::{Prompt, Verifier, VerifierError, CONSTRAINT_PREFIX};
use serde_json::{json, Value};

/// Deterministic stand-in for an LLM that reads the prompt literally.
///
/// With an explanation it answers the first entity of the explanation
/// lines that is not the query subject. Without one it picks the first
/// listed option of a constrained prompt and gives up otherwise.
#[derive(Debug, Default, Clone, Copy)]
pub struct ReaderVerifier;

fn parse_triple_line(line: &str) -> Option<[&str; 3]> {
    let inner = line.trim().strip_prefix('(')?.strip_suffix(')')?;
    let parts: Vec<&str> = inner.split(", ").collect();
    match parts.as_slice() {
        [s, p, o] => Some([s, p, o]),
        _ => None,
    }
}

impl ReaderVerifier {
    pub fn answer(text: &str) -> String {
        let lines: Vec<&str> = text.lines().collect();
        let query_at = lines
            .iter()
            .position(|l| l.starts_with('(') && l.trim_end().ends_with(", ?)"));
        if let Some(q) = query_at {
            let subject = parse_triple_line(lines[q]).map(|t| t[0]).unwrap_or("");
            for line in &lines[q + 1..] {
                let Some([s, _, o]) = parse_triple_line(line) else { break };
                if let Some(e) = [s, o].into_iter().find(|&e| e != subject) {
                    return e.to_owned();
                }
            }
        }
        lines
            .iter()
            .find_map(|l| l.strip_prefix(CONSTRAINT_PREFIX))
            .and_then(|options| options.split(", ").next())
            .unwrap_or("")
            .to_owned()
    }
}

impl Verifier for ReaderVerifier {
    fn simulate(&self, prompts: &[Prompt]) -> Result<Vec<String>, VerifierError> {
        Ok(prompts.iter().map(|p| Self::answer(&p.text)).collect())
    }
}

/// Chat-completion client. Every prompt is sent as its own single-message
/// conversation with temperature 0.
pub struct RemoteVerifier {
    agent: ureq::Agent,
    url: String,
    model: String,
    max_tokens: u32,
    token: Option<String>,
}

impl RemoteVerifier {
    /// Environment variable holding the bearer token.
    pub const TOKEN_ENV: &'static str = "KGXBENCH_API_KEY";

    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        RemoteVerifier {
            agent: ureq::AgentBuilder::new().timeout(Duration::from_secs(60)).build(),
            url: url.into(),
            model: model.into(),
            max_tokens: 32,
            token: std::env::var(Self::TOKEN_ENV).ok().filter(|t| !t.is_empty()),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.agent = ureq::AgentBuilder::new().timeout(timeout).build();
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
            "max_tokens": self.max_tokens,
        })
    }

    fn ask(&self, prompt: &str) -> Result<String, VerifierError> {
        let mut request = self.agent.post(&self.url).set("Content-Type", "application/json");
        if let Some(token) = &self.token {
            request = request.set("Authorization", &format!("Bearer {token}"));
        }
        let response = request.send_json(self.request_body(prompt)).map_err(|e| match e {
            ureq::Error::Status(code, r) => {
                VerifierError::Transport(format!("HTTP {code}: {}", r.into_string().unwrap_or_default()))
            }
            other => VerifierError::Transport(other.to_string()),
        })?;
        let body: Value = response
            .into_json()
            .map_err(|e| VerifierError::Malformed(e.to_string()))?;
        parse_completion(&body)
    }
}

/// Content of the first choice of a chat-completion response.
pub fn parse_completion(body: &Value) -> Result<String, VerifierError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| VerifierError::Malformed(format!("no choices[0].message.content in {body}")))
}

impl Verifier for RemoteVerifier {
    fn simulate(&self, prompts: &[Prompt]) -> Result<Vec<String>, VerifierError> {
        prompts.iter().map(|p| self.ask(&p.text)).collect()
    }
}
