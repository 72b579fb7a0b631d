use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::backend::{BackendError, ControllerBackend};

pub const DEFAULT_KEY_VAR: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpChatConfig {
    /// Endpoint root; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub key_var: String,
    pub retries: u32,
    pub timeout_s: u64,
}

impl Default for HttpChatConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-3.5-turbo".into(),
            temperature: 0.0,
            key_var: DEFAULT_KEY_VAR.into(),
            retries: 2,
            timeout_s: 60,
        }
    }
}

/// Chat-completion client. One request in flight at a time.
pub struct HttpChat {
    config: HttpChatConfig,
    key: String,
    agent: ureq::Agent,
}

impl HttpChat {
    /// Reads the credential from `config.key_var`.
    pub fn from_env(config: HttpChatConfig) -> Result<Self, BackendError> {
        let key = std::env::var(&config.key_var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::MissingCredential(config.key_var.clone()))?;
        Ok(Self::with_key(config, key))
    }

    pub fn with_key(config: HttpChatConfig, key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, key, agent }
    }

    fn attempt(&self, context: &str) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": context}],
        });
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(&body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| BackendError::Transport(e.to_string()))?;
        if status != 200 {
            return Err(BackendError::Status { status, body: text.chars().take(500).collect() });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::InvalidResponse("no choices[0].message.content".into()))
    }
}

fn retryable(e: &BackendError) -> bool {
    match e {
        BackendError::Transport(_) => true,
        BackendError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl ControllerBackend for HttpChat {
    fn name(&self) -> &str {
        "http"
    }

    fn query(&mut self, context: &str) -> Result<String, BackendError> {
        let mut attempt = 0;
        loop {
            match self.attempt(context) {
                Err(e) if retryable(&e) && attempt < self.config.retries => {
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(200 * u64::from(attempt)));
                }
                other => return other,
            }
        }
    }
}
