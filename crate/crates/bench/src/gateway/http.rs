//! Wire formats for openai-compatible chat completions and ollama generate.

use std::time::Duration;

use serde_json::{json, Value};
use triage_core::prompt::RenderedPrompt;

use super::{AttemptError, Backend, BackendConfig, BackendKind, GatewayError};

pub struct HttpBackend {
    agent: ureq::Agent,
    kind: BackendKind,
    url: String,
    model_id: String,
    temperature: f64,
    max_output_tokens: u32,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self, GatewayError> {
        let api_key = match &cfg.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| GatewayError::MissingCredential(var.clone()))?),
            None => None,
        };
        let base = cfg.base_url.trim_end_matches('/');
        let url = match cfg.kind {
            BackendKind::OpenaiCompatibleChat => format!("{base}/chat/completions"),
            BackendKind::OllamaGenerate => format!("{base}/api/generate"),
            BackendKind::Stub => return Err(GatewayError::Config("stub is not an http backend".into())),
        };
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build();
        Ok(Self {
            agent,
            kind: cfg.kind,
            url,
            model_id: cfg.model_id.clone(),
            temperature: cfg.temperature,
            max_output_tokens: cfg.max_output_tokens,
            api_key,
        })
    }

    pub fn request_body(&self, prompt: &RenderedPrompt) -> Value {
        match self.kind {
            BackendKind::OllamaGenerate => {
                let mut body = json!({
                    "model": self.model_id,
                    "prompt": prompt.user_text,
                    "stream": false,
                    "options": {
                        "temperature": self.temperature,
                        "num_predict": self.max_output_tokens,
                    },
                });
                if !prompt.system_text.is_empty() {
                    body["system"] = json!(prompt.system_text);
                }
                body
            }
            _ => {
                let mut messages = Vec::new();
                if !prompt.system_text.is_empty() {
                    messages.push(json!({"role": "system", "content": prompt.system_text}));
                }
                messages.push(json!({"role": "user", "content": prompt.user_text}));
                json!({
                    "model": self.model_id,
                    "messages": messages,
                    "temperature": self.temperature,
                    "max_tokens": self.max_output_tokens,
                })
            }
        }
    }
}

/// Pulls the generated text out of a response body.
pub fn extract_text(kind: BackendKind, body: &str) -> Result<String, AttemptError> {
    let v: Value = serde_json::from_str(body).map_err(|e| AttemptError::Protocol(e.to_string()))?;
    let text = match kind {
        BackendKind::OllamaGenerate => v.get("response"),
        _ => v.pointer("/choices/0/message/content"),
    };
    match text {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) => Ok(String::new()),
        _ => Err(AttemptError::Protocol(format!("no output text in {}", truncate(body)))),
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(200).collect()
}

impl Backend for HttpBackend {
    fn send(&self, prompt: &RenderedPrompt) -> Result<String, AttemptError> {
        let mut req = self.agent.post(&self.url).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.send_string(&self.request_body(prompt).to_string()) {
            Ok(resp) => {
                let body = resp.into_string().map_err(|e| AttemptError::Transport(e.to_string()))?;
                extract_text(self.kind, &body)
            }
            Err(ureq::Error::Status(status, resp)) => Err(AttemptError::Status {
                status,
                body: truncate(&resp.into_string().unwrap_or_default()),
            }),
            Err(ureq::Error::Transport(t)) => Err(AttemptError::Transport(t.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt() -> RenderedPrompt {
        RenderedPrompt {
            system_text: "sys".into(),
            user_text: "usr".into(),
            content_hash: "h".into(),
        }
    }

    fn backend(kind: BackendKind) -> HttpBackend {
        HttpBackend::new(&BackendConfig {
            kind,
            base_url: "http://localhost:1/v1/".into(),
            model_id: "m".into(),
            ..BackendConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn chat_body_shape() {
        let b = backend(BackendKind::OpenaiCompatibleChat);
        assert_eq!(b.url, "http://localhost:1/v1/chat/completions");
        let body = b.request_body(&prompt());
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["content"], "usr");
        assert_eq!(body["max_tokens"], 256);
        assert_eq!(body["temperature"], 0.0);
    }

    #[test]
    fn ollama_body_shape() {
        let b = backend(BackendKind::OllamaGenerate);
        assert_eq!(b.url, "http://localhost:1/v1/api/generate");
        let body = b.request_body(&prompt());
        assert_eq!(body["system"], "sys");
        assert_eq!(body["prompt"], "usr");
        assert_eq!(body["stream"], false);
        assert_eq!(body["options"]["num_predict"], 256);
    }

    #[test]
    fn response_extraction() {
        let chat = r#"{"choices":[{"message":{"role":"assistant","content":"{\"label\":\"self-care\"}"}}]}"#;
        assert_eq!(extract_text(BackendKind::OpenaiCompatibleChat, chat).unwrap(), r#"{"label":"self-care"}"#);
        assert_eq!(extract_text(BackendKind::OllamaGenerate, r#"{"response":"x","done":true}"#).unwrap(), "x");
        assert!(matches!(
            extract_text(BackendKind::OllamaGenerate, "{}"),
            Err(AttemptError::Protocol(_))
        ));
    }

    #[test]
    fn missing_credential_is_reported() {
        let cfg = BackendConfig {
            kind: BackendKind::OpenaiCompatibleChat,
            base_url: "http://x".into(),
            model_id: "m".into(),
            api_key_env: Some("TRIAGE_BENCH_SURELY_UNSET_KEY".into()),
            ..BackendConfig::default()
        };
        assert!(matches!(HttpBackend::new(&cfg), Err(GatewayError::MissingCredential(_))));
    }
}
