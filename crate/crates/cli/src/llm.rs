//! OpenAI-style chat-completions client.

use std::time::Duration;

use metaflora_core::generative::{ClientError, CompletionClient, PromptRequest, SYSTEM_PREAMBLE};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::Deserialize;
use serde_json::json;

pub const API_KEY_VAR: &str = "METAPHOR_LLM_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

pub struct ChatClient {
    http: Client,
    endpoint: String,
    api_key: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl ChatClient {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> reqwest::Result<Self> {
        Ok(Self {
            http: Client::builder().timeout(Duration::from_secs(60)).build()?,
            endpoint: endpoint.into(),
            api_key: api_key.into(),
        })
    }
}

pub fn classify_status(status: StatusCode) -> Option<ClientError> {
    if status.is_success() {
        None
    } else if status == StatusCode::TOO_MANY_REQUESTS {
        Some(ClientError::RateLimited)
    } else if status.is_server_error() {
        Some(ClientError::Transient(format!("HTTP {status}")))
    } else {
        Some(ClientError::Fatal(format!("HTTP {status}")))
    }
}

impl CompletionClient for ChatClient {
    fn complete(&self, _: &str, prompt: &str, request: &PromptRequest, _: u32) -> Result<String, ClientError> {
        let body = json!({
            "model": request.model_name,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": SYSTEM_PREAMBLE},
                {"role": "user", "content": prompt},
            ],
        });
        let response = self
            .http
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ClientError::Transient(e.to_string()))?;
        if let Some(err) = classify_status(response.status()) {
            return Err(err);
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| ClientError::Fatal(format!("malformed response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ClientError::Fatal("response has no message content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_classes() {
        assert_eq!(classify_status(StatusCode::OK), None);
        assert_eq!(classify_status(StatusCode::TOO_MANY_REQUESTS), Some(ClientError::RateLimited));
        assert!(matches!(classify_status(StatusCode::BAD_GATEWAY), Some(ClientError::Transient(_))));
        assert!(matches!(classify_status(StatusCode::UNAUTHORIZED), Some(ClientError::Fatal(_))));
    }
}
