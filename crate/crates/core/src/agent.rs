//! Shared plumbing for the prompt-driven agents.

use serde::{Deserialize, Serialize};

use crate::error::{GatewayError, ParseError};
use crate::gateway::{ChatClient, ChatRequest, UserPart};

/// Decoding parameters for one agent role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model_id: String,
    pub temperature: f32,
    pub max_tokens: u32,
}

impl ModelSettings {
    pub fn new(model_id: impl Into<String>, max_tokens: u32) -> Self {
        Self {
            model_id: model_id.into(),
            temperature: 0.0,
            max_tokens,
        }
    }

    pub fn request(&self, system_text: &str, user_parts: Vec<UserPart>) -> ChatRequest {
        ChatRequest {
            system_text: system_text.to_string(),
            user_parts,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            model_id: self.model_id.clone(),
            attempt: 0,
        }
    }
}

pub(crate) enum Asked<T> {
    Parsed { value: T, raw: Vec<String> },
    Failed { cause: ParseError, raw: Vec<String> },
}

/// Sends `request`, parses the answer and retries once with the same
/// prompt when parsing fails.
pub(crate) async fn ask<C, T, F>(
    client: &C,
    request: ChatRequest,
    parse: F,
) -> Result<Asked<T>, GatewayError>
where
    C: ChatClient + ?Sized,
    F: Fn(&str) -> Result<T, ParseError>,
{
    let mut raw = Vec::with_capacity(2);
    let mut request = request;
    loop {
        let text = client.chat(&request).await?.text;
        let parsed = parse(&text);
        raw.push(text);
        match parsed {
            Ok(value) => return Ok(Asked::Parsed { value, raw }),
            Err(cause) if request.attempt >= 1 => return Ok(Asked::Failed { cause, raw }),
            Err(cause) => {
                tracing::debug!(%cause, "unparseable answer, retrying once");
                request = request.retry();
            }
        }
    }
}
