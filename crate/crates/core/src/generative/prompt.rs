use serde::{Deserialize, Serialize};

pub const PROMPT_TEMPLATE: &str = "Is there a metaphoric flower name or metaphoric plant name included in the following sentence, say yes or no, if yes what is the metaphoric flower or metaphoric plant names in the sentence separately";

/// System message sent ahead of every prompt.
pub const SYSTEM_PREAMBLE: &str = "You are an assistant that answers questions about botanical terminology.";

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

/// The question asked for one sentence: the fixed template, `" : "`, then the
/// sentence verbatim.
pub fn build_prompt(sentence: &str) -> String {
    format!("{PROMPT_TEMPLATE} : {sentence}")
}

/// Per-request settings for the chat model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
}

impl Default for PromptRequest {
    fn default() -> Self {
        Self {
            model_name: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_retries: 3,
        }
    }
}
