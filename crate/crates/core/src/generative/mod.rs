//! Metaphoric name extraction with a conversational model: the fixed prompt,
//! response normalization, and regeneration of IOB tags from named spans.

mod driver;
mod parse;
mod prompt;
mod spans;

pub use driver::{
    extract, read_records, write_records, ClientError, CompletionClient, ExtractOptions,
    ExtractionRun, ReplayClient, ReplayError, ResponseRecord, RunStats,
};
pub use parse::{parse_response, ExtractionResult, ParseFailure};
pub use prompt::{build_prompt, PromptRequest, DEFAULT_MODEL, PROMPT_TEMPLATE, SYSTEM_PREAMBLE};
pub use spans::{spans_to_iob, NameTagging};
