//! Tools for finding metaphor-based flower and plant names in running text
//! as IOB sequence labels.
//!
//! - [`corpus`] turns raw text and a name lexicon into tagged datasets and
//!   handles balancing, splitting and CoNLL files.
//! - [`alignment`] maps word labels onto subword pieces and back, and decodes
//!   tag sequences into name spans.
//! - [`generative`] asks a chat model about each sentence and turns its free
//!   text answers back into tags.
//! - [`evaluation`] scores predictions with token-level macro P/R/F1.

pub mod alignment;
pub mod corpus;
pub mod evaluation;
pub mod generative;
mod types;

pub use types::{
    Dataset, LabeledSentence, Language, SentenceError, SplitLabel, Tag, UnknownLanguage,
    UnknownTag,
};
