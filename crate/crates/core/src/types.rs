//! Shared data types: tags, labeled sentences and datasets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// IOB tag of a single word token.
///
/// `B` starts a metaphoric name, `I` continues one and `O` is outside any name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    B,
    I,
    O,
}

impl Tag {
    pub const ALL: [Tag; 3] = [Tag::B, Tag::I, Tag::O];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::B => "B",
            Tag::I => "I",
            Tag::O => "O",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown tag `{0}` (expected B, I or O)")]
pub struct UnknownTag(pub String);

impl FromStr for Tag {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B" => Ok(Tag::B),
            "I" => Ok(Tag::I),
            "O" => Ok(Tag::O),
            other => Err(UnknownTag(other.to_string())),
        }
    }
}

/// Supported corpus languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "en")]
    English,
    #[serde(rename = "es")]
    Spanish,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::English => "en",
            Language::Spanish => "es",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported language code `{0}` (expected `en` or `es`)")]
pub struct UnknownLanguage(pub String);

impl FromStr for Language {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "en" => Ok(Language::English),
            "es" => Ok(Language::Spanish),
            other => Err(UnknownLanguage(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SentenceError {
    #[error("sentence has {tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("sentence is empty")]
    Empty,
}

/// Word tokens paired with their IOB tags.
///
/// Fields are public so that predictions and partially built data can be
/// represented; [`LabeledSentence::new`] enforces the length invariant and
/// [`crate::corpus::validate_iob`] reports structural problems.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
}

impl LabeledSentence {
    pub fn new(tokens: Vec<String>, tags: Vec<Tag>) -> Result<Self, SentenceError> {
        if tokens.len() != tags.len() {
            return Err(SentenceError::LengthMismatch {
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        if tokens.is_empty() {
            return Err(SentenceError::Empty);
        }
        Ok(Self { tokens, tags })
    }

    /// A sentence where every token is outside a name.
    pub fn all_outside(tokens: Vec<String>) -> Self {
        let tags = vec![Tag::O; tokens.len()];
        Self { tokens, tags }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn has_name(&self) -> bool {
        self.tags.contains(&Tag::B)
    }

    /// Tokens joined with single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Train,
    Test,
}

/// Ordered collection of labeled sentences in one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub sentences: Vec<LabeledSentence>,
    pub language: Language,
    pub split: Option<SplitLabel>,
}

impl Dataset {
    pub fn new(language: Language, sentences: Vec<LabeledSentence>) -> Self {
        Self {
            sentences,
            language,
            split: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(LabeledSentence::len).sum()
    }

    pub fn with_split(mut self, split: SplitLabel) -> Self {
        self.split = Some(split);
        self
    }
}
