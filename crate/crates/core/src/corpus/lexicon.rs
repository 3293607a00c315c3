use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::matcher::{tags_from_matches, PhraseMatcher};
use super::tokenize::{match_key, match_keys};
use crate::types::{Language, LabeledSentence};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("entry {index}: surface is empty")]
    EmptySurface { index: usize },
    #[error("entry {index}: surface {surface:?} contains a tab or newline")]
    ControlCharacter { index: usize, surface: String },
    #[error("duplicate entry {surface:?} for language {language}")]
    Duplicate { surface: String, language: Language },
    #[error("lexicon csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("lexicon csv header must be `surface,is_metaphoric,language`, found `{0}`")]
    Header(String),
}

/// A flower or plant name with its metaphoricity annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameEntry {
    pub surface: String,
    pub is_metaphoric: bool,
    pub language: Language,
}

impl NameEntry {
    pub fn new(surface: impl Into<String>, is_metaphoric: bool, language: Language) -> Self {
        Self {
            surface: surface.into(),
            is_metaphoric,
            language,
        }
    }
}

/// Validated set of names with a case-folded lookup index.
#[derive(Debug, Clone, Default)]
pub struct NameLexicon {
    entries: Vec<NameEntry>,
    index: HashMap<(String, Language), usize>,
}

fn fold(surface: &str) -> String {
    surface
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl NameLexicon {
    pub fn new(entries: Vec<NameEntry>) -> Result<Self, LexiconError> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, entry) in entries.iter().enumerate() {
            if entry.surface.contains(['\t', '\n', '\r']) {
                return Err(LexiconError::ControlCharacter {
                    index: i,
                    surface: entry.surface.clone(),
                });
            }
            if entry.surface.trim().is_empty() {
                return Err(LexiconError::EmptySurface { index: i });
            }
            let key = (fold(&entry.surface), entry.language);
            if index.insert(key, i).is_some() {
                return Err(LexiconError::Duplicate {
                    surface: entry.surface.clone(),
                    language: entry.language,
                });
            }
        }
        Ok(Self { entries, index })
    }

    /// Read the `surface,is_metaphoric,language` CSV format.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, LexiconError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != ["surface", "is_metaphoric", "language"] {
            return Err(LexiconError::Header(header.join(",")));
        }
        let entries = rdr
            .deserialize::<NameEntry>()
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[NameEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, surface: &str, language: Language) -> Option<&NameEntry> {
        self.index
            .get(&(fold(surface), language))
            .map(|&i| &self.entries[i])
    }

    pub fn metaphoric_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_metaphoric).count()
    }
}

/// Projects metaphoric lexicon names onto tokenized sentences as IOB tags.
#[derive(Debug, Clone)]
pub struct LabelProjector {
    matcher: PhraseMatcher,
}

impl LabelProjector {
    /// Only metaphoric entries produce `B`/`I`. With `language` set, entries of
    /// other languages are ignored.
    pub fn new(lexicon: &NameLexicon, language: Option<Language>) -> Self {
        let phrases = lexicon
            .entries()
            .iter()
            .filter(|e| e.is_metaphoric && language.is_none_or(|l| l == e.language))
            .map(|e| match_keys(&e.surface));
        Self {
            matcher: PhraseMatcher::new(phrases),
        }
    }

    pub fn project(&self, tokens: &[String]) -> LabeledSentence {
        let keys: Vec<String> = tokens.iter().map(|t| match_key(t)).collect();
        let matches = self.matcher.find(&keys);
        LabeledSentence {
            tokens: tokens.to_vec(),
            tags: tags_from_matches(tokens.len(), &matches),
        }
    }
}

/// Label one sentence against every metaphoric entry of `lexicon`.
pub fn project_labels(tokens: &[String], lexicon: &NameLexicon) -> LabeledSentence {
    LabelProjector::new(lexicon, None).project(tokens)
}
