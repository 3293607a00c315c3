//! Word/subword label alignment and span decoding for token classifiers.
//!
//! Only the first subword of each word carries the word's label; the rest are
//! ignored in the loss and in evaluation.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::repair_tags;
use crate::types::{LabeledSentence, Tag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("{words} words but {tags} tags")]
    TagCountMismatch { words: usize, tags: usize },
    #[error("{words} words but {counts} subword counts")]
    CountMismatch { words: usize, counts: usize },
    #[error("word {index} ({word:?}) has no subwords")]
    NoSubwords { index: usize, word: String },
    #[error("cannot align an empty sentence")]
    EmptySentence,
    #[error("offset map is empty")]
    MissingOffsets,
    #[error("word {word} starts at subword {start} but only {available} predictions were given")]
    PredictionsTooShort {
        word: usize,
        start: usize,
        available: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubwordLabel {
    Label(Tag),
    Ignore,
}

/// Subword ranges of each word, in subword index space.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WordOffsets {
    spans: Vec<Range<usize>>,
}

impl WordOffsets {
    pub fn from_counts(counts: &[usize]) -> Self {
        let mut start = 0;
        let spans = counts
            .iter()
            .map(|&n| {
                let r = start..start + n;
                start += n;
                r
            })
            .collect();
        Self { spans }
    }

    pub fn spans(&self) -> &[Range<usize>] {
        &self.spans
    }

    pub fn word_count(&self) -> usize {
        self.spans.len()
    }

    pub fn subword_count(&self) -> usize {
        self.spans.last().map_or(0, |r| r.end)
    }

    /// Drop every word whose subwords do not fit entirely within `limit`.
    pub fn truncate_to(&mut self, limit: usize) {
        self.spans.retain(|r| r.end <= limit);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedLabels {
    pub labels: Vec<SubwordLabel>,
    pub offsets: WordOffsets,
}

pub fn align_labels(
    words: &[String],
    tags: &[Tag],
    subword_counts: &[usize],
) -> Result<AlignedLabels, AlignError> {
    if words.is_empty() {
        return Err(AlignError::EmptySentence);
    }
    if words.len() != tags.len() {
        return Err(AlignError::TagCountMismatch {
            words: words.len(),
            tags: tags.len(),
        });
    }
    if words.len() != subword_counts.len() {
        return Err(AlignError::CountMismatch {
            words: words.len(),
            counts: subword_counts.len(),
        });
    }
    if let Some(index) = subword_counts.iter().position(|&n| n == 0) {
        return Err(AlignError::NoSubwords {
            index,
            word: words[index].clone(),
        });
    }
    let mut labels = Vec::with_capacity(subword_counts.iter().sum());
    for (&tag, &n) in tags.iter().zip(subword_counts) {
        labels.push(SubwordLabel::Label(tag));
        labels.extend(std::iter::repeat_n(SubwordLabel::Ignore, n - 1));
    }
    Ok(AlignedLabels {
        labels,
        offsets: WordOffsets::from_counts(subword_counts),
    })
}

/// Word tags read off the first subword of every word, then IOB-repaired.
pub fn decode_word_labels(predictions: &[Tag], offsets: &WordOffsets) -> Result<Vec<Tag>, AlignError> {
    if offsets.word_count() == 0 {
        return Err(AlignError::MissingOffsets);
    }
    let mut tags = offsets
        .spans()
        .iter()
        .enumerate()
        .map(|(word, r)| {
            predictions
                .get(r.start)
                .copied()
                .ok_or(AlignError::PredictionsTooShort {
                    word,
                    start: r.start,
                    available: predictions.len(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    repair_tags(&mut tags);
    Ok(tags)
}

/// A name occurrence: tokens `start..=end` of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// One span per maximal `B I*` run, sorted by start.
pub fn extract_spans(s: &LabeledSentence) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    let close = |start: usize, end: usize, spans: &mut Vec<Span>| {
        spans.push(Span {
            start,
            end,
            text: s.tokens[start..=end].join(" "),
        });
    };
    for (i, &tag) in s.tags.iter().enumerate() {
        match tag {
            Tag::B => {
                if let Some(start) = open {
                    close(start, i - 1, &mut spans);
                }
                open = Some(i);
            }
            Tag::I => {
                // an I without an open name starts one, as repair would
                if open.is_none() {
                    open = Some(i);
                }
            }
            Tag::O => {
                if let Some(start) = open.take() {
                    close(start, i - 1, &mut spans);
                }
            }
        }
    }
    if let Some(start) = open {
        close(start, s.tags.len() - 1, &mut spans);
    }
    spans
}

/// Inverse of [`extract_spans`]: IOB tags for `n` tokens from spans that do
/// not overlap.
pub fn tags_from_spans(n: usize, spans: &[Span]) -> Vec<Tag> {
    let mut tags = vec![Tag::O; n];
    for span in spans {
        tags[span.start] = Tag::B;
        for t in &mut tags[span.start + 1..=span.end] {
            *t = Tag::I;
        }
    }
    tags
}
