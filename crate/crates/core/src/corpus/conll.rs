//! Two-column CoNLL-style files: one `token<TAB>tag` pair per line and a
//! blank line after every sentence.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::types::{Dataset, Language, LabeledSentence, Tag};

#[derive(Debug, Error)]
pub enum ConllError {
    #[error("line {line}: missing tab between token and tag")]
    MissingTab { line: usize },
    #[error("line {line}: unknown tag `{tag}`")]
    UnknownTag { line: usize, tag: String },
    #[error("line {line}: unexpected trailing field `{extra}`")]
    TrailingField { line: usize, extra: String },
    #[error("line {line}: empty token")]
    EmptyToken { line: usize },
    #[error("sentence {sentence}: token {token:?} cannot be written (empty or contains whitespace)")]
    BadToken { sentence: usize, token: String },
    #[error("sentence {sentence}: {tokens} tokens but {tags} tags")]
    LengthMismatch {
        sentence: usize,
        tokens: usize,
        tags: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_conll<W: Write>(d: &Dataset, sink: W) -> Result<(), ConllError> {
    write_sentences(&d.sentences, sink)
}

pub fn write_sentences<W: Write>(sentences: &[LabeledSentence], mut sink: W) -> Result<(), ConllError> {
    for (i, s) in sentences.iter().enumerate() {
        if s.tokens.len() != s.tags.len() {
            return Err(ConllError::LengthMismatch {
                sentence: i,
                tokens: s.tokens.len(),
                tags: s.tags.len(),
            });
        }
        for (token, tag) in s.tokens.iter().zip(&s.tags) {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(ConllError::BadToken {
                    sentence: i,
                    token: token.clone(),
                });
            }
            writeln!(sink, "{token}\t{tag}")?;
        }
        writeln!(sink)?;
    }
    sink.flush()?;
    Ok(())
}

/// Parse a dataset. Runs of blank lines separate sentences; a final
/// sentence without a trailing blank line is accepted.
pub fn read_conll<R: BufRead>(source: R, language: Language) -> Result<Dataset, ConllError> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            if !tokens.is_empty() {
                sentences.push(LabeledSentence {
                    tokens: std::mem::take(&mut tokens),
                    tags: std::mem::take(&mut tags),
                });
            }
            continue;
        }
        let (token, rest) = line
            .split_once('\t')
            .ok_or(ConllError::MissingTab { line: lineno })?;
        if let Some((_, extra)) = rest.split_once('\t') {
            return Err(ConllError::TrailingField {
                line: lineno,
                extra: extra.to_string(),
            });
        }
        if token.is_empty() {
            return Err(ConllError::EmptyToken { line: lineno });
        }
        let tag: Tag = rest.parse().map_err(|_| ConllError::UnknownTag {
            line: lineno,
            tag: rest.to_string(),
        })?;
        tokens.push(token.to_string());
        tags.push(tag);
    }
    if !tokens.is_empty() {
        sentences.push(LabeledSentence { tokens, tags });
    }
    Ok(Dataset::new(language, sentences))
}
