//! Normalization of free-text chat answers into lists of names.
//!
//! The answer is expected to open with "yes" or "no". After a "yes", names
//! are taken from quoted segments if there are any, otherwise from the clause
//! after a colon or the last "is"/"are", split on commas, semicolons, line
//! breaks and "and". Every candidate must occur in the sentence; the rest are
//! dropped and reported.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{match_key, match_keys};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("could not interpret model response: {raw_response:?}")]
pub struct ParseFailure {
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub has_metaphor: bool,
    /// Names that occur in the sentence, deduplicated, in order of first
    /// appearance in the response.
    pub names: Vec<String>,
    /// Candidates the response offered that do not occur in the sentence.
    pub dropped: Vec<String>,
    pub raw_response: String,
}

static YES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\byes\b").unwrap());
static IS_ARE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(?:is|are)\b").unwrap());
static LIST_SEP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\s*(?:[,;\n&]|\band\b)\s*").unwrap());
static BULLET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^\s*(?:\d+[.)]|[-*•])\s+").unwrap());
static ARTICLE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^(?:the|a|an)\s+").unwrap());

pub fn parse_response(raw: &str, sentence: &str) -> Result<ExtractionResult, ParseFailure> {
    let failure = || ParseFailure {
        raw_response: raw.to_string(),
    };
    let text = raw.trim();
    let first_word: String = text
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphanumeric())
        .collect::<String>()
        .to_lowercase();
    if first_word == "no" {
        return Ok(ExtractionResult {
            has_metaphor: false,
            names: Vec::new(),
            dropped: Vec::new(),
            raw_response: raw.to_string(),
        });
    }
    let yes = YES.find(text).ok_or_else(failure)?;
    let body = &text[yes.end()..];

    let sentence_keys: Vec<String> = sentence.split_whitespace().map(match_key).collect();
    let occurs = |candidate: &str| {
        let keys = match_keys(candidate);
        !keys.is_empty() && sentence_keys.windows(keys.len()).any(|w| w == keys.as_slice())
    };

    let quoted = quoted_segments(body);
    let (names, dropped) = if !quoted.is_empty() {
        filter_candidates(quoted, &occurs)
    } else {
        let (primary, fallback) = clauses(body);
        let (names, dropped) = filter_candidates(list_items(primary, &occurs), &occurs);
        match fallback {
            Some(alt) if names.is_empty() => {
                let (alt_names, _) = filter_candidates(list_items(alt, &occurs), &occurs);
                if alt_names.is_empty() {
                    (names, dropped)
                } else {
                    (alt_names, Vec::new())
                }
            }
            _ => (names, dropped),
        }
    };
    if names.is_empty() && dropped.is_empty() {
        return Err(failure());
    }
    Ok(ExtractionResult {
        has_metaphor: true,
        names,
        dropped,
        raw_response: raw.to_string(),
    })
}

/// The clause most likely to hold the names, plus the text before an
/// "is"/"are" as a second choice ("X is a metaphoric name").
fn clauses(body: &str) -> (&str, Option<&str>) {
    if let Some((_, after)) = body.split_once(':') {
        return (after, None);
    }
    match IS_ARE.find_iter(body).last() {
        Some(m) => (&body[m.end()..], Some(&body[..m.start()])),
        None => (body, None),
    }
}

fn clean(candidate: &str) -> &str {
    candidate.trim_matches(|c: char| {
        c.is_whitespace() || matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '"' | '\'' | '“' | '”' | '‘' | '’' | '`' | '*')
    })
}

fn list_items(clause: &str, occurs: &dyn Fn(&str) -> bool) -> Vec<String> {
    let clause = BULLET.replace_all(clause, "");
    let whole = clean(&clause);
    if occurs(whole) {
        return vec![whole.to_string()];
    }
    LIST_SEP
        .split(&clause)
        .map(clean)
        .filter(|c| !c.is_empty())
        .map(str::to_string)
        .collect()
}

fn filter_candidates(
    candidates: Vec<String>,
    occurs: &dyn Fn(&str) -> bool,
) -> (Vec<String>, Vec<String>) {
    let mut names: Vec<String> = Vec::new();
    let mut seen: Vec<Vec<String>> = Vec::new();
    let mut dropped = Vec::new();
    for candidate in candidates {
        let candidate = clean(&candidate).to_string();
        let stripped = ARTICLE.replace(&candidate, "").into_owned();
        let chosen = if stripped != candidate && occurs(&stripped) {
            stripped
        } else if occurs(&candidate) {
            candidate
        } else {
            if !candidate.is_empty() {
                dropped.push(candidate);
            }
            continue;
        };
        let keys = match_keys(&chosen);
        if !seen.contains(&keys) {
            seen.push(keys);
            names.push(chosen);
        }
    }
    (names, dropped)
}

fn closer_for(open: char) -> Option<&'static [char]> {
    match open {
        '"' => Some(&['"']),
        '\'' => Some(&['\'', '’']),
        '‘' => Some(&['’', '\'']),
        '“' => Some(&['”', '"']),
        '«' => Some(&['»']),
        _ => None,
    }
}

/// Segments enclosed in matching quotes. A quote only opens after whitespace
/// or opening punctuation and only closes before whitespace or closing
/// punctuation, so apostrophes inside words (`lion's`) are left alone.
fn quoted_segments(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let opens_after = |i: usize| i == 0 || chars[i - 1].is_whitespace() || "([{:,;".contains(chars[i - 1]);
    let closes_before =
        |j: usize| j + 1 == chars.len() || chars[j + 1].is_whitespace() || ".,;:!?)]}".contains(chars[j + 1]);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let Some(closers) = closer_for(chars[i]).filter(|_| opens_after(i)) else {
            i += 1;
            continue;
        };
        let close = (i + 1..chars.len()).find(|&j| closers.contains(&chars[j]) && closes_before(j));
        match close {
            Some(j) => {
                let inner: String = chars[i + 1..j].iter().collect();
                let inner = inner.trim();
                if !inner.is_empty() {
                    out.push(inner.to_string());
                }
                i = j + 1;
            }
            None => i += 1,
        }
    }
    out
}
