use std::collections::HashMap;

use crate::types::Tag;

/// One accepted phrase occurrence: `len` tokens starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhraseMatch {
    pub start: usize,
    pub len: usize,
    /// Index of the phrase in the order it was given to [`PhraseMatcher::new`].
    pub phrase: usize,
}

impl PhraseMatch {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Finds non-overlapping occurrences of multi-token phrases in a sequence of
/// match keys. Conflicts resolve longest match first, then leftmost.
#[derive(Debug, Clone, Default)]
pub struct PhraseMatcher {
    phrases: Vec<Vec<String>>,
    by_first: HashMap<String, Vec<usize>>,
}

impl PhraseMatcher {
    /// Phrases are sequences of match keys. Empty phrases never match.
    pub fn new<I>(phrases: I) -> Self
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let phrases: Vec<Vec<String>> = phrases.into_iter().collect();
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (id, phrase) in phrases.iter().enumerate() {
            if let Some(first) = phrase.first() {
                by_first.entry(first.clone()).or_default().push(id);
            }
        }
        Self { phrases, by_first }
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Every position where some phrase occurs, overlapping or not.
    pub fn candidates(&self, keys: &[String]) -> Vec<PhraseMatch> {
        let mut out = Vec::new();
        for (start, key) in keys.iter().enumerate() {
            let Some(ids) = self.by_first.get(key) else {
                continue;
            };
            for &id in ids {
                let phrase = &self.phrases[id];
                let end = start + phrase.len();
                if end <= keys.len() && keys[start..end] == phrase[..] {
                    out.push(PhraseMatch {
                        start,
                        len: phrase.len(),
                        phrase: id,
                    });
                }
            }
        }
        out
    }

    /// Non-overlapping matches sorted by start position.
    pub fn find(&self, keys: &[String]) -> Vec<PhraseMatch> {
        let mut candidates = self.candidates(keys);
        candidates.sort_by_key(|m| (std::cmp::Reverse(m.len), m.start, m.phrase));
        let mut taken = vec![false; keys.len()];
        let mut accepted = Vec::new();
        for m in candidates {
            if taken[m.start..m.end()].iter().any(|&t| t) {
                continue;
            }
            taken[m.start..m.end()].iter_mut().for_each(|t| *t = true);
            accepted.push(m);
        }
        accepted.sort_by_key(|m| m.start);
        accepted
    }
}

/// IOB tags for a sequence of `n` tokens covered by non-overlapping matches.
pub fn tags_from_matches(n: usize, matches: &[PhraseMatch]) -> Vec<Tag> {
    let mut tags = vec![Tag::O; n];
    for m in matches {
        tags[m.start] = Tag::B;
        for tag in &mut tags[m.start + 1..m.end()] {
            *tag = Tag::I;
        }
    }
    tags
}
