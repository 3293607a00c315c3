use crate::types::{LabeledSentence, SentenceError, Tag};

/// Positions of `I` tags that do not continue a name: an `I` at index 0 or
/// directly after an `O`.
pub fn iob_violations(tags: &[Tag]) -> Vec<usize> {
    tags.iter()
        .enumerate()
        .filter(|&(i, &tag)| tag == Tag::I && (i == 0 || tags[i - 1] == Tag::O))
        .map(|(i, _)| i)
        .collect()
}

/// Every IOB violation in `s`; empty iff the sentence is well formed.
pub fn validate_iob(s: &LabeledSentence) -> Result<Vec<usize>, SentenceError> {
    if s.tokens.len() != s.tags.len() {
        return Err(SentenceError::LengthMismatch {
            tokens: s.tokens.len(),
            tags: s.tags.len(),
        });
    }
    Ok(iob_violations(&s.tags))
}

pub fn is_valid_iob(tags: &[Tag]) -> bool {
    iob_violations(tags).is_empty()
}

/// Turn every violating `I` into `B`, in place.
pub fn repair_tags(tags: &mut [Tag]) {
    let mut previous = Tag::O;
    for tag in tags.iter_mut() {
        if *tag == Tag::I && previous == Tag::O {
            *tag = Tag::B;
        }
        previous = *tag;
    }
}

pub fn repair_iob(s: &LabeledSentence) -> LabeledSentence {
    let mut out = s.clone();
    repair_tags(&mut out.tags);
    out
}
