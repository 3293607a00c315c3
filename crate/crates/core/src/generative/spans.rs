use crate::corpus::{match_key, match_keys, tags_from_matches, PhraseMatcher};
use crate::types::LabeledSentence;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameTagging {
    pub sentence: LabeledSentence,
    /// Names that could not be located in the tokens.
    pub unmatched: Vec<String>,
}

/// Tag every occurrence of `names` in `tokens` as `B I…I`. Matching ignores
/// case and outer punctuation; overlaps resolve longest first, then leftmost.
pub fn spans_to_iob(tokens: &[String], names: &[String]) -> NameTagging {
    let keys: Vec<String> = tokens.iter().map(|t| match_key(t)).collect();
    let matcher = PhraseMatcher::new(names.iter().map(|n| match_keys(n)));
    let matches = matcher.find(&keys);
    let mut hit = vec![false; names.len()];
    for m in &matches {
        hit[m.phrase] = true;
    }
    NameTagging {
        sentence: LabeledSentence {
            tokens: tokens.to_vec(),
            tags: tags_from_matches(tokens.len(), &matches),
        },
        unmatched: names
            .iter()
            .zip(hit)
            .filter(|(_, h)| !h)
            .map(|(n, _)| n.clone())
            .collect(),
    }
}
