use metaflora_core::alignment::{align_labels, SubwordLabel, WordOffsets};
use metaflora_core::Tag;

use crate::config::label_id;
use crate::error::TaggerError;
use crate::wordpiece::WordPiece;

/// One sentence ready for the encoder.
///
/// `ids` starts with `[CLS]` and ends with `[SEP]`; `labels` runs parallel to
/// `ids` with `None` on specials and continuation subwords. `offsets` index
/// the subwords between the two specials and cover only the words that fit
/// in the length budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedBatch {
    pub ids: Vec<u32>,
    pub labels: Vec<Option<u32>>,
    pub offsets: WordOffsets,
    pub words: usize,
}

impl AlignedBatch {
    pub fn truncated(&self) -> bool {
        self.offsets.word_count() < self.words
    }
}

pub fn encode_sentence(
    tokenizer: &WordPiece,
    words: &[String],
    tags: Option<&[Tag]>,
    max_sequence_length: usize,
) -> Result<AlignedBatch, TaggerError> {
    let pieces: Vec<Vec<u32>> = words.iter().map(|w| tokenizer.encode_word(w)).collect();
    let counts: Vec<usize> = pieces.iter().map(Vec::len).collect();
    let placeholder;
    let tags = match tags {
        Some(t) => t,
        None => {
            placeholder = vec![Tag::O; words.len()];
            &placeholder
        }
    };
    let aligned = align_labels(words, tags, &counts)?;
    let mut offsets = aligned.offsets;
    offsets.truncate_to(max_sequence_length.saturating_sub(2));
    let kept = offsets.subword_count();

    let mut ids = Vec::with_capacity(kept + 2);
    ids.push(tokenizer.cls_id());
    ids.extend(pieces.into_iter().flatten().take(kept));
    ids.push(tokenizer.sep_id());

    let mut labels = Vec::with_capacity(kept + 2);
    labels.push(None);
    labels.extend(aligned.labels[..kept].iter().map(|l| match l {
        SubwordLabel::Label(t) => Some(label_id(*t)),
        SubwordLabel::Ignore => None,
    }));
    labels.push(None);

    Ok(AlignedBatch {
        ids,
        labels,
        offsets,
        words: words.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordpiece::{CLS, MASK, PAD, SEP, UNK};

    fn tokenizer() -> WordPiece {
        let mut t: Vec<String> = [PAD, UNK, CLS, SEP, MASK].map(str::to_string).to_vec();
        t.extend(["red", "(", "pow", "##der", "puff", ")"].map(str::to_string));
        WordPiece::new(t, true).unwrap()
    }

    fn words(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn first_subword_labeled_specials_ignored() {
        let tok = tokenizer();
        let w = words("(Red powder puff)");
        let e = encode_sentence(&tok, &w, Some(&[Tag::B, Tag::I, Tag::I]), 128).unwrap();
        // [CLS] ( red pow ##der puff ) [SEP]
        assert_eq!(e.ids.len(), 8);
        assert_eq!(
            e.labels,
            [None, Some(1), None, Some(2), None, Some(2), None, None]
        );
        assert!(!e.truncated());
    }

    #[test]
    fn truncation_keeps_whole_words() {
        let tok = tokenizer();
        let w = words("(Red powder puff)");
        // budget of 4 subwords: "(Red" (2) and "powder" (2) fit, "puff)" does not
        let e = encode_sentence(&tok, &w, None, 6).unwrap();
        assert_eq!(e.offsets.word_count(), 2);
        assert_eq!(e.ids.len(), 6);
        assert!(e.truncated());
    }
}
