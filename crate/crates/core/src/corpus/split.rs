use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::types::{Dataset, SplitLabel};

/// Default balancing ratio: at most one all-`O` sentence per sentence that
/// contains a name.
pub const DEFAULT_MAX_ALL_O_RATIO: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split sizes {train_n} + {test_n} = {expected} do not match the {actual} sentences in the dataset")]
    SizeMismatch {
        train_n: usize,
        test_n: usize,
        expected: usize,
        actual: usize,
    },
    #[error("balance ratio must be a finite non-negative number, got {0}")]
    BadRatio(f64),
}

/// Drop all-`O` sentences until at most `max_all_o_ratio` of them remain per
/// sentence containing a name. Which ones survive is chosen by a seeded
/// shuffle; survivors keep their original order.
pub fn balance(d: &Dataset, max_all_o_ratio: f64, seed: u64) -> Result<Dataset, SplitError> {
    if !max_all_o_ratio.is_finite() || max_all_o_ratio < 0.0 {
        return Err(SplitError::BadRatio(max_all_o_ratio));
    }
    let with_name = d.sentences.iter().filter(|s| s.has_name()).count();
    let mut all_o: Vec<usize> = (0..d.len()).filter(|&i| !d.sentences[i].has_name()).collect();
    let allowed = (max_all_o_ratio * with_name as f64).floor();
    if all_o.len() as f64 <= allowed {
        return Ok(d.clone());
    }
    let allowed = allowed as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all_o.shuffle(&mut rng);
    let mut keep = vec![true; d.len()];
    for &i in &all_o[allowed..] {
        keep[i] = false;
    }
    let sentences = d
        .sentences
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(s, _)| s.clone())
        .collect();
    Ok(Dataset {
        sentences,
        language: d.language,
        split: d.split,
    })
}

/// Shuffle with `seed` and cut into train and test parts of exactly the given
/// sizes. Both parts keep the shuffled order.
pub fn shuffle_split(
    d: &Dataset,
    train_n: usize,
    test_n: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), SplitError> {
    let expected = train_n + test_n;
    if expected != d.len() {
        return Err(SplitError::SizeMismatch {
            train_n,
            test_n,
            expected,
            actual: d.len(),
        });
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let pick = |idx: &[usize], label| Dataset {
        sentences: idx.iter().map(|&i| d.sentences[i].clone()).collect(),
        language: d.language,
        split: Some(label),
    };
    Ok((
        pick(&order[..train_n], SplitLabel::Train),
        pick(&order[train_n..], SplitLabel::Test),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Language, LabeledSentence, Tag};

    fn synthetic(all_o: usize, named: usize) -> Dataset {
        let mut sentences = Vec::new();
        for i in 0..all_o {
            sentences.push(LabeledSentence::all_outside(vec![format!("plain{i}")]));
        }
        for i in 0..named {
            sentences.push(
                LabeledSentence::new(vec![format!("named{i}"), "x".into()], vec![Tag::B, Tag::O])
                    .unwrap(),
            );
        }
        Dataset::new(Language::English, sentences)
    }

    #[test]
    fn balance_to_parity() {
        let d = synthetic(10, 5);
        let b = balance(&d, 1.0, 7).unwrap();
        let named = b.sentences.iter().filter(|s| s.has_name()).count();
        assert_eq!(named, 5);
        assert_eq!(b.len() - named, 5);
        // survivors keep source order
        let positions: Vec<usize> = b
            .sentences
            .iter()
            .map(|s| d.sentences.iter().position(|x| x == s).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b, balance(&d, 1.0, 7).unwrap());
    }

    #[test]
    fn balance_noop_cases() {
        let only_named = synthetic(0, 4);
        assert_eq!(balance(&only_named, 1.0, 1).unwrap(), only_named);
        let d = synthetic(10, 5);
        assert_eq!(balance(&d, 10.0, 1).unwrap(), d);
        assert_eq!(balance(&d, 0.0, 1).unwrap().len(), 5);
        assert!(balance(&d, -1.0, 1).is_err());
        assert!(balance(&d, f64::NAN, 1).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = synthetic(1010, 1010);
        let (train, test) = shuffle_split(&d, 1500, 520, 42).unwrap();
        assert_eq!((train.len(), test.len()), (1500, 520));
        assert_eq!(train.split, Some(SplitLabel::Train));
        let again = shuffle_split(&d, 1500, 520, 42).unwrap();
        assert_eq!((train, test), again);
    }

    #[test]
    fn split_edge_cases() {
        let d = synthetic(3, 3);
        let (train, test) = shuffle_split(&d, 0, 6, 1).unwrap();
        assert!(train.is_empty());
        assert_eq!(test.len(), 6);
        let err = shuffle_split(&d, 4, 4, 1).unwrap_err();
        assert_eq!(
            err,
            SplitError::SizeMismatch { train_n: 4, test_n: 4, expected: 8, actual: 6 }
        );
        assert!(err.to_string().contains('8') && err.to_string().contains('6'));
    }
}
