//! Building IOB-tagged datasets from raw text and a name lexicon.

mod conll;
mod iob;
mod lexicon;
mod matcher;
mod split;
mod tokenize;

pub use conll::{read_conll, write_conll, write_sentences, ConllError};
pub use iob::{is_valid_iob, iob_violations, repair_iob, repair_tags, validate_iob};
pub use lexicon::{project_labels, LabelProjector, LexiconError, NameEntry, NameLexicon};
pub use matcher::{tags_from_matches, PhraseMatch, PhraseMatcher};
pub use split::{
    balance, shuffle_split, SplitError, DEFAULT_MAX_ALL_O_RATIO, DEFAULT_SEED,
};
pub use tokenize::{match_key, match_keys, tokenize, tokenize_paragraphs};
