//! BERT-style WordPiece tokenization of pre-split words.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

const CONTINUATION: &str = "##";
const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Clone)]
pub struct WordPiece {
    vocab: HashMap<String, u32>,
    tokens: Vec<String>,
    lowercase: bool,
    unk: u32,
    cls: u32,
    sep: u32,
    pad: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("vocabulary lacks the special token {0}")]
    MissingSpecial(&'static str),
    #[error("reading vocabulary: {0}")]
    Io(#[from] io::Error),
}

impl WordPiece {
    pub fn new(tokens: Vec<String>, lowercase: bool) -> Result<Self, VocabError> {
        let vocab: HashMap<String, u32> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let special = |name: &'static str| vocab.get(name).copied().ok_or(VocabError::MissingSpecial(name));
        Ok(Self {
            unk: special(UNK)?,
            cls: special(CLS)?,
            sep: special(SEP)?,
            pad: special(PAD)?,
            vocab,
            tokens,
            lowercase,
        })
    }

    /// `vocab.txt` layout: one token per line, line number is the id.
    pub fn from_file(path: &Path, lowercase: bool) -> Result<Self, VocabError> {
        let text = fs::read_to_string(path)?;
        Self::new(text.lines().map(str::to_string).collect(), lowercase)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut text = self.tokens.join("\n");
        text.push('\n');
        fs::write(path, text)
    }

    /// Vocabulary for a model trained from scratch: the special tokens, every
    /// character seen (standalone and as a continuation) and each basic
    /// piece occurring at least `min_count` times.
    pub fn build<'a, I>(words: I, lowercase: bool, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut chars: BTreeMap<char, ()> = BTreeMap::new();
        for word in words {
            for piece in basic_split(&normalize(word, lowercase)) {
                chars.extend(piece.chars().map(|c| (c, ())));
                *counts.entry(piece).or_default() += 1;
            }
        }
        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP, MASK].map(str::to_string).to_vec();
        for c in chars.keys() {
            tokens.push(c.to_string());
            tokens.push(format!("{CONTINUATION}{c}"));
        }
        for (piece, n) in counts {
            if n >= min_count && piece.chars().count() > 1 {
                tokens.push(piece);
            }
        }
        Self::new(tokens, lowercase).expect("special tokens are present")
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn cls_id(&self) -> u32 {
        self.cls
    }

    pub fn sep_id(&self) -> u32 {
        self.sep
    }

    pub fn pad_id(&self) -> u32 {
        self.pad
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Subword ids for one word. Never empty: a word with no known pieces
    /// becomes `[UNK]`.
    pub fn encode_word(&self, word: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        for piece in basic_split(&normalize(word, self.lowercase)) {
            match self.wordpiece(&piece) {
                Some(p) => ids.extend(p),
                None => ids.push(self.unk),
            }
        }
        if ids.is_empty() {
            ids.push(self.unk);
        }
        ids
    }

    /// Greedy longest-match-first segmentation.
    fn wordpiece(&self, piece: &str) -> Option<Vec<u32>> {
        let chars: Vec<char> = piece.chars().collect();
        if chars.len() > MAX_WORD_CHARS {
            return None;
        }
        let mut out = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let mut sub: String = chars[start..end].iter().collect();
                if start > 0 {
                    sub.insert_str(0, CONTINUATION);
                }
                if let Some(&id) = self.vocab.get(&sub) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            out.push(found?);
            start = end;
        }
        Some(out)
    }
}

fn normalize(word: &str, lowercase: bool) -> String {
    let cleaned: String = word.chars().filter(|c| !c.is_control()).collect();
    if lowercase {
        cleaned
            .to_lowercase()
            .nfd()
            .filter(|c| !unicode_normalization::char::is_combining_mark(*c))
            .collect()
    } else {
        cleaned
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

/// Split on whitespace and isolate every punctuation character.
fn basic_split(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() || is_punctuation(c) {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(extra: &[&str]) -> WordPiece {
        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP, MASK].map(str::to_string).to_vec();
        tokens.extend(extra.iter().map(|s| s.to_string()));
        WordPiece::new(tokens, true).unwrap()
    }

    #[test]
    fn punctuation_is_split_off() {
        assert_eq!(basic_split("(red"), ["(", "red"]);
        assert_eq!(basic_split("lion's"), ["lion", "'", "s"]);
        assert_eq!(basic_split("puff),"), ["puff", ")", ","]);
    }

    #[test]
    fn greedy_longest_match() {
        let wp = vocab(&["red", "pow", "##der", "(", "##d"]);
        let ids = wp.encode_word("(Red");
        assert_eq!(ids.iter().map(|&i| wp.token(i).unwrap()).collect::<Vec<_>>(), ["(", "red"]);
        let ids = wp.encode_word("powder");
        assert_eq!(ids.iter().map(|&i| wp.token(i).unwrap()).collect::<Vec<_>>(), ["pow", "##der"]);
        assert_eq!(wp.encode_word("xyz"), [wp.unk]);
    }

    #[test]
    fn accents_stripped_when_lowercasing() {
        assert_eq!(normalize("Árboles", true), "arboles");
        assert_eq!(normalize("Árboles", false), "Árboles");
    }

    #[test]
    fn built_vocab_covers_training_words() {
        let words = ["Moonlight", "moonlight", "rose", "(Red", "Edelweiß"];
        let wp = WordPiece::build(words, true, 2);
        assert!(wp.vocab.contains_key("moonlight"));
        assert!(!wp.vocab.contains_key("rose"));
        for w in words {
            assert!(!wp.encode_word(w).contains(&wp.unk), "{w}");
        }
        // an unseen word made of seen characters splits into several pieces
        assert!(wp.encode_word("rosemoon").len() > 1);
    }

    #[test]
    fn missing_specials_rejected() {
        assert!(matches!(
            WordPiece::new(vec!["[PAD]".into()], false),
            Err(VocabError::MissingSpecial(_))
        ));
    }

    #[test]
    fn save_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let wp = vocab(&["a", "##b"]);
        wp.save(&path).unwrap();
        let back = WordPiece::from_file(&path, true).unwrap();
        assert_eq!(back.tokens, wp.tokens);
    }
}
