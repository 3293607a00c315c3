/// Split raw text into sentences of whitespace-delimited word tokens.
///
/// Punctuation stays attached to its word, so `(Red powder puff)` yields the
/// tokens `(Red`, `powder` and `puff)`. A sentence ends after any token whose
/// last character is `.`, `!` or `?`, and at the end of the input.
pub fn tokenize(text: &str) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for token in text.split_whitespace() {
        current.push(token.to_string());
        if ends_sentence(token) {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

/// Tokenize each blank-line separated paragraph on its own, so a heading or
/// an unpunctuated caption never runs into the next paragraph.
pub fn tokenize_paragraphs(text: &str) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut paragraph = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            sentences.extend(tokenize(&paragraph));
            paragraph.clear();
        } else {
            paragraph.push_str(line);
            paragraph.push('\n');
        }
    }
    sentences.extend(tokenize(&paragraph));
    sentences
}

fn ends_sentence(token: &str) -> bool {
    matches!(token.chars().last(), Some('.' | '!' | '?'))
}

/// Comparison key for a token: leading and trailing non-alphanumeric
/// characters removed, then lowercased. Internal punctuation such as the
/// apostrophe in `lion's` or the hyphens in `forget-me-not` is kept.
pub fn match_key(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Match keys for every whitespace-separated piece of `text`, skipping pieces
/// that are pure punctuation.
pub fn match_keys(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(match_key)
        .filter(|k| !k.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE_ONE: &str =
        "calliandra haematocephala (Red powder puff) is an evergreen, spreading shrub";

    #[test]
    fn table_one_sentence() {
        let sentences = tokenize(TABLE_ONE);
        assert_eq!(sentences.len(), 1);
        assert_eq!(sentences[0].len(), 10);
        assert_eq!(sentences[0][2], "(Red");
        assert_eq!(sentences[0][4], "puff)");
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t ").is_empty());
    }

    #[test]
    fn whitespace_collapses() {
        assert_eq!(tokenize("a \t b"), vec![vec!["a".to_string(), "b".to_string()]]);
    }

    #[test]
    fn sentence_boundaries() {
        let s = tokenize("Roses bloom. Do they? Yes! done");
        assert_eq!(s.len(), 4);
        assert_eq!(s[0], ["Roses", "bloom."]);
        assert_eq!(s[3], ["done"]);
        // no whitespace after the period: one token, one sentence
        assert_eq!(tokenize("e.g.x"), vec![vec!["e.g.x".to_string()]]);
    }

    #[test]
    fn paragraphs_are_independent() {
        let s = tokenize_paragraphs("Title line\n\nBody one\ncontinues. Next\n");
        assert_eq!(s.len(), 3);
        assert_eq!(s[0], ["Title", "line"]);
        assert_eq!(s[1], ["Body", "one", "continues."]);
    }

    #[test]
    fn keys_strip_outer_punctuation_only() {
        assert_eq!(match_key("(Red"), "red");
        assert_eq!(match_key("puff),"), "puff");
        assert_eq!(match_key("Lion's"), "lion's");
        assert_eq!(match_key("'forget-me-not'."), "forget-me-not");
        assert_eq!(match_key("--"), "");
        assert_eq!(match_keys("  Red  - powder "), ["red", "powder"]);
    }
}
