//! Lowercasing tokenizer shared by the lexicon matcher and the embedder.

/// Lowercases `text` and splits it on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Number of (possibly overlapping) occurrences of `phrase` as a contiguous
/// run of tokens.
pub fn count_phrase(tokens: &[String], phrase: &[String]) -> usize {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return 0;
    }
    tokens.windows(phrase.len()).filter(|w| *w == phrase).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(
            tokenize("Making MONEY from-interest, is easy!"),
            vec!["making", "money", "from", "interest", "is", "easy"]
        );
        assert!(tokenize("  ..  ").is_empty());
    }

    #[test]
    fn phrase_counts() {
        let t = tokenize("payday loan then another payday loan");
        assert_eq!(count_phrase(&t, &tokenize("payday loan")), 2);
        assert_eq!(count_phrase(&t, &tokenize("loan")), 2);
        assert_eq!(count_phrase(&t, &tokenize("bet")), 0);
        assert_eq!(count_phrase(&t, &[]), 0);
    }

    #[test]
    fn partial_words_do_not_match() {
        let t = tokenize("a better alphabet");
        assert_eq!(count_phrase(&t, &tokenize("bet")), 0);
    }
}
