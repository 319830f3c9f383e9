use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../assets/stopwords_en.txt");

/// Characters deleted inside a word instead of splitting on them, so that
/// "sandy's" becomes "sandys" and "don't" becomes "dont".
const APOSTROPHES: [char; 3] = ['\'', '\u{2019}', '\u{02BC}'];

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerRules {
    stopwords: HashSet<String>,
    drop_prefixes: Vec<String>,
    min_len: usize,
}

impl Default for TokenizerRules {
    fn default() -> Self {
        Self::from_stopword_text(DEFAULT_STOPWORDS)
    }
}

impl TokenizerRules {
    /// Parses a stopword list: one word per line, `#` starts a comment line.
    pub fn from_stopword_text(text: &str) -> Self {
        let stopwords = text
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(normalize_word)
            .collect();
        TokenizerRules {
            stopwords,
            drop_prefixes: vec!["http".into(), "www".into(), "@".into()],
            min_len: 2,
        }
    }

    pub fn from_stopword_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_stopword_text(&text))
    }

    pub fn with_min_len(mut self, min_len: usize) -> Self {
        self.min_len = min_len.max(1);
        self
    }

    pub fn with_drop_prefixes<I, S>(mut self, prefixes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.drop_prefixes = prefixes
            .into_iter()
            .map(|p| p.into().to_lowercase())
            .filter(|p| !p.is_empty())
            .collect();
        self
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn stopword_count(&self) -> usize {
        self.stopwords.len()
    }

    pub fn min_len(&self) -> usize {
        self.min_len
    }

    pub fn drop_prefixes(&self) -> &[String] {
        &self.drop_prefixes
    }

    fn dropped_by_prefix(&self, s: &str) -> bool {
        self.drop_prefixes.iter().any(|p| s.starts_with(p.as_str()))
    }

    fn keep(&self, token: &str) -> bool {
        token.chars().count() >= self.min_len
            && !token.chars().all(char::is_numeric)
            && !self.stopwords.contains(token)
            && !self.dropped_by_prefix(token)
    }
}

fn normalize_word(word: &str) -> String {
    word.to_lowercase().replace(APOSTROPHES, "")
}

/// Splits a message into normalized word tokens.
///
/// Whitespace-separated chunks that start with a drop prefix (URLs,
/// mentions) are discarded whole; the rest are lowercased, stripped of
/// apostrophes and split on every non-alphanumeric character. Pieces that
/// are too short, purely numeric or stopwords are removed.
pub fn tokenize(text: &str, rules: &TokenizerRules) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let lowered = normalize_word(chunk);
        let head = lowered.trim_start_matches(|c: char| !c.is_alphanumeric() && c != '@');
        if rules.dropped_by_prefix(head) {
            continue;
        }
        tokens.extend(
            head.split(|c: char| !c.is_alphanumeric())
                .filter(|piece| rules.keep(piece))
                .map(str::to_owned),
        );
    }
    tokens
}
