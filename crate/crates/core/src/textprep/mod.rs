//! Text normalization and TF-IDF featurization.

mod vectorizer;

use std::collections::HashSet;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

pub use vectorizer::{fit_vectorizer, FeatureVector, Vectorizer, VectorizerConfig};

const STOP_WORDS_EN: &str = include_str!("stopwords_en.txt");

fn stop_words() -> &'static HashSet<&'static str> {
    static WORDS: OnceLock<HashSet<&'static str>> = OnceLock::new();
    WORDS.get_or_init(|| {
        STOP_WORDS_EN
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Whether `word` is on the bundled English stop list.
pub fn is_stop_word(word: &str) -> bool {
    stop_words().contains(word)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub remove_stop_words: bool,
    pub stem: bool,
    /// Non-numeric tokens shorter than this are dropped.
    pub min_token_len: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            remove_stop_words: true,
            stem: true,
            min_token_len: 2,
        }
    }
}

/// Normalized tokens of one text: non-empty, lowercase ASCII alphanumerics.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenStream {
    pub tokens: Vec<String>,
}

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenStream { tokens }
    }

    pub fn from_strs(tokens: &[&str]) -> Self {
        TokenStream {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

/// NFC-normalizes, lowercases, splits on every character that is not an ASCII
/// letter or digit, then drops stop words, stems and drops short tokens.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> TokenStream {
    let normalized: String = text.nfc().collect();
    let mut tokens = Vec::new();
    for raw in normalized.split(|c: char| !c.is_ascii_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        let word = raw.to_ascii_lowercase();
        if config.remove_stop_words && is_stop_word(&word) {
            continue;
        }
        let numeric = word.bytes().all(|b| b.is_ascii_digit());
        let word = if config.stem && !numeric {
            stemmer().stem(&word).into_owned()
        } else {
            word
        };
        if word.is_empty() || (!numeric && word.len() < config.min_token_len) {
            continue;
        }
        tokens.push(word);
    }
    TokenStream { tokens }
}
