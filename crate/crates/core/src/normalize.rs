//! Text normalization and tokenization.
//!
//! Dictionary labels and input text go through the same pipeline: canonical
//! decomposition, lowercasing, removal of combining marks, and replacement of
//! every non letter/digit character by a space. Tokens are the remaining
//! whitespace-separated runs minus stopwords.

use std::collections::BTreeSet;
use std::fs;
use std::ops::Range;
use std::path::Path;

use unicode_normalization::char::{decompose_canonical, is_combining_mark};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Stopword configuration shared by dictionary construction and annotation.
///
/// Token characters are fixed: Unicode letters and digits after
/// normalization. Everything else separates tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationConfig {
    stopwords: BTreeSet<String>,
}

impl Default for NormalizationConfig {
    /// The shipped list of 25 French function words.
    fn default() -> Self {
        Self::from_stopword_text(DEFAULT_STOPWORDS)
    }
}

impl NormalizationConfig {
    /// A configuration that removes nothing.
    pub fn without_stopwords() -> Self {
        Self {
            stopwords: BTreeSet::new(),
        }
    }

    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut stopwords = BTreeSet::new();
        for word in words {
            stopwords.extend(
                normalize_text(word.as_ref())
                    .split_whitespace()
                    .map(str::to_owned),
            );
        }
        Self { stopwords }
    }

    /// Parses a stopword list: one token per line, `#` comments ignored.
    /// Entries are normalized, so `"Dès"` is stored as `"des"`.
    pub fn from_stopword_text(text: &str) -> Self {
        Self::with_stopwords(
            text.lines()
                .map(str::trim)
                .filter(|line| !line.is_empty() && !line.starts_with('#')),
        )
    }

    pub fn from_stopword_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_stopword_text(&text))
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        !token.is_empty() && self.stopwords.contains(token)
    }
}

/// Output of [`tokenize`]: normalized tokens with byte ranges into the
/// original string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    pub original: String,
    pub tokens: Vec<String>,
    pub offsets: Vec<Range<usize>>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Byte span in the original text covering tokens `range.start..range.end`.
    pub fn span(&self, range: Range<usize>) -> Range<usize> {
        self.offsets[range.start].start..self.offsets[range.end - 1].end
    }
}

/// Normalizes a single character, pushing zero or more output characters.
fn normalize_char(c: char, out: &mut String) {
    decompose_canonical(c, |d| {
        for lower in d.to_lowercase() {
            decompose_canonical(lower, |e| {
                if is_combining_mark(e) {
                    return;
                }
                out.push(if e.is_alphanumeric() { e } else { ' ' });
            });
        }
    });
}

/// Lowercases, strips diacritics and replaces punctuation with spaces.
///
/// ```
/// assert_eq!(
///     termtrie::normalize_text("Insuffisance,cardiaque. aiguë"),
///     "insuffisance cardiaque  aigue"
/// );
/// ```
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        normalize_char(c, &mut out);
    }
    out
}

pub fn is_stopword(token: &str, cfg: &NormalizationConfig) -> bool {
    cfg.is_stopword(token)
}

pub fn tokenize(raw: &str, cfg: &NormalizationConfig) -> TokenizedText {
    let mut tokens = Vec::new();
    let mut offsets = Vec::new();
    let mut current = String::new();
    let mut span: Option<Range<usize>> = None;
    let mut piece = String::new();

    let mut flush = |current: &mut String, span: &mut Option<Range<usize>>| {
        if let Some(range) = span.take() {
            if !cfg.is_stopword(current) {
                tokens.push(std::mem::take(current));
                offsets.push(range);
            }
            current.clear();
        }
    };

    for (at, c) in raw.char_indices() {
        let next = at + c.len_utf8();
        piece.clear();
        normalize_char(c, &mut piece);
        if piece.is_empty() {
            // A dropped combining mark stays attached to the open token.
            if let Some(range) = span.as_mut() {
                range.end = next;
            }
            continue;
        }
        for e in piece.chars() {
            if e == ' ' {
                flush(&mut current, &mut span);
            } else {
                current.push(e);
                match span.as_mut() {
                    Some(range) => range.end = next,
                    None => span = Some(at..next),
                }
            }
        }
    }
    flush(&mut current, &mut span);

    TokenizedText {
        original: raw.to_owned(),
        tokens,
        offsets,
    }
}
