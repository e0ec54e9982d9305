//! Document statistics and keyword extraction.
//!
//! Tokenization rules used throughout the crate:
//!
//! - a word is a maximal run of alphanumeric characters, lowercased;
//! - a sentence is a span containing at least one word and ending at a
//!   run of `.`, `!` or `?` (or at end of text);
//! - paragraphs are separated by one or more blank lines;
//! - a printable character has a visible glyph, or is a plain space.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Default number of keywords kept per document.
pub const DEFAULT_KEYWORD_COUNT: usize = 10;

/// Words that are always excluded from keyword lists.
pub const MINIMUM_STOPWORDS: &[&str] = &[
    "is", "was", "are", "the", "as", "for", "not", "a", "an", "of", "to", "in", "and", "or",
];

const EXTENDED_STOPWORDS: &[&str] = &[
    "am", "be", "been", "being", "were", "do", "does", "did", "has", "have", "had", "having",
    "it", "its", "this", "that", "these", "those", "i", "me", "my", "we", "our", "you", "your",
    "he", "him", "his", "she", "her", "they", "them", "their", "what", "which", "who", "whom",
    "at", "by", "with", "from", "on", "off", "into", "onto", "about", "than", "then", "so",
    "but", "if", "no", "nor", "too", "very", "can", "will", "would", "should", "could", "may",
    "might", "must", "shall", "there", "here", "when", "where", "why", "how", "all", "any",
    "each", "both", "some", "such", "only", "own", "same", "just", "also", "up", "down", "out",
    "over", "under", "again", "further", "once", "while", "because", "until", "between",
    "through", "during", "before", "after", "above", "below",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextError {
    /// Flesch index requested for a text with no words or no sentences.
    InvalidInput,
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextError::InvalidInput => f.write_str("flesch index needs at least one word and one sentence"),
        }
    }
}

impl core::error::Error for TextError {}

/// Statistics for one document, in the order they are reported.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DocumentStats {
    pub paragraphs: usize,
    pub words: usize,
    pub sentences: usize,
    /// Characters with a visible glyph, plus plain spaces.
    pub printable_chars: usize,
    pub spaces: usize,
    pub tabs: usize,
    pub carriage_returns: usize,
    pub line_feeds: usize,
    /// Every character not counted as printable, tab, CR or LF.
    pub nonprintable_others: usize,
    pub words_per_sentence: f64,
    pub syllables_per_word: f64,
    pub flesch: f64,
    /// `(term, count)` sorted by count descending, then term ascending.
    pub word_frequencies: Vec<(String, usize)>,
}

/// A document keyword and how often it occurs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyword {
    pub term: String,
    pub frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordList {
    terms: BTreeSet<String>,
}

impl StopwordList {
    /// Only the mandatory minimum set.
    pub fn minimal() -> Self {
        Self::from_terms(MINIMUM_STOPWORDS.iter().copied())
    }

    /// Builds a list from arbitrary terms. The terms are lowercased and the
    /// mandatory minimum set is always added.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = Self::custom(terms);
        list.terms.extend(MINIMUM_STOPWORDS.iter().map(|s| String::from(*s)));
        list
    }

    /// Exactly the given terms, lowercased. Used where a caller needs a
    /// narrower list than the default floor (e.g. single-word lists in tests).
    pub fn custom<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms = terms
            .into_iter()
            .map(|t| t.as_ref().trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        Self { terms }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::from_terms(EXTENDED_STOPWORDS.iter().copied())
    }
}

/// Splits text into lowercase alphanumeric words.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_printable(c: char) -> bool {
    c == ' ' || !(c.is_whitespace() || c.is_control())
}

fn count_paragraphs(text: &str) -> usize {
    let mut paragraphs = 0;
    let mut in_paragraph = false;
    for line in text.split('\n') {
        let blank = line.trim().is_empty();
        if !blank && !in_paragraph {
            paragraphs += 1;
        }
        in_paragraph = !blank;
    }
    paragraphs
}

fn count_sentences(text: &str) -> usize {
    let mut sentences = 0;
    let mut open = false;
    for c in text.chars() {
        if c.is_alphanumeric() {
            open = true;
        } else if is_sentence_end(c) && open {
            sentences += 1;
            open = false;
        }
    }
    if open {
        sentences += 1;
    }
    sentences
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Approximate syllable count of a lowercase word: the number of vowel
/// runs (`y` counts as a vowel), minus one when the last run is a lone `e`
/// and there is more than one run. Never less than 1.
///
/// A lone final `e` run is discounted even when consonants follow it
/// (`there`, `theres`), so appending consonants never raises the count.
pub fn count_syllables(word: &str) -> usize {
    let mut runs = 0usize;
    let mut last_run_len = 0usize;
    let mut last_run_is_e = false;
    let mut in_run = false;
    for c in word.chars().flat_map(char::to_lowercase) {
        if is_vowel(c) {
            if in_run {
                last_run_len += 1;
                last_run_is_e = false;
            } else {
                runs += 1;
                last_run_len = 1;
                last_run_is_e = c == 'e';
                in_run = true;
            }
        } else {
            in_run = false;
        }
    }
    if runs >= 2 && last_run_len == 1 && last_run_is_e {
        runs -= 1;
    }
    runs.max(1)
}

/// Flesch reading ease: `206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words)`.
pub fn flesch_index(words: usize, sentences: usize, syllables: usize) -> Result<f64, TextError> {
    if words == 0 || sentences == 0 {
        return Err(TextError::InvalidInput);
    }
    let words = words as f64;
    Ok(206.835 - 1.015 * (words / sentences as f64) - 84.6 * (syllables as f64 / words))
}

pub fn analyze_text(text: &str) -> DocumentStats {
    let mut stats = DocumentStats::default();

    let mut total_chars = 0usize;
    for c in text.chars() {
        total_chars += 1;
        match c {
            '\t' => stats.tabs += 1,
            '\r' => stats.carriage_returns += 1,
            '\n' => stats.line_feeds += 1,
            ' ' => {
                stats.spaces += 1;
                stats.printable_chars += 1;
            }
            c if is_printable(c) => stats.printable_chars += 1,
            _ => {}
        }
    }
    stats.nonprintable_others =
        total_chars - stats.printable_chars - stats.tabs - stats.carriage_returns - stats.line_feeds;

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut syllables = 0usize;
    for word in words(text) {
        syllables += count_syllables(&word);
        stats.words += 1;
        *counts.entry(word).or_default() += 1;
    }
    stats.word_frequencies = sort_frequencies(counts);

    stats.sentences = count_sentences(text);
    stats.paragraphs = count_paragraphs(text);

    if stats.words > 0 {
        stats.syllables_per_word = syllables as f64 / stats.words as f64;
    }
    if stats.sentences > 0 {
        stats.words_per_sentence = stats.words as f64 / stats.sentences as f64;
    }
    stats.flesch = flesch_index(stats.words, stats.sentences, syllables).unwrap_or(0.0);
    stats
}

fn sort_frequencies(counts: BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut list: Vec<(String, usize)> = counts.into_iter().collect();
    // BTreeMap already yields terms ascending; a stable sort keeps that as the tie-break.
    list.sort_by_key(|e| core::cmp::Reverse(e.1));
    list
}

/// The `k` most frequent non-stopword terms of `text`, most frequent first,
/// ties broken by term.
pub fn extract_keywords(text: &str, stopwords: &StopwordList, k: usize) -> Vec<Keyword> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for word in words(text).filter(|w| !stopwords.contains(w)) {
        *counts.entry(word).or_default() += 1;
    }
    sort_frequencies(counts)
        .into_iter()
        .take(k)
        .map(|(term, frequency)| Keyword { term, frequency })
        .collect()
}
