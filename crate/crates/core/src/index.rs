//! Keyword table and baseline (history-free) query matching.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text::{self, Keyword, StopwordList, DEFAULT_KEYWORD_COUNT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexError {
    DuplicateDocument(String),
    InvalidDocument(&'static str),
    EmptyQuery,
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::DuplicateDocument(id) => write!(f, "document {id:?} is already ingested"),
            IndexError::InvalidDocument(why) => write!(f, "invalid document: {why}"),
            IndexError::EmptyQuery => f.write_str("query has no searchable terms"),
        }
    }
}

impl core::error::Error for IndexError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub uri: String,
    pub title: String,
    pub body: String,
}

/// One row of the keyword table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub term: String,
    pub frequency: usize,
    pub doc_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub doc_id: String,
    pub uri: String,
    pub title: String,
    pub match_score: usize,
    pub baseline_rank: usize,
}

/// Documents and their top-k keywords.
///
/// Only the stored keywords are matchable: a term that occurs in a body but
/// falls outside that document's top-k never matches it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusIndex {
    keyword_count: usize,
    docs: BTreeMap<String, Document>,
    keywords: BTreeMap<String, Vec<Keyword>>,
    postings: BTreeMap<String, BTreeMap<String, usize>>,
}

impl Default for CorpusIndex {
    fn default() -> Self {
        Self::new(DEFAULT_KEYWORD_COUNT)
    }
}

impl CorpusIndex {
    /// `keyword_count` is clamped to at least 1.
    pub fn new(keyword_count: usize) -> Self {
        Self {
            keyword_count: keyword_count.max(1),
            docs: BTreeMap::new(),
            keywords: BTreeMap::new(),
            postings: BTreeMap::new(),
        }
    }

    pub fn keyword_count(&self) -> usize {
        self.keyword_count
    }

    /// Extracts and stores the document's keywords. Returns the stored rows.
    pub fn ingest(&mut self, doc: Document, stopwords: &StopwordList) -> Result<&[Keyword], IndexError> {
        if doc.doc_id.is_empty() {
            return Err(IndexError::InvalidDocument("empty doc_id"));
        }
        if doc.uri.is_empty() {
            return Err(IndexError::InvalidDocument("empty uri"));
        }
        if self.docs.contains_key(&doc.doc_id) {
            return Err(IndexError::DuplicateDocument(doc.doc_id));
        }
        let keywords = text::extract_keywords(&doc.body, stopwords, self.keyword_count);
        for kw in &keywords {
            self.postings
                .entry(kw.term.clone())
                .or_default()
                .insert(doc.doc_id.clone(), kw.frequency);
        }
        let id = doc.doc_id.clone();
        self.docs.insert(id.clone(), doc);
        Ok(self.keywords.entry(id).or_insert(keywords))
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.docs.get(doc_id)
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.docs.contains_key(doc_id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn keywords_of(&self, doc_id: &str) -> Option<&[Keyword]> {
        self.keywords.get(doc_id).map(Vec::as_slice)
    }

    /// All keyword table rows, by doc_id then keyword order.
    pub fn rows(&self) -> impl Iterator<Item = KeywordEntry> + '_ {
        self.keywords.iter().flat_map(|(doc_id, kws)| {
            kws.iter().map(move |kw| KeywordEntry {
                term: kw.term.clone(),
                frequency: kw.frequency,
                doc_id: doc_id.clone(),
            })
        })
    }

    /// Every document with at least one matching term, scored by the sum of
    /// the stored frequencies of the query terms (duplicates count again),
    /// ordered by score descending then doc_id ascending.
    pub fn match_query<S: AsRef<str>>(&self, terms: &[S]) -> Result<Vec<BaselineResult>, IndexError> {
        if terms.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        let mut scores: BTreeMap<&str, usize> = BTreeMap::new();
        for term in terms {
            if let Some(posting) = self.postings.get(term.as_ref()) {
                for (doc_id, freq) in posting {
                    *scores.entry(doc_id.as_str()).or_default() += freq;
                }
            }
        }
        let mut scored: Vec<(&str, usize)> = scores.into_iter().collect();
        // doc_id ascending from the map; stable sort keeps it for ties
        scored.sort_by_key(|s| core::cmp::Reverse(s.1));
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, match_score))| {
                let doc = &self.docs[doc_id];
                BaselineResult {
                    doc_id: doc_id.to_string(),
                    uri: doc.uri.clone(),
                    title: doc.title.clone(),
                    match_score,
                    baseline_rank: i + 1,
                }
            })
            .collect())
    }
}

/// Lowercased query words with stopwords removed. Order and duplicates kept.
pub fn tokenize_query(query: &str, stopwords: &StopwordList) -> Vec<String> {
    text::words(query).filter(|w| !stopwords.contains(w)).collect()
}

/// Canonical form of a query used to key search history: the tokenized
/// terms joined by single spaces.
pub fn normalize_query(query: &str, stopwords: &StopwordList) -> String {
    tokenize_query(query, stopwords).join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn doc(id: &str, body: &str) -> Document {
        Document {
            doc_id: id.into(),
            uri: alloc::format!("https://example.org/{id}"),
            title: id.to_uppercase(),
            body: body.into(),
        }
    }

    fn scores(results: &[BaselineResult]) -> Vec<(&str, usize)> {
        results.iter().map(|r| (r.doc_id.as_str(), r.match_score)).collect()
    }

    fn two_doc_index() -> CorpusIndex {
        let stop = StopwordList::default();
        let mut idx = CorpusIndex::default();
        idx.ingest(doc("d1", "card card card card card game game"), &stop).unwrap();
        idx.ingest(doc("d2", "card card card atm atm atm atm"), &stop).unwrap();
        idx
    }

    #[test]
    fn ingest_stores_keyword_counts() {
        let mut idx = CorpusIndex::default();
        let rows = idx.ingest(doc("d", "card card atm"), &StopwordList::default()).unwrap();
        assert_eq!(
            rows,
            &[
                Keyword { term: "card".into(), frequency: 2 },
                Keyword { term: "atm".into(), frequency: 1 }
            ]
        );
        let table: Vec<KeywordEntry> = idx.rows().collect();
        assert_eq!(table[0], KeywordEntry { term: "card".into(), frequency: 2, doc_id: "d".into() });
    }

    #[test]
    fn all_stopword_document_is_still_ingested() {
        let mut idx = CorpusIndex::default();
        assert!(idx.ingest(doc("d", "is the a of"), &StopwordList::default()).unwrap().is_empty());
        assert!(idx.contains("d"));
        assert_eq!(idx.rows().count(), 0);
    }

    #[test]
    fn duplicate_ingest_conflicts() {
        let mut idx = CorpusIndex::default();
        idx.ingest(doc("d", "x"), &StopwordList::default()).unwrap();
        assert_eq!(
            idx.ingest(doc("d", "y"), &StopwordList::default()),
            Err(IndexError::DuplicateDocument("d".into()))
        );
    }

    #[test]
    fn empty_uri_rejected() {
        let mut idx = CorpusIndex::default();
        let mut d = doc("d", "x");
        d.uri.clear();
        assert!(matches!(idx.ingest(d, &StopwordList::default()), Err(IndexError::InvalidDocument(_))));
    }

    #[test]
    fn query_tokenization() {
        let stop = StopwordList::default();
        assert_eq!(tokenize_query("The Card games", &stop), vec!["card", "games"]);
        assert!(tokenize_query("is the", &stop).is_empty());
        assert_eq!(tokenize_query("card card", &stop), vec!["card", "card"]);
        assert_eq!(normalize_query("  The   CARD,games ", &stop), "card games");
    }

    #[test]
    fn match_examples() {
        let idx = two_doc_index();
        assert_eq!(scores(&idx.match_query(&["card"]).unwrap()), vec![("d1", 5), ("d2", 3)]);
        assert_eq!(scores(&idx.match_query(&["card", "atm"]).unwrap()), vec![("d2", 7), ("d1", 5)]);
        assert!(idx.match_query(&["zzz"]).unwrap().is_empty());
        assert_eq!(idx.match_query::<&str>(&[]), Err(IndexError::EmptyQuery));
    }

    #[test]
    fn ties_broken_by_doc_id_and_ranks_consecutive() {
        let stop = StopwordList::default();
        let mut idx = CorpusIndex::default();
        for id in ["c", "a", "b"] {
            idx.ingest(doc(id, "card"), &stop).unwrap();
        }
        let res = idx.match_query(&["card"]).unwrap();
        assert_eq!(res.iter().map(|r| r.doc_id.as_str()).collect::<Vec<_>>(), vec!["a", "b", "c"]);
        assert_eq!(res.iter().map(|r| r.baseline_rank).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn terms_outside_top_k_do_not_match() {
        let mut idx = CorpusIndex::new(2);
        idx.ingest(doc("d", "aa aa aa bb bb cc"), &StopwordList::default()).unwrap();
        assert!(idx.match_query(&["cc"]).unwrap().is_empty());
        assert_eq!(idx.match_query(&["bb"]).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn match_is_complete_and_sound(
            bodies in proptest::collection::vec("[a-f ]{0,40}", 1..6),
            query in proptest::collection::vec("[a-f]{1,2}", 1..4),
        ) {
            let stop = StopwordList::custom(["a"]);
            let mut idx = CorpusIndex::new(3);
            for (i, body) in bodies.iter().enumerate() {
                idx.ingest(doc(&alloc::format!("d{i}"), body), &stop).unwrap();
            }
            let results = idx.match_query(&query).unwrap();
            for d in idx.documents() {
                let kws = idx.keywords_of(&d.doc_id).unwrap();
                let expected: usize = query
                    .iter()
                    .map(|t| kws.iter().find(|k| &k.term == t).map_or(0, |k| k.frequency))
                    .sum();
                let got = results.iter().find(|r| r.doc_id == d.doc_id);
                match got {
                    Some(r) => prop_assert_eq!(r.match_score, expected),
                    None => prop_assert_eq!(expected, 0),
                }
            }
            for (i, r) in results.iter().enumerate() {
                prop_assert!(r.match_score >= 1);
                prop_assert_eq!(r.baseline_rank, i + 1);
            }
            prop_assert_eq!(idx.match_query(&query).unwrap(), results);
        }
    }
}
