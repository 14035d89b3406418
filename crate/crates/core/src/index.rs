//! Sentence-level inverted index with AND queries ranked by TF-IDF.
//!
//! Score of a sentence for a query is the sum, over distinct query terms, of
//! `tf * ln(1 + N / df)` where `tf` is the raw count of the term in the
//! sentence, `N` the number of indexed sentences and `df` the number of
//! sentences containing the term. Ties are broken by video id, then sentence
//! ordinal, then sentence id.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentKind {
    Transcript,
    Comment,
}

/// A term occurrence: the normalized term and its byte span in the sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermOccurrence {
    pub term: String,
    pub start: u32,
    pub end: u32,
}

/// Everything the index needs to know about one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedSentence {
    pub sentence_id: String,
    pub kind: ParentKind,
    pub video_id: String,
    pub channel_id: String,
    pub ordinal: u32,
    /// Effective class labels used by the `class` filter.
    pub labels: Vec<String>,
    /// Content tokens in order.
    pub terms: Vec<TermOccurrence>,
}

impl IndexedSentence {
    /// Tokenizes `text` and keeps the content tokens as index terms.
    pub fn from_text(
        sentence_id: impl Into<String>,
        kind: ParentKind,
        video_id: impl Into<String>,
        channel_id: impl Into<String>,
        ordinal: u32,
        text: &str,
    ) -> Self {
        Self {
            sentence_id: sentence_id.into(),
            kind,
            video_id: video_id.into(),
            channel_id: channel_id.into(),
            ordinal,
            labels: Vec::new(),
            terms: index_terms(text),
        }
    }
}

/// The indexable terms of a text: lowercased words, numbers and emoji.
pub fn index_terms(text: &str) -> Vec<TermOccurrence> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.is_content())
        .map(|t| TermOccurrence { term: t.text, start: t.start as u32, end: t.end as u32 })
        .collect()
}

/// Normalizes a free-text query into distinct, sorted search terms.
pub fn query_terms(query: &str) -> Vec<String> {
    let mut terms: Vec<String> = index_terms(query).into_iter().map(|t| t.term).collect();
    terms.sort();
    terms.dedup();
    terms
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub kind: ParentKind,
    pub video_id: String,
    pub channel_id: String,
    pub ordinal: u32,
    pub labels: Vec<String>,
    pub offsets: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchFilters {
    pub channel: Option<String>,
    pub kind: Option<ParentKind>,
    pub class: Option<String>,
}

impl SearchFilters {
    pub fn accepts(&self, channel_id: &str, kind: ParentKind, labels: &[String]) -> bool {
        self.channel.as_deref().is_none_or(|c| c == channel_id)
            && self.kind.is_none_or(|k| k == kind)
            && self.class.as_deref().is_none_or(|c| labels.iter().any(|l| l == c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTerm {
    pub term: String,
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub sentence_id: String,
    pub kind: ParentKind,
    pub video_id: String,
    pub ordinal: u32,
    pub score: f64,
    pub matches: Vec<MatchedTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("query has no searchable terms")]
    EmptyQuery,
}

/// Inverted index: term -> (sentence id -> token positions).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvertedIndex {
    postings: BTreeMap<String, BTreeMap<String, Vec<u32>>>,
    docs: BTreeMap<String, DocMeta>,
}

impl InvertedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build<I: IntoIterator<Item = IndexedSentence>>(sentences: I) -> Self {
        let mut index = Self::new();
        index.add_sentences(sentences);
        index
    }

    /// Adds sentences. A sentence id that is already present is replaced.
    pub fn add_sentences<I: IntoIterator<Item = IndexedSentence>>(&mut self, sentences: I) {
        for s in sentences {
            self.remove(&s.sentence_id);
            for (pos, occ) in s.terms.iter().enumerate() {
                self.postings
                    .entry(occ.term.clone())
                    .or_default()
                    .entry(s.sentence_id.clone())
                    .or_default()
                    .push(pos as u32);
            }
            let meta = DocMeta {
                kind: s.kind,
                video_id: s.video_id,
                channel_id: s.channel_id,
                ordinal: s.ordinal,
                labels: s.labels,
                offsets: s.terms.iter().map(|o| (o.start, o.end)).collect(),
            };
            self.docs.insert(s.sentence_id, meta);
        }
    }

    fn remove(&mut self, sentence_id: &str) {
        if self.docs.remove(sentence_id).is_none() {
            return;
        }
        self.postings.retain(|_, docs| {
            docs.remove(sentence_id);
            !docs.is_empty()
        });
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    /// Number of sentences containing `term`.
    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, BTreeMap::len)
    }

    /// Postings of `term`, sorted by sentence id.
    pub fn postings(&self, term: &str) -> impl Iterator<Item = (&str, &[u32])> {
        self.postings.get(term).into_iter().flat_map(|m| m.iter().map(|(k, v)| (k.as_str(), v.as_slice())))
    }

    pub fn doc(&self, sentence_id: &str) -> Option<&DocMeta> {
        self.docs.get(sentence_id)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.document_frequency(term);
        if df == 0 {
            return 0.0;
        }
        math::ln(1.0 + self.doc_count() as f64 / df as f64)
    }

    /// AND search. `terms` are normalized index terms (see [`query_terms`]).
    pub fn search(&self, terms: &[String], filters: &SearchFilters) -> Result<Vec<SearchHit>, SearchError> {
        let mut terms: Vec<&str> = terms.iter().map(String::as_str).filter(|t| !t.is_empty()).collect();
        terms.sort_unstable();
        terms.dedup();
        if terms.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let mut lists = Vec::with_capacity(terms.len());
        for t in &terms {
            match self.postings.get(*t) {
                Some(list) => lists.push(list),
                None => return Ok(Vec::new()),
            }
        }
        let idfs: Vec<f64> = terms.iter().map(|t| self.idf(t)).collect();
        let shortest = lists.iter().min_by_key(|l| l.len()).expect("non-empty");

        let mut hits = Vec::new();
        for doc_id in shortest.keys() {
            if !lists.iter().all(|l| l.contains_key(doc_id)) {
                continue;
            }
            let meta = &self.docs[doc_id];
            if !filters.accepts(&meta.channel_id, meta.kind, &meta.labels) {
                continue;
            }
            let mut score = 0.0;
            let mut matches = Vec::new();
            for ((term, list), idf) in terms.iter().zip(&lists).zip(&idfs) {
                let positions = &list[doc_id];
                score += positions.len() as f64 * idf;
                for &p in positions {
                    let (start, end) = meta.offsets[p as usize];
                    matches.push(MatchedTerm { term: (*term).into(), start, end });
                }
            }
            matches.sort_by_key(|m| m.start);
            hits.push(SearchHit {
                sentence_id: doc_id.clone(),
                kind: meta.kind,
                video_id: meta.video_id.clone(),
                ordinal: meta.ordinal,
                score,
                matches,
            });
        }
        hits.sort_by(rank_order);
        Ok(hits)
    }
}

/// Ranking order: score descending, then video id, ordinal and sentence id ascending.
pub fn rank_order(a: &SearchHit, b: &SearchHit) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.video_id.cmp(&b.video_id))
        .then_with(|| a.ordinal.cmp(&b.ordinal))
        .then_with(|| a.sentence_id.cmp(&b.sentence_id))
}
