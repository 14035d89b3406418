//! Gazetteer tagging of predefined keywords and entities.
//!
//! Terms are tokenized with the same tokenizer as the text they are matched
//! against, so matching is case-insensitive but accent-sensitive, and works
//! on token boundaries only.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::{tokenize, Token};

/// One keyword occurrence inside a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordHit {
    pub category: String,
    /// The term as written in the lexicon.
    pub term: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("line {line}: expected `category<TAB>term`")]
    Malformed { line: usize },
    #[error("empty term in category `{0}`")]
    EmptyTerm(String),
    #[error("empty category name")]
    EmptyCategory,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TrieNode {
    children: BTreeMap<String, usize>,
    terminal: Option<(String, String)>,
}

/// Category name -> set of (possibly multi-word) terms, compiled into a token trie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordLexicon {
    categories: BTreeMap<String, BTreeSet<String>>,
    trie: Vec<TrieNode>,
}

impl Default for KeywordLexicon {
    fn default() -> Self {
        Self { categories: BTreeMap::new(), trie: alloc::vec![TrieNode::default()] }
    }
}

impl KeywordLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_categories<C, T, S>(categories: C) -> Result<Self, LexiconError>
    where
        C: IntoIterator<Item = (S, T)>,
        T: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = Self::new();
        for (cat, terms) in categories {
            let cat = cat.into();
            for term in terms {
                lex.insert(cat.clone(), term.into())?;
            }
        }
        Ok(lex)
    }

    /// Parses `category<TAB>term` lines. Blank lines and `#` comments are skipped.
    pub fn parse(src: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::new();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (cat, term) = line.split_once('\t').ok_or(LexiconError::Malformed { line: i + 1 })?;
            lex.insert(cat.trim().to_string(), term.trim().to_string())?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, category: String, term: String) -> Result<(), LexiconError> {
        if category.is_empty() {
            return Err(LexiconError::EmptyCategory);
        }
        let keys: Vec<String> = tokenize(&term).into_iter().map(|t| t.text).collect();
        if keys.is_empty() {
            return Err(LexiconError::EmptyTerm(category));
        }
        let mut node = 0;
        for key in keys {
            node = match self.trie[node].children.get(&key) {
                Some(&next) => next,
                None => {
                    let next = self.trie.len();
                    self.trie.push(TrieNode::default());
                    self.trie[node].children.insert(key, next);
                    next
                }
            };
        }
        let terminal = &mut self.trie[node].terminal;
        let candidate = (category.clone(), term.clone());
        // same token sequence under several entries: smallest (category, term) wins
        if terminal.as_ref().is_none_or(|t| candidate < *t) {
            *terminal = Some(candidate);
        }
        self.categories.entry(category).or_default().insert(term);
        Ok(())
    }

    pub fn categories(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.categories
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Tags `text`. Offsets in the hits are byte offsets into `text`.
    pub fn tag(&self, text: &str) -> Vec<KeywordHit> {
        self.tag_tokens(&tokenize(text))
    }

    /// Leftmost-longest, non-overlapping matching over a token sequence.
    pub fn tag_tokens(&self, tokens: &[Token]) -> Vec<KeywordHit> {
        let mut hits = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut node = 0;
            let mut best: Option<(usize, &(String, String))> = None;
            for (j, tok) in tokens[i..].iter().enumerate() {
                match self.trie[node].children.get(&tok.text) {
                    Some(&next) => node = next,
                    None => break,
                }
                if let Some(t) = &self.trie[node].terminal {
                    best = Some((i + j, t));
                }
            }
            match best {
                Some((last, (category, term))) => {
                    hits.push(KeywordHit {
                        category: category.clone(),
                        term: term.clone(),
                        start: tokens[i].start,
                        end: tokens[last].end,
                    });
                    i = last + 1;
                }
                None => i += 1,
            }
        }
        hits
    }
}
