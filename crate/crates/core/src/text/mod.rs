//! Transcript restoration, sentence segmentation, comment normalization and
//! tokenization.
//!
//! All offsets handed out by this module are UTF-8 byte offsets into the
//! string that was passed in, so `&text[span.start..span.end]` is always
//! valid.

mod emoji;
mod normalize;
mod restore;
mod segment;
mod tokenize;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

pub use emoji::{emoji_cluster_len, is_emoji_base};
pub use normalize::normalize_comment;
pub use restore::restore;
pub use segment::{reconstructs, segment_sentences, SentenceSpan};
pub use tokenize::{tokenize, Token, TokenKind};

/// One caption fragment as delivered by the platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedSegment {
    pub start_s: f64,
    pub duration_s: f64,
    pub text: String,
}

impl TimedSegment {
    pub fn new(start_s: f64, duration_s: f64, text: impl Into<String>) -> Self {
        Self { start_s, duration_s, text: text.into() }
    }

    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TextError {
    #[error("segments are not sorted by start time (segment {index} starts before its predecessor)")]
    UnsortedSegments { index: usize },
    #[error("segment {index} has a negative or non-finite timing")]
    InvalidTiming { index: usize },
    #[error("pause threshold must be a positive number of seconds")]
    InvalidPauseThreshold,
}

/// Set of tokens ending in '.' that do not terminate a sentence ("M.", "etc.").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abbreviations(BTreeSet<String>);

const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

impl Abbreviations {
    pub fn empty() -> Self {
        Self(BTreeSet::new())
    }

    /// Parses the list format: one token per line, `#` starts a comment line.
    pub fn parse(src: &str) -> Self {
        Self(
            src.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(ToString::to_string)
                .collect(),
        )
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn insert(&mut self, token: impl Into<String>) {
        self.0.insert(token.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Abbreviations {
    fn default() -> Self {
        Self::parse(DEFAULT_ABBREVIATIONS)
    }
}

/// Settings for punctuation/case restoration and segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestorationConfig {
    /// A silence at least this long between two caption fragments ends a sentence.
    pub pause_threshold_s: f64,
    pub abbreviations: Abbreviations,
    pub enabled: bool,
}

impl Default for RestorationConfig {
    fn default() -> Self {
        Self { pause_threshold_s: 1.25, abbreviations: Abbreviations::default(), enabled: true }
    }
}

impl RestorationConfig {
    pub fn validate(&self) -> Result<(), TextError> {
        if self.pause_threshold_s.is_finite() && self.pause_threshold_s > 0.0 {
            Ok(())
        } else {
            Err(TextError::InvalidPauseThreshold)
        }
    }
}

pub(crate) fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}
