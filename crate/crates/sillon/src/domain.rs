//! Collected, derived and annotated entities as they are stored and exported.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sillon_core::index::ParentKind;
use sillon_core::lexicon::KeywordHit;
use sillon_core::taxonomy::{TargetKind, Task};
use sillon_core::text::TimedSegment;

pub type Timestamp = DateTime<Utc>;

/// Fields this version does not know about, kept so they survive a round trip.
pub type Extra = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unparseable timestamp `{0}`")]
pub struct TimestampError(pub String);

/// Parses RFC 3339, `YYYY-MM-DD HH:MM:SS` (taken as UTC), a bare date, or
/// Unix seconds. The result is in UTC and truncated to whole seconds.
pub fn parse_timestamp(s: &str) -> Result<Timestamp, TimestampError> {
    let s = s.trim();
    let err = || TimestampError(s.to_string());
    let parsed = if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        t.with_timezone(&Utc)
    } else if let Ok(t) = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        t.and_utc()
    } else if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        d.and_hms_opt(0, 0, 0).ok_or_else(err)?.and_utc()
    } else if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
        Utc.timestamp_opt(s.parse().map_err(|_| err())?, 0).single().ok_or_else(err)?
    } else {
        return Err(err());
    };
    Utc.timestamp_opt(parsed.timestamp(), 0).single().ok_or_else(err)
}

pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn now() -> Timestamp {
    Utc.timestamp_opt(Utc::now().timestamp(), 0).single().expect("current time is representable")
}

pub mod ts {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let raw = String::deserialize(d)?;
        parse_timestamp(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub channel_id: String,
    pub title: String,
    pub url: String,
    #[serde(with = "ts")]
    pub added_at: Timestamp,
    pub active: bool,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptStatus {
    Pending,
    Fetched,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub channel_id: String,
    pub title: String,
    #[serde(with = "ts")]
    pub published_at: Timestamp,
    #[serde(with = "ts")]
    pub collected_at: Timestamp,
    pub url: String,
    pub duration_s: f64,
    pub transcript_status: TranscriptStatus,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub video_id: String,
    pub segments: Vec<TimedSegment>,
    #[serde(default)]
    pub restored_text: String,
    /// Sentence ids in ordinal order; empty until processed.
    #[serde(default)]
    pub sentences: Vec<String>,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub comment_id: String,
    pub video_id: String,
    pub author_key: String,
    #[serde(with = "ts")]
    pub published_at: Timestamp,
    #[serde(with = "ts")]
    pub collected_at: Timestamp,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<String>,
    #[serde(default)]
    pub normalized_text: String,
    #[serde(default)]
    pub sentences: Vec<String>,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParentRef {
    pub kind: ParentKind,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub parent: ParentRef,
    pub ordinal: u32,
    pub text: String,
    /// Half-open byte offsets into the parent's restored or normalized text.
    pub span: (usize, usize),
    #[serde(default)]
    pub keyword_hits: Vec<KeywordHit>,
    #[serde(flatten)]
    pub extra: Extra,
}

pub fn sentence_id(parent: &ParentRef, ordinal: u32) -> String {
    let tag = match parent.kind {
        ParentKind::Transcript => 't',
        ParentKind::Comment => 'c',
    };
    format!("{tag}:{}:{ordinal}", parent.id)
}

/// What an annotation is attached to. Written `kind:id` in query strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TargetRef {
    pub kind: TargetKind,
    pub id: String,
}

impl fmt::Display for TargetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            TargetKind::Comment => "comment",
            TargetKind::Sentence => "sentence",
            TargetKind::Transcript => "transcript",
        };
        write!(f, "{kind}:{}", self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad target `{0}` (expected comment:<id>, sentence:<id> or transcript:<id>)")]
pub struct TargetParseError(pub String);

impl FromStr for TargetRef {
    type Err = TargetParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TargetParseError(s.to_string());
        let (kind, id) = s.split_once(':').ok_or_else(err)?;
        let kind = match kind {
            "comment" => TargetKind::Comment,
            "sentence" => TargetKind::Sentence,
            "transcript" => TargetKind::Transcript,
            _ => return Err(err()),
        };
        if id.is_empty() {
            return Err(err());
        }
        Ok(TargetRef { kind, id: id.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub target: TargetRef,
    pub annotator_id: String,
    pub task: Task,
    pub label: String,
    #[serde(with = "ts")]
    pub created_at: Timestamp,
    #[serde(flatten)]
    pub extra: Extra,
}

impl Annotation {
    pub fn key(&self) -> String {
        annotation_key(&self.target, &self.annotator_id, self.task)
    }
}

pub fn annotation_key(target: &TargetRef, annotator_id: &str, task: Task) -> String {
    format!("{target}|{annotator_id}|{}", task.as_str())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub channels: usize,
    pub active_channels: usize,
    pub videos: usize,
    pub transcripts: usize,
    pub transcripts_unavailable: usize,
    pub comments: usize,
    pub sentences: usize,
    pub annotations: usize,
    /// task -> class -> annotation count, every class listed.
    pub labels: BTreeMap<String, BTreeMap<String, usize>>,
}

/// Validates an absolute http(s) URL with a host.
pub fn is_absolute_url(s: &str) -> bool {
    url::Url::parse(s).is_ok_and(|u| matches!(u.scheme(), "http" | "https") && u.host_str().is_some_and(|h| !h.is_empty()))
}
