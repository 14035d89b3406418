//! Collection of channels, videos, transcripts and comments from a provider.

mod fixture;
mod live;
mod ratelimit;
mod sync;

use sha2::{Digest, Sha256};
use sillon_core::text::TimedSegment;

pub use fixture::{FixtureChannel, FixtureComment, FixtureProvider, FixtureVideo, FIXTURE_PAGE_SIZE};
pub use live::{LiveConfig, LiveProvider, API_KEY_ENV};
pub use ratelimit::{retry, RateLimiter, RetryPolicy};
pub use sync::{sync_all, sync_channel, SyncError, SyncIssue, SyncLocks, SyncOptions, SyncReport};

use crate::domain::{now, Channel, Extra, Timestamp};
use crate::store::{Change, Store, StoreError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelRef {
    Id(String),
    Handle(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteChannel {
    pub channel_id: String,
    pub title: String,
    pub url: String,
}

/// A video as the platform describes it. Timestamps are raw strings in
/// whatever format the source uses; ingestion normalizes them.
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteVideo {
    pub video_id: String,
    pub title: String,
    pub published_at: String,
    pub url: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteComment {
    pub comment_id: String,
    pub author: String,
    pub published_at: String,
    pub text: String,
    pub reply_to: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommentPage {
    pub comments: Vec<RemoteComment>,
    pub next_page: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("not found: {0}")]
    NotFound(String),
    /// Worth retrying: timeouts, rate limiting, server errors.
    #[error("temporary failure: {0}")]
    Transient(String),
    #[error("{0}")]
    Permanent(String),
}

impl ProviderError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transient(_))
    }
}

/// Source of platform data.
pub trait Provider: Send + Sync {
    fn channel(&self, channel: &ChannelRef) -> Result<RemoteChannel, ProviderError>;

    /// Videos of a channel published at or after `since` (all when `None`).
    fn list_videos(&self, channel_id: &str, since: Option<Timestamp>) -> Result<Vec<RemoteVideo>, ProviderError>;

    /// Caption fragments, or `None` when the video has no transcript.
    fn get_transcript(&self, video_id: &str) -> Result<Option<Vec<TimedSegment>>, ProviderError>;

    /// One page of comments. `page` is the token returned by the previous call.
    fn get_comments(&self, video_id: &str, page: Option<&str>) -> Result<CommentPage, ProviderError>;
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot resolve a channel from `{0}`")]
    UnresolvableChannel(String),
    #[error("provider: {0}")]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn is_id_like(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Reads a channel id or handle from a channel URL, `@handle`, or bare id.
pub fn parse_channel_ref(input: &str) -> Result<ChannelRef, IngestError> {
    let s = input.trim();
    let err = || IngestError::UnresolvableChannel(input.to_string());
    if let Some(handle) = s.strip_prefix('@') {
        return if is_id_like(handle) { Ok(ChannelRef::Handle(handle.to_string())) } else { Err(err()) };
    }
    if s.contains("://") {
        let url = url::Url::parse(s).map_err(|_| err())?;
        let segments: Vec<&str> = url.path_segments().map(|p| p.filter(|x| !x.is_empty()).collect()).unwrap_or_default();
        return match segments.as_slice() {
            ["channel", id, ..] if is_id_like(id) => Ok(ChannelRef::Id(id.to_string())),
            [first, ..] if first.starts_with('@') && is_id_like(&first[1..]) => Ok(ChannelRef::Handle(first[1..].to_string())),
            ["c" | "user", name, ..] if is_id_like(name) => Ok(ChannelRef::Handle(name.to_string())),
            _ => Err(err()),
        };
    }
    if is_id_like(s) {
        Ok(ChannelRef::Id(s.to_string()))
    } else {
        Err(err())
    }
}

/// Registers (or re-activates) a channel. Registering an already active
/// channel with unchanged metadata leaves the store untouched.
pub fn register_channel(store: &mut Store, provider: &dyn Provider, input: &str) -> Result<(Channel, Change), IngestError> {
    let reference = parse_channel_ref(input)?;
    let remote = provider.channel(&reference).map_err(|e| match e {
        ProviderError::NotFound(_) => IngestError::UnresolvableChannel(input.to_string()),
        other => IngestError::Provider(other),
    })?;
    let channel = match store.channel(&remote.channel_id) {
        Some(old) => Channel { title: remote.title, url: remote.url, active: true, ..old.clone() },
        None => Channel {
            channel_id: remote.channel_id,
            title: remote.title,
            url: remote.url,
            added_at: now(),
            active: true,
            extra: Extra::new(),
        },
    };
    let change = store.upsert_channel(channel.clone())?;
    Ok((channel, change))
}

/// Stable pseudonym for a comment author.
pub fn pseudonymize(salt: &str, author: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update([0]);
    h.update(author.as_bytes());
    format!("anon-{}", &hex::encode(h.finalize())[..16])
}
