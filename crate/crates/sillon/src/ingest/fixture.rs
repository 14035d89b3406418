//! Provider reading a directory of JSON files:
//!
//! ```text
//! <root>/<channel_id>/channel.json
//! <root>/<channel_id>/videos.json
//! <root>/<channel_id>/<video_id>/transcript.json   (absent: no transcript)
//! <root>/<channel_id>/<video_id>/comments.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sillon_core::text::TimedSegment;

use super::{ChannelRef, CommentPage, Provider, ProviderError, RemoteChannel, RemoteComment, RemoteVideo};
use crate::domain::{parse_timestamp, Timestamp};

pub const FIXTURE_PAGE_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureChannel {
    pub channel_id: String,
    pub title: String,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureVideo {
    pub video_id: String,
    pub title: String,
    pub published_at: String,
    pub url: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureComment {
    pub comment_id: String,
    pub author: String,
    pub published_at: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FixtureProvider {
    root: PathBuf,
    page_size: usize,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>, ProviderError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| ProviderError::Permanent(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(ProviderError::Transient(format!("{}: {e}", path.display()))),
    }
}

impl FixtureProvider {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), page_size: FIXTURE_PAGE_SIZE }
    }

    pub fn with_page_size(mut self, page_size: usize) -> Self {
        self.page_size = page_size.max(1);
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Channels present in the fixture directory, by id.
    pub fn channels(&self) -> Result<Vec<FixtureChannel>, ProviderError> {
        let entries = fs::read_dir(&self.root).map_err(|e| ProviderError::Permanent(format!("{}: {e}", self.root.display())))?;
        let mut out = Vec::new();
        for entry in entries.flatten() {
            if let Some(ch) = read_json::<FixtureChannel>(&entry.path().join("channel.json"))? {
                out.push(ch);
            }
        }
        out.sort_by(|a, b| a.channel_id.cmp(&b.channel_id));
        Ok(out)
    }

    fn videos(&self, channel_id: &str) -> Result<Vec<FixtureVideo>, ProviderError> {
        read_json(&self.root.join(channel_id).join("videos.json"))?.ok_or_else(|| ProviderError::NotFound(channel_id.into()))
    }

    // Videos are looked up across channels because the trait is keyed by video id only.
    fn video_dir(&self, video_id: &str) -> Result<PathBuf, ProviderError> {
        for ch in self.channels()? {
            let dir = self.root.join(&ch.channel_id).join(video_id);
            if dir.is_dir() {
                return Ok(dir);
            }
        }
        Err(ProviderError::NotFound(video_id.into()))
    }
}

impl Provider for FixtureProvider {
    fn channel(&self, channel: &ChannelRef) -> Result<RemoteChannel, ProviderError> {
        let found = self.channels()?.into_iter().find(|c| match channel {
            ChannelRef::Id(id) => c.channel_id == *id,
            ChannelRef::Handle(h) => c.handle.as_deref() == Some(h.as_str()),
        });
        let c = found.ok_or_else(|| ProviderError::NotFound(format!("{channel:?}")))?;
        Ok(RemoteChannel { channel_id: c.channel_id, title: c.title, url: c.url })
    }

    fn list_videos(&self, channel_id: &str, since: Option<Timestamp>) -> Result<Vec<RemoteVideo>, ProviderError> {
        let mut out = Vec::new();
        for v in self.videos(channel_id)? {
            if let Some(since) = since {
                // unparseable dates are passed through; ingestion reports them
                if parse_timestamp(&v.published_at).is_ok_and(|t| t < since) {
                    continue;
                }
            }
            out.push(RemoteVideo { video_id: v.video_id, title: v.title, published_at: v.published_at, url: v.url, duration_s: v.duration_s });
        }
        out.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.video_id.cmp(&b.video_id)));
        Ok(out)
    }

    fn get_transcript(&self, video_id: &str) -> Result<Option<Vec<TimedSegment>>, ProviderError> {
        read_json(&self.video_dir(video_id)?.join("transcript.json"))
    }

    fn get_comments(&self, video_id: &str, page: Option<&str>) -> Result<CommentPage, ProviderError> {
        let all: Vec<FixtureComment> = read_json(&self.video_dir(video_id)?.join("comments.json"))?.unwrap_or_default();
        let offset = match page {
            None => 0,
            Some(token) => token
                .strip_prefix('p')
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n <= all.len())
                .ok_or_else(|| ProviderError::Permanent(format!("bad page token `{token}`")))?,
        };
        let end = (offset + self.page_size).min(all.len());
        let comments = all[offset..end]
            .iter()
            .map(|c| RemoteComment {
                comment_id: c.comment_id.clone(),
                author: c.author.clone(),
                published_at: c.published_at.clone(),
                text: c.text.clone(),
                reply_to: c.reply_to.clone(),
            })
            .collect();
        let next_page = (end < all.len()).then(|| format!("p{end}"));
        Ok(CommentPage { comments, next_page })
    }
}
