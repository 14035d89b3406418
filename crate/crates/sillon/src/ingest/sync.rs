//! Incremental channel synchronisation.
//!
//! A sync lists videos published since the newest stored video (minus an
//! overlap window), and revisits stored videos whose transcript or comments
//! are incomplete. Comment pages are committed one at a time together with
//! the resume token, so an interrupted sync continues where it stopped.

use std::collections::{BTreeSet, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use chrono::Duration;
use serde::Serialize;

use super::{pseudonymize, Provider, ProviderError, RemoteVideo};
use crate::domain::{now, parse_timestamp, Comment, Extra, Timestamp, Transcript, TranscriptStatus, VideoRecord};
use crate::store::{Change, SharedStore, Store, StoreError, VideoSyncState};

const MAX_COMMENT_PAGES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncOptions {
    pub parallelism: usize,
    pub overlap: Duration,
    pub author_salt: String,
}

impl Default for SyncOptions {
    fn default() -> Self {
        Self { parallelism: 4, overlap: Duration::hours(48), author_salt: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyncIssue {
    pub item_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyncReport {
    pub channel_id: String,
    pub new_videos: usize,
    pub new_comments: usize,
    pub transcripts_fetched: usize,
    pub transcripts_unavailable: usize,
    #[serde(with = "crate::domain::ts")]
    pub started_at: Timestamp,
    #[serde(with = "crate::domain::ts")]
    pub finished_at: Timestamp,
    pub errors: Vec<SyncIssue>,
}

impl SyncReport {
    fn new(channel_id: &str) -> Self {
        let t = now();
        Self {
            channel_id: channel_id.to_string(),
            new_videos: 0,
            new_comments: 0,
            transcripts_fetched: 0,
            transcripts_unavailable: 0,
            started_at: t,
            finished_at: t,
            errors: Vec::new(),
        }
    }

    fn issue(&mut self, item_id: &str, reason: impl Into<String>) {
        self.errors.push(SyncIssue { item_id: item_id.to_string(), reason: reason.into() });
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SyncError {
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("channel `{0}` is inactive")]
    InactiveChannel(String),
    #[error("a sync of channel `{0}` is already running")]
    AlreadyRunning(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Channels currently being synchronised.
#[derive(Debug, Default)]
pub struct SyncLocks(Mutex<HashSet<String>>);

pub struct SyncGuard<'a> {
    locks: &'a SyncLocks,
    channel_id: String,
}

impl SyncLocks {
    pub fn try_lock(&self, channel_id: &str) -> Option<SyncGuard<'_>> {
        let mut held = self.0.lock().expect("sync locks");
        held.insert(channel_id.to_string()).then(|| SyncGuard { locks: self, channel_id: channel_id.to_string() })
    }

    pub fn is_running(&self, channel_id: &str) -> bool {
        self.0.lock().expect("sync locks").contains(channel_id)
    }
}

impl Drop for SyncGuard<'_> {
    fn drop(&mut self) {
        self.locks.0.lock().expect("sync locks").remove(&self.channel_id);
    }
}

fn write<T>(store: &SharedStore, f: impl FnOnce(&mut Store) -> Result<T, StoreError>) -> Result<T, StoreError> {
    let mut s = store.write().expect("store lock");
    let out = s.transaction(f)?;
    s.save()?;
    Ok(out)
}

#[derive(Default)]
struct VideoOutcome {
    new_comments: usize,
    transcript: Option<TranscriptStatus>,
    errors: Vec<SyncIssue>,
}

/// Synchronises one channel. Provider failures on individual items are
/// recorded in the report; the sync continues with the other items.
pub fn sync_channel(
    store: &SharedStore,
    provider: &dyn Provider,
    locks: &SyncLocks,
    channel_id: &str,
    options: &SyncOptions,
) -> Result<SyncReport, SyncError> {
    let _guard = locks.try_lock(channel_id).ok_or_else(|| SyncError::AlreadyRunning(channel_id.to_string()))?;
    let mut report = SyncReport::new(channel_id);

    let (since, stored): (Option<Timestamp>, BTreeSet<String>) = {
        let s = store.read().expect("store lock");
        let channel = s.channel(channel_id).ok_or_else(|| SyncError::UnknownChannel(channel_id.to_string()))?;
        if !channel.active {
            return Err(SyncError::InactiveChannel(channel_id.to_string()));
        }
        let since = s.videos_of_channel(channel_id).map(|v| v.published_at).max().map(|t| t - options.overlap);
        (since, s.videos_of_channel(channel_id).map(|v| v.video_id.clone()).collect())
    };

    let listed = match provider.list_videos(channel_id, since) {
        Ok(v) => v,
        Err(e) => {
            report.issue(channel_id, format!("listing videos: {e}"));
            Vec::new()
        }
    };

    let mut work: Vec<String> = Vec::new();
    for remote in listed {
        match store_video(store, channel_id, &remote) {
            Ok(change) => {
                if change == Change::Inserted {
                    report.new_videos += 1;
                }
                work.push(remote.video_id);
            }
            Err(reason) => report.issue(&remote.video_id, reason),
        }
    }
    {
        let s = store.read().expect("store lock");
        let seen: BTreeSet<String> = work.iter().cloned().collect();
        for id in stored.iter().filter(|id| !seen.contains(*id)) {
            let pending_transcript = s.video(id).is_some_and(|v| v.transcript_status == TranscriptStatus::Pending);
            let pending_comments = !s.sync_state(id).is_some_and(|st| st.comments_complete);
            if pending_transcript || pending_comments {
                work.push(id.clone());
            }
        }
    }

    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<(usize, VideoOutcome)>> = Mutex::new(Vec::new());
    let workers = options.parallelism.clamp(1, work.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(video_id) = work.get(i) else { break };
                let outcome = sync_video(store, provider, video_id, options);
                outcomes.lock().expect("outcomes").push((i, outcome));
            });
        }
    });

    let mut outcomes = outcomes.into_inner().expect("outcomes");
    outcomes.sort_by_key(|(i, _)| *i);
    for (_, o) in outcomes {
        report.new_comments += o.new_comments;
        match o.transcript {
            Some(TranscriptStatus::Fetched) => report.transcripts_fetched += 1,
            Some(TranscriptStatus::Unavailable) => report.transcripts_unavailable += 1,
            _ => {}
        }
        report.errors.extend(o.errors);
    }
    report.finished_at = now();
    Ok(report)
}

fn store_video(store: &SharedStore, channel_id: &str, remote: &RemoteVideo) -> Result<Change, String> {
    let published_at = parse_timestamp(&remote.published_at).map_err(|e| e.to_string())?;
    write(store, |s| {
        let video = match s.video(&remote.video_id) {
            Some(old) => VideoRecord {
                title: remote.title.clone(),
                published_at,
                url: remote.url.clone(),
                duration_s: remote.duration_s,
                ..old.clone()
            },
            None => VideoRecord {
                video_id: remote.video_id.clone(),
                channel_id: channel_id.to_string(),
                title: remote.title.clone(),
                published_at,
                collected_at: now(),
                url: remote.url.clone(),
                duration_s: remote.duration_s,
                transcript_status: TranscriptStatus::Pending,
                extra: Extra::new(),
            },
        };
        s.upsert_video(video)
    })
    .map_err(|e| e.to_string())
}

fn sync_video(store: &SharedStore, provider: &dyn Provider, video_id: &str, options: &SyncOptions) -> VideoOutcome {
    let mut out = VideoOutcome::default();
    let (transcript_pending, mut state) = {
        let s = store.read().expect("store lock");
        let pending = s.video(video_id).is_some_and(|v| v.transcript_status == TranscriptStatus::Pending);
        (pending, s.sync_state(video_id).cloned().unwrap_or_default())
    };

    if transcript_pending {
        match fetch_transcript(store, provider, video_id) {
            Ok(status) => out.transcript = Some(status),
            Err(reason) => out.errors.push(SyncIssue { item_id: video_id.to_string(), reason }),
        }
    }

    if state.comments_complete {
        return out;
    }
    let mut seen_tokens: HashSet<String> = HashSet::new();
    for _ in 0..MAX_COMMENT_PAGES {
        let page = match provider.get_comments(video_id, state.next_page.as_deref()) {
            Ok(p) => p,
            Err(e) => {
                out.errors.push(SyncIssue { item_id: video_id.to_string(), reason: format!("comments: {e}") });
                return out;
            }
        };
        let next_page = page.next_page.filter(|t| seen_tokens.insert(t.clone()));
        let collected_at = now();
        let mut batch = Vec::new();
        {
            let s = store.read().expect("store lock");
            for c in page.comments {
                if s.comment(&c.comment_id).is_some() {
                    continue;
                }
                match parse_timestamp(&c.published_at) {
                    Ok(published_at) => batch.push(Comment {
                        comment_id: c.comment_id,
                        video_id: video_id.to_string(),
                        author_key: pseudonymize(&options.author_salt, &c.author),
                        published_at,
                        collected_at,
                        text: c.text,
                        reply_to: c.reply_to,
                        normalized_text: String::new(),
                        sentences: Vec::new(),
                        extra: Extra::new(),
                    }),
                    Err(e) => out.errors.push(SyncIssue { item_id: c.comment_id, reason: e.to_string() }),
                }
            }
            let ids: HashSet<String> = batch.iter().map(|c| c.comment_id.clone()).collect();
            batch.retain(|c| match &c.reply_to {
                Some(p) if !ids.contains(p) && s.comment(p).is_none() => {
                    out.errors.push(SyncIssue { item_id: c.comment_id.clone(), reason: format!("replies to unknown comment {p}") });
                    false
                }
                _ => true,
            });
        }
        let new_state = VideoSyncState { comments_complete: next_page.is_none(), next_page };
        let committed = write(store, |s| {
            let n = s.upsert_comments(batch)?;
            s.set_sync_state(video_id, new_state.clone());
            Ok(n)
        });
        match committed {
            Ok(n) => out.new_comments += n,
            Err(e) => {
                out.errors.push(SyncIssue { item_id: video_id.to_string(), reason: format!("comments: {e}") });
                return out;
            }
        }
        state = new_state;
        if state.comments_complete {
            return out;
        }
    }
    out.errors.push(SyncIssue { item_id: video_id.to_string(), reason: "comments: too many pages".into() });
    out
}

fn fetch_transcript(store: &SharedStore, provider: &dyn Provider, video_id: &str) -> Result<TranscriptStatus, String> {
    let fetched = match provider.get_transcript(video_id) {
        Ok(t) => t,
        Err(ProviderError::NotFound(_)) => None,
        Err(e) => return Err(format!("transcript: {e}")),
    };
    write(store, |s| {
        let mut video = s.video(video_id).cloned().ok_or_else(|| StoreError::DanglingReference { kind: "video", id: video_id.into() })?;
        let status = match fetched {
            Some(mut segments) => {
                segments.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
                s.upsert_transcript(Transcript {
                    video_id: video_id.to_string(),
                    segments,
                    restored_text: String::new(),
                    sentences: Vec::new(),
                    extra: Extra::new(),
                })?;
                TranscriptStatus::Fetched
            }
            None => TranscriptStatus::Unavailable,
        };
        video.transcript_status = status;
        s.upsert_video(video)?;
        Ok(status)
    })
    .map_err(|e| format!("transcript: {e}"))
}

/// Synchronises every active channel in id order. Channel-level failures
/// become report entries.
pub fn sync_all(store: &SharedStore, provider: &dyn Provider, locks: &SyncLocks, options: &SyncOptions) -> Vec<SyncReport> {
    let ids: Vec<String> = {
        let s = store.read().expect("store lock");
        s.data().channels.values().filter(|c| c.active).map(|c| c.channel_id.clone()).collect()
    };
    ids.iter()
        .map(|id| {
            sync_channel(store, provider, locks, id, options).unwrap_or_else(|e| {
                let mut r = SyncReport::new(id);
                r.issue(id, e.to_string());
                r
            })
        })
        .collect()
}
