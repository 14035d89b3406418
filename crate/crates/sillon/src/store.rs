//! Single-file JSON store.
//!
//! Everything lives in `<data_dir>/store.json`, an object of maps keyed by
//! entity id (see the README for the schema). Maps are ordered, so the file
//! is a pure function of the content: upserting an identical entity leaves
//! it byte-identical. Writes go to a temporary file that is renamed over the
//! old one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use sillon_core::index::ParentKind;
use sillon_core::taxonomy::{validate_label, TargetKind, Task};
use sillon_core::text::reconstructs;

use crate::domain::*;

pub const STORE_FILE: &str = "store.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("{kind} `{id}` does not exist")]
    DanglingReference { kind: &'static str, id: String },
    #[error("no store at {0} (run `sillon init` first)")]
    NotInitialized(PathBuf),
    #[error("unsupported store schema version {0}")]
    UnsupportedSchema(u32),
    #[error("corrupt store file {path}: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn violation(msg: impl Into<String>) -> StoreError {
    StoreError::InvariantViolation(msg.into())
}

fn dangling(kind: &'static str, id: &str) -> StoreError {
    StoreError::DanglingReference { kind, id: id.to_string() }
}

/// Outcome of an upsert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Change {
    Inserted,
    Updated,
    Unchanged,
}

/// Resume point of a video's comment download.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoSyncState {
    pub comments_complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_page: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreData {
    pub schema_version: u32,
    /// Bumped on every effective change.
    pub revision: u64,
    pub channels: BTreeMap<String, Channel>,
    pub videos: BTreeMap<String, VideoRecord>,
    pub transcripts: BTreeMap<String, Transcript>,
    pub comments: BTreeMap<String, Comment>,
    pub sentences: BTreeMap<String, Sentence>,
    pub annotations: BTreeMap<String, Annotation>,
    #[serde(default)]
    pub sync_state: BTreeMap<String, VideoSyncState>,
}

impl Default for StoreData {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            revision: 0,
            channels: BTreeMap::new(),
            videos: BTreeMap::new(),
            transcripts: BTreeMap::new(),
            comments: BTreeMap::new(),
            sentences: BTreeMap::new(),
            annotations: BTreeMap::new(),
            sync_state: BTreeMap::new(),
        }
    }
}

#[derive(Debug)]
pub struct Store {
    path: Option<PathBuf>,
    data: StoreData,
    dirty: bool,
}

pub type SharedStore = Arc<RwLock<Store>>;

fn put<T: PartialEq>(map: &mut BTreeMap<String, T>, key: String, value: T) -> Change {
    match map.get(&key) {
        Some(old) if *old == value => Change::Unchanged,
        Some(_) => {
            map.insert(key, value);
            Change::Updated
        }
        None => {
            map.insert(key, value);
            Change::Inserted
        }
    }
}

impl Store {
    pub fn in_memory() -> Self {
        Self { path: None, data: StoreData::default(), dirty: false }
    }

    /// Creates an empty store in `dir`, or opens the existing one.
    pub fn init(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(STORE_FILE);
        if path.exists() {
            return Self::open(dir);
        }
        let mut store = Self { path: Some(path), data: StoreData::default(), dirty: true };
        store.save()?;
        Ok(store)
    }

    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let path = dir.join(STORE_FILE);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotInitialized(dir.to_path_buf())),
            Err(e) => return Err(e.into()),
        };
        let data: StoreData = serde_json::from_slice(&bytes).map_err(|source| StoreError::Corrupt { path: path.clone(), source })?;
        if data.schema_version != SCHEMA_VERSION {
            return Err(StoreError::UnsupportedSchema(data.schema_version));
        }
        Ok(Self { path: Some(path), data, dirty: false })
    }

    pub fn shared(self) -> SharedStore {
        Arc::new(RwLock::new(self))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn data(&self) -> &StoreData {
        &self.data
    }

    pub fn revision(&self) -> u64 {
        self.data.revision
    }

    /// Writes pending changes to disk. No-op for in-memory stores or when clean.
    pub fn save(&mut self) -> Result<(), StoreError> {
        let Some(path) = &self.path else {
            self.dirty = false;
            return Ok(());
        };
        if !self.dirty {
            return Ok(());
        }
        let mut bytes = serde_json::to_vec_pretty(&self.data).expect("store data serializes");
        bytes.push(b'\n');
        let tmp = path.with_extension("json.tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        self.dirty = false;
        Ok(())
    }

    /// Runs `f`; if it fails, the store is restored to its prior state.
    pub fn transaction<T, E>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, E>) -> Result<T, E> {
        let snapshot = self.data.clone();
        let dirty = self.dirty;
        let out = f(self);
        if out.is_err() {
            self.data = snapshot;
            self.dirty = dirty;
        }
        out
    }

    fn record(&mut self, change: Change) -> Change {
        if change != Change::Unchanged {
            self.data.revision += 1;
            self.dirty = true;
        }
        change
    }

    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.data.channels.get(id)
    }

    pub fn video(&self, id: &str) -> Option<&VideoRecord> {
        self.data.videos.get(id)
    }

    pub fn transcript(&self, video_id: &str) -> Option<&Transcript> {
        self.data.transcripts.get(video_id)
    }

    pub fn comment(&self, id: &str) -> Option<&Comment> {
        self.data.comments.get(id)
    }

    pub fn sentence(&self, id: &str) -> Option<&Sentence> {
        self.data.sentences.get(id)
    }

    pub fn videos_of_channel<'a>(&'a self, channel_id: &'a str) -> impl Iterator<Item = &'a VideoRecord> + 'a {
        self.data.videos.values().filter(move |v| v.channel_id == channel_id)
    }

    /// Comments of a video, oldest first (ties by id).
    pub fn comments_of_video(&self, video_id: &str) -> Vec<&Comment> {
        let mut out: Vec<&Comment> = self.data.comments.values().filter(|c| c.video_id == video_id).collect();
        out.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.comment_id.cmp(&b.comment_id)));
        out
    }

    /// Sentences of a parent in ordinal order.
    pub fn sentences_of(&self, parent: &ParentRef) -> Vec<&Sentence> {
        let ids = match parent.kind {
            ParentKind::Transcript => self.transcript(&parent.id).map(|t| &t.sentences),
            ParentKind::Comment => self.comment(&parent.id).map(|c| &c.sentences),
        };
        ids.into_iter().flatten().filter_map(|id| self.sentence(id)).collect()
    }

    pub fn sync_state(&self, video_id: &str) -> Option<&VideoSyncState> {
        self.data.sync_state.get(video_id)
    }

    /// Text that a target's annotations refer to.
    pub fn target_text(&self, target: &TargetRef) -> Option<&str> {
        match target.kind {
            TargetKind::Comment => self.comment(&target.id).map(|c| {
                if c.normalized_text.is_empty() {
                    c.text.as_str()
                } else {
                    c.normalized_text.as_str()
                }
            }),
            TargetKind::Sentence => self.sentence(&target.id).map(|s| s.text.as_str()),
            TargetKind::Transcript => self.transcript(&target.id).map(|t| t.restored_text.as_str()),
        }
    }

    pub fn target_exists(&self, target: &TargetRef) -> bool {
        match target.kind {
            TargetKind::Comment => self.data.comments.contains_key(&target.id),
            TargetKind::Sentence => self.data.sentences.contains_key(&target.id),
            TargetKind::Transcript => self.data.transcripts.contains_key(&target.id),
        }
    }

    pub fn upsert_channel(&mut self, channel: Channel) -> Result<Change, StoreError> {
        validate_channel(&channel)?;
        let change = put(&mut self.data.channels, channel.channel_id.clone(), channel);
        Ok(self.record(change))
    }

    pub fn upsert_video(&mut self, video: VideoRecord) -> Result<Change, StoreError> {
        if video.video_id.trim().is_empty() {
            return Err(violation("video_id must be non-empty"));
        }
        if !self.data.channels.contains_key(&video.channel_id) {
            return Err(dangling("channel", &video.channel_id));
        }
        if !(video.duration_s.is_finite() && video.duration_s >= 0.0) {
            return Err(violation(format!("video {}: duration_s must be a non-negative number", video.video_id)));
        }
        if let Some(old) = self.data.videos.get(&video.video_id) {
            if old.channel_id != video.channel_id {
                return Err(violation(format!("video {} already belongs to channel {}", video.video_id, old.channel_id)));
            }
        }
        let change = put(&mut self.data.videos, video.video_id.clone(), video);
        Ok(self.record(change))
    }

    pub fn upsert_transcript(&mut self, transcript: Transcript) -> Result<Change, StoreError> {
        if !self.data.videos.contains_key(&transcript.video_id) {
            return Err(dangling("video", &transcript.video_id));
        }
        validate_segments(&transcript)?;
        let change = put(&mut self.data.transcripts, transcript.video_id.clone(), transcript);
        Ok(self.record(change))
    }

    /// Upserts comments as one unit: either all are stored or none is.
    pub fn upsert_comments(&mut self, comments: Vec<Comment>) -> Result<usize, StoreError> {
        let batch: BTreeMap<&str, &Comment> = comments.iter().map(|c| (c.comment_id.as_str(), c)).collect();
        for c in &comments {
            if c.comment_id.trim().is_empty() {
                return Err(violation("comment_id must be non-empty"));
            }
            if !self.data.videos.contains_key(&c.video_id) {
                return Err(dangling("video", &c.video_id));
            }
            if let Some(parent) = &c.reply_to {
                let parent_video = batch
                    .get(parent.as_str())
                    .map(|p| p.video_id.as_str())
                    .or_else(|| self.data.comments.get(parent).map(|p| p.video_id.as_str()))
                    .ok_or_else(|| dangling("comment", parent))?;
                if parent_video != c.video_id {
                    return Err(violation(format!("comment {} replies to {} on another video", c.comment_id, parent)));
                }
            }
        }
        let mut changed = 0;
        for c in comments {
            let change = put(&mut self.data.comments, c.comment_id.clone(), c);
            if self.record(change) != Change::Unchanged {
                changed += 1;
            }
        }
        Ok(changed)
    }

    pub fn upsert_comment(&mut self, comment: Comment) -> Result<Change, StoreError> {
        let existed = self.data.comments.contains_key(&comment.comment_id);
        Ok(match self.upsert_comments(vec![comment])? {
            0 => Change::Unchanged,
            _ if existed => Change::Updated,
            _ => Change::Inserted,
        })
    }

    /// Upserts one sentence. Its span must select its text inside the parent.
    pub fn upsert_sentence(&mut self, sentence: Sentence) -> Result<Change, StoreError> {
        let parent_text = self.parent_text(&sentence.parent)?;
        check_span(parent_text, &sentence)?;
        let change = put(&mut self.data.sentences, sentence.sentence_id.clone(), sentence);
        Ok(self.record(change))
    }

    fn parent_text(&self, parent: &ParentRef) -> Result<&str, StoreError> {
        match parent.kind {
            ParentKind::Transcript => {
                self.transcript(&parent.id).map(|t| t.restored_text.as_str()).ok_or_else(|| dangling("transcript", &parent.id))
            }
            ParentKind::Comment => {
                self.comment(&parent.id).map(|c| c.normalized_text.as_str()).ok_or_else(|| dangling("comment", &parent.id))
            }
        }
    }

    /// Replaces a parent's derived text and its whole sentence layer at once.
    ///
    /// `sentences` must have ordinals 0..n and spans that rebuild `text`.
    /// Sentences of the previous layer that are not in the new one are removed.
    pub fn replace_sentences(&mut self, parent: &ParentRef, text: &str, sentences: Vec<Sentence>) -> Result<Change, StoreError> {
        self.parent_text(parent)?;
        for (i, s) in sentences.iter().enumerate() {
            if s.parent != *parent {
                return Err(violation(format!("sentence {} has a different parent", s.sentence_id)));
            }
            if s.ordinal as usize != i {
                return Err(violation(format!("sentence ordinals of {} are not contiguous from 0", parent.id)));
            }
            check_span(text, s)?;
        }
        let spans: Vec<sillon_core::text::SentenceSpan> =
            sentences.iter().map(|s| sillon_core::text::SentenceSpan { start: s.span.0, end: s.span.1 }).collect();
        if !reconstructs(text, &spans) {
            return Err(violation(format!("sentence spans of {} do not rebuild its text", parent.id)));
        }

        let new_ids: Vec<String> = sentences.iter().map(|s| s.sentence_id.clone()).collect();
        let old_ids: Vec<String> = match parent.kind {
            ParentKind::Transcript => self.data.transcripts[&parent.id].sentences.clone(),
            ParentKind::Comment => self.data.comments[&parent.id].sentences.clone(),
        };
        let mut change = Change::Unchanged;
        let mut merge = |c: Change| {
            if c != Change::Unchanged {
                change = Change::Updated;
            }
        };
        let keep: BTreeSet<&String> = new_ids.iter().collect();
        for id in old_ids.iter().filter(|id| !keep.contains(id)) {
            if self.data.sentences.remove(id).is_some() {
                merge(Change::Updated);
            }
        }
        for s in sentences {
            merge(put(&mut self.data.sentences, s.sentence_id.clone(), s));
        }
        match parent.kind {
            ParentKind::Transcript => {
                let t = self.data.transcripts.get_mut(&parent.id).expect("checked");
                if t.restored_text != text || t.sentences != new_ids {
                    t.restored_text = text.to_string();
                    t.sentences = new_ids;
                    merge(Change::Updated);
                }
            }
            ParentKind::Comment => {
                let c = self.data.comments.get_mut(&parent.id).expect("checked");
                if c.normalized_text != text || c.sentences != new_ids {
                    c.normalized_text = text.to_string();
                    c.sentences = new_ids;
                    merge(Change::Updated);
                }
            }
        }
        Ok(self.record(change))
    }

    /// Upserts an annotation keyed by (target, annotator, task). Re-sending the
    /// same label keeps the original `created_at`.
    pub fn upsert_annotation(&mut self, mut annotation: Annotation) -> Result<Change, StoreError> {
        if annotation.annotator_id.trim().is_empty() {
            return Err(violation("annotator_id must be non-empty"));
        }
        validate_label(annotation.task, &annotation.label, annotation.target.kind).map_err(|e| violation(e.to_string()))?;
        if !self.target_exists(&annotation.target) {
            let kind = match annotation.target.kind {
                TargetKind::Comment => "comment",
                TargetKind::Sentence => "sentence",
                TargetKind::Transcript => "transcript",
            };
            return Err(dangling(kind, &annotation.target.id));
        }
        let key = annotation.key();
        if let Some(old) = self.data.annotations.get(&key) {
            if old.label == annotation.label && old.extra == annotation.extra {
                annotation.created_at = old.created_at;
            }
        }
        let change = put(&mut self.data.annotations, key, annotation);
        Ok(self.record(change))
    }

    pub fn annotations_of<'a>(&'a self, target: &'a TargetRef) -> impl Iterator<Item = &'a Annotation> + 'a {
        self.data.annotations.values().filter(move |a| a.target == *target)
    }

    pub fn set_sync_state(&mut self, video_id: &str, state: VideoSyncState) -> Change {
        let change = put(&mut self.data.sync_state, video_id.to_string(), state);
        self.record(change)
    }

    pub fn stats(&self) -> CorpusStats {
        let d = &self.data;
        let mut labels: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for task in Task::ALL {
            labels.insert(task.as_str().into(), task.classes().iter().map(|c| (c.to_string(), 0)).collect());
        }
        for a in d.annotations.values() {
            *labels.get_mut(a.task.as_str()).expect("all tasks listed").entry(a.label.clone()).or_insert(0) += 1;
        }
        CorpusStats {
            channels: d.channels.len(),
            active_channels: d.channels.values().filter(|c| c.active).count(),
            videos: d.videos.len(),
            transcripts: d.transcripts.len(),
            transcripts_unavailable: d.videos.values().filter(|v| v.transcript_status == TranscriptStatus::Unavailable).count(),
            comments: d.comments.len(),
            sentences: d.sentences.len(),
            annotations: d.annotations.len(),
            labels,
        }
    }

    /// Full scan for broken references and span invariants. Returns one
    /// message per problem; empty means consistent.
    pub fn check_integrity(&self) -> Vec<String> {
        let d = &self.data;
        let mut problems = Vec::new();
        for v in d.videos.values() {
            if !d.channels.contains_key(&v.channel_id) {
                problems.push(format!("video {} -> missing channel {}", v.video_id, v.channel_id));
            }
        }
        for t in d.transcripts.values() {
            if !d.videos.contains_key(&t.video_id) {
                problems.push(format!("transcript {} -> missing video", t.video_id));
            }
            self.check_layer(&ParentRef { kind: ParentKind::Transcript, id: t.video_id.clone() }, &t.restored_text, &t.sentences, &mut problems);
        }
        for c in d.comments.values() {
            if !d.videos.contains_key(&c.video_id) {
                problems.push(format!("comment {} -> missing video {}", c.comment_id, c.video_id));
            }
            if let Some(p) = &c.reply_to {
                match d.comments.get(p) {
                    Some(parent) if parent.video_id == c.video_id => {}
                    _ => problems.push(format!("comment {} -> bad reply_to {}", c.comment_id, p)),
                }
            }
            self.check_layer(&ParentRef { kind: ParentKind::Comment, id: c.comment_id.clone() }, &c.normalized_text, &c.sentences, &mut problems);
        }
        for s in d.sentences.values() {
            if self.parent_text(&s.parent).is_err() {
                problems.push(format!("sentence {} -> missing parent {}", s.sentence_id, s.parent.id));
            }
        }
        for a in d.annotations.values() {
            if !self.target_exists(&a.target) {
                problems.push(format!("annotation {} -> missing target", a.key()));
            }
            if let Err(e) = validate_label(a.task, &a.label, a.target.kind) {
                problems.push(format!("annotation {}: {e}", a.key()));
            }
        }
        problems
    }

    fn check_layer(&self, parent: &ParentRef, text: &str, ids: &[String], problems: &mut Vec<String>) {
        let mut spans = Vec::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            match self.sentence(id) {
                Some(s) if s.parent == *parent && s.ordinal as usize == i => {
                    spans.push(sillon_core::text::SentenceSpan { start: s.span.0, end: s.span.1 })
                }
                Some(_) => problems.push(format!("sentence {id} is out of place under {}", parent.id)),
                None => problems.push(format!("{} -> missing sentence {id}", parent.id)),
            }
        }
        if !ids.is_empty() && spans.len() == ids.len() && !reconstructs(text, &spans) {
            problems.push(format!("sentence spans of {} do not rebuild its text", parent.id));
        }
    }
}

fn validate_channel(c: &Channel) -> Result<(), StoreError> {
    if c.channel_id.trim().is_empty() {
        return Err(violation("channel_id must be non-empty"));
    }
    if !is_absolute_url(&c.url) {
        return Err(violation(format!("channel {}: url `{}` is not an absolute URL", c.channel_id, c.url)));
    }
    Ok(())
}

fn validate_segments(t: &Transcript) -> Result<(), StoreError> {
    let mut prev = 0.0;
    for (i, s) in t.segments.iter().enumerate() {
        if !(s.start_s.is_finite() && s.duration_s.is_finite() && s.start_s >= 0.0 && s.duration_s >= 0.0) {
            return Err(violation(format!("transcript {}: segment {i} has invalid timing", t.video_id)));
        }
        if s.start_s < prev {
            return Err(violation(format!("transcript {}: segments not sorted by start_s at {i}", t.video_id)));
        }
        prev = s.start_s;
    }
    Ok(())
}

fn check_span(parent_text: &str, s: &Sentence) -> Result<(), StoreError> {
    let (start, end) = s.span;
    let ok = start < end
        && end <= parent_text.len()
        && parent_text.is_char_boundary(start)
        && parent_text.is_char_boundary(end)
        && parent_text[start..end] == s.text;
    if ok {
        Ok(())
    } else {
        Err(violation(format!("sentence {}: span {start}..{end} does not select its text in the parent", s.sentence_id)))
    }
}
