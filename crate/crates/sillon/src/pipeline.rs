//! Derived layers: restored and normalized text, sentences, keyword hits and
//! the sentence search index.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sillon_core::classify::ClassifierModel;
use sillon_core::index::{IndexedSentence, InvertedIndex, ParentKind};
use sillon_core::lexicon::KeywordLexicon;
use sillon_core::taxonomy::{TargetKind, Task};
use sillon_core::text::{normalize_comment, restore, segment_sentences, RestorationConfig, TextError};

use crate::domain::{sentence_id, ParentRef, Sentence, TargetRef};
use crate::models::{self, ModelError};
use crate::store::{Change, Store, StoreError};

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("transcript {video_id}: {source}")]
    Text { video_id: String, source: TextError },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("index file {path}: {source}")]
    IndexFile { path: String, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ProcessReport {
    pub transcripts: usize,
    pub comments: usize,
    pub sentences: usize,
    /// Parents whose text or sentence layer changed.
    pub updated: usize,
}

fn sentences_for(parent: &ParentRef, text: &str, restoration: &RestorationConfig, lexicon: &KeywordLexicon) -> Vec<Sentence> {
    segment_sentences(text, &restoration.abbreviations)
        .into_iter()
        .enumerate()
        .map(|(i, span)| {
            let body = span.slice(text);
            Sentence {
                sentence_id: sentence_id(parent, i as u32),
                parent: parent.clone(),
                ordinal: i as u32,
                text: body.to_string(),
                span: (span.start, span.end),
                keyword_hits: lexicon.tag(body),
                extra: Default::default(),
            }
        })
        .collect()
}

/// Restores and segments every transcript, normalizes and segments every
/// comment, and tags keywords. Running it twice changes nothing.
pub fn process(store: &mut Store, restoration: &RestorationConfig, lexicon: &KeywordLexicon) -> Result<ProcessReport, PipelineError> {
    store.transaction(|s| {
        let mut report = ProcessReport::default();
        let transcripts: Vec<(String, String)> = s
            .data()
            .transcripts
            .values()
            .map(|t| {
                restore(&t.segments, restoration)
                    .map(|text| (t.video_id.clone(), text))
                    .map_err(|source| PipelineError::Text { video_id: t.video_id.clone(), source })
            })
            .collect::<Result<_, _>>()?;
        for (video_id, text) in transcripts {
            let parent = ParentRef { kind: ParentKind::Transcript, id: video_id };
            let sentences = sentences_for(&parent, &text, restoration, lexicon);
            report.transcripts += 1;
            report.sentences += sentences.len();
            if s.replace_sentences(&parent, &text, sentences)? != Change::Unchanged {
                report.updated += 1;
            }
        }

        let comments: Vec<(String, String)> =
            s.data().comments.values().map(|c| (c.comment_id.clone(), normalize_comment(&c.text))).collect();
        for (comment_id, text) in comments {
            let parent = ParentRef { kind: ParentKind::Comment, id: comment_id };
            let sentences = sentences_for(&parent, &text, restoration, lexicon);
            report.comments += 1;
            report.sentences += sentences.len();
            if s.replace_sentences(&parent, &text, sentences)? != Change::Unchanged {
                report.updated += 1;
            }
        }
        Ok(report)
    })
}

/// Majority label per target for `task`. Ties go to the class listed first.
pub fn majority_labels(store: &Store, task: Task) -> BTreeMap<TargetRef, String> {
    let mut votes: BTreeMap<TargetRef, BTreeMap<&str, usize>> = BTreeMap::new();
    for a in store.data().annotations.values().filter(|a| a.task == task) {
        *votes.entry(a.target.clone()).or_default().entry(a.label.as_str()).or_insert(0) += 1;
    }
    votes
        .into_iter()
        .filter_map(|(target, counts)| {
            let best = counts.values().copied().max()?;
            let label = task.classes().iter().find(|c| counts.get(**c) == Some(&best))?;
            Some((target, label.to_string()))
        })
        .collect()
}

/// Class labels used by the search filter: a human label on the sentence,
/// else one on its parent comment, else the prediction of `models[task]`.
pub fn effective_labels(store: &Store, models: &BTreeMap<Task, ClassifierModel>) -> BTreeMap<String, Vec<String>> {
    let human: Vec<(Task, BTreeMap<TargetRef, String>)> = Task::ALL.iter().map(|&t| (t, majority_labels(store, t))).collect();
    let mut out = BTreeMap::new();
    for s in store.data().sentences.values() {
        let mut labels = Vec::new();
        for (task, by_target) in &human {
            let own = by_target.get(&TargetRef { kind: TargetKind::Sentence, id: s.sentence_id.clone() });
            let parent = match s.parent.kind {
                ParentKind::Comment => by_target.get(&TargetRef { kind: TargetKind::Comment, id: s.parent.id.clone() }),
                ParentKind::Transcript => None,
            };
            if let Some(label) = own.or(parent) {
                labels.push(label.clone());
            } else if let Some(p) = models.get(task).and_then(|m| m.predict(&s.text).ok()) {
                labels.push(p.label);
            }
        }
        out.insert(s.sentence_id.clone(), labels);
    }
    out
}

pub fn build_index(store: &Store, models: &BTreeMap<Task, ClassifierModel>) -> InvertedIndex {
    let labels = effective_labels(store, models);
    let docs = store.data().sentences.values().filter_map(|s| {
        let (video_id, channel_id) = match s.parent.kind {
            ParentKind::Transcript => {
                let v = store.video(&s.parent.id)?;
                (v.video_id.clone(), v.channel_id.clone())
            }
            ParentKind::Comment => {
                let c = store.comment(&s.parent.id)?;
                (c.video_id.clone(), store.video(&c.video_id)?.channel_id.clone())
            }
        };
        let mut doc = IndexedSentence::from_text(&s.sentence_id, s.parent.kind, video_id, channel_id, s.ordinal, &s.text);
        doc.labels = labels.get(&s.sentence_id).cloned().unwrap_or_default();
        Some(doc)
    });
    InvertedIndex::build(docs)
}

/// A persisted index and what it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSnapshot {
    pub store_revision: u64,
    /// task -> model id whose predictions filled in missing labels.
    pub models: BTreeMap<String, String>,
    pub index: InvertedIndex,
}

impl IndexSnapshot {
    pub fn is_current(&self, store: &Store, models: &BTreeMap<String, String>) -> bool {
        self.store_revision == store.revision() && self.models == *models
    }
}

/// task -> model id, and the loaded models.
pub type LatestModels = (BTreeMap<String, String>, BTreeMap<Task, ClassifierModel>);

/// Ids and models recorded as the latest per task.
pub fn latest_models(data_dir: &Path) -> Result<LatestModels, ModelError> {
    let ids = models::latest(data_dir)?;
    let mut loaded = BTreeMap::new();
    for (task, id) in &ids {
        let task: Task = task.parse().map_err(|_| ModelError::Corrupt(format!("unknown task `{task}` in latest models")))?;
        loaded.insert(task, models::load_model(data_dir, id)?);
    }
    Ok((ids, loaded))
}

pub fn read_index(data_dir: &Path) -> Result<Option<IndexSnapshot>, PipelineError> {
    let path = data_dir.join(INDEX_FILE);
    match fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|source| PipelineError::IndexFile { path: path.display().to_string(), source }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Returns the persisted index if it matches the store revision and the
/// latest models, otherwise rebuilds and persists it. The flag tells
/// whether a rebuild happened.
pub fn ensure_index(data_dir: &Path, store: &Store) -> Result<(IndexSnapshot, bool), PipelineError> {
    let (ids, loaded) = latest_models(data_dir)?;
    if let Some(snapshot) = read_index(data_dir)? {
        if snapshot.is_current(store, &ids) {
            return Ok((snapshot, false));
        }
    }
    let snapshot = IndexSnapshot { store_revision: store.revision(), models: ids, index: build_index(store, &loaded) };
    let path = data_dir.join(INDEX_FILE);
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(&snapshot).expect("index serializes"))?;
    fs::rename(&tmp, &path)?;
    Ok((snapshot, true))
}
