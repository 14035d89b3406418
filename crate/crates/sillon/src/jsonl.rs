//! JSON Lines export and import, one file per entity kind.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::domain::{Annotation, Channel, Comment, Sentence, Transcript, VideoRecord};
use crate::store::{Store, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityKind {
    Channels,
    Videos,
    Transcripts,
    Comments,
    Sentences,
    Annotations,
}

impl EntityKind {
    /// Import order: parents before children.
    pub const ALL: [EntityKind; 6] = [
        EntityKind::Channels,
        EntityKind::Videos,
        EntityKind::Transcripts,
        EntityKind::Comments,
        EntityKind::Sentences,
        EntityKind::Annotations,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Channels => "channels",
            EntityKind::Videos => "videos",
            EntityKind::Transcripts => "transcripts",
            EntityKind::Comments => "comments",
            EntityKind::Sentences => "sentences",
            EntityKind::Annotations => "annotations",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.jsonl", self.as_str())
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.as_str().trim_end_matches('s') == s)
            .ok_or_else(|| format!("unknown entity kind `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn write_all<T: Serialize + 'static, W: Write>(items: impl Iterator<Item = T>, out: &mut W) -> io::Result<usize> {
    let mut n = 0;
    for item in items {
        serde_json::to_writer(&mut *out, &item).map_err(io::Error::other)?;
        out.write_all(b"\n")?;
        n += 1;
    }
    Ok(n)
}

/// Writes every entity of `kind`, in id order. Returns the record count.
pub fn export<W: Write>(store: &Store, kind: EntityKind, out: &mut W) -> io::Result<usize> {
    let d = store.data();
    match kind {
        EntityKind::Channels => write_all(d.channels.values().cloned(), out),
        EntityKind::Videos => write_all(d.videos.values().cloned(), out),
        EntityKind::Transcripts => write_all(d.transcripts.values().cloned(), out),
        EntityKind::Comments => write_all(d.comments.values().cloned(), out),
        EntityKind::Sentences => write_all(d.sentences.values().cloned(), out),
        EntityKind::Annotations => write_all(d.annotations.values().cloned(), out),
    }
}

fn read_all<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: i + 1, source })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImportReport {
    pub read: usize,
    pub changed: usize,
}

/// Upserts every record of a JSON Lines stream. All or nothing: a parse or
/// validation error leaves the store as it was.
pub fn import<R: BufRead>(store: &mut Store, kind: EntityKind, input: R) -> Result<ImportReport, JsonlError> {
    fn each<T>(
        store: &mut Store,
        items: Vec<T>,
        mut f: impl FnMut(&mut Store, T) -> Result<crate::store::Change, StoreError>,
    ) -> Result<ImportReport, JsonlError> {
        let read = items.len();
        store.transaction(|s| {
            let mut changed = 0;
            for item in items {
                if f(s, item)? != crate::store::Change::Unchanged {
                    changed += 1;
                }
            }
            Ok(ImportReport { read, changed })
        })
    }
    match kind {
        EntityKind::Channels => each(store, read_all::<Channel, _>(input)?, Store::upsert_channel),
        EntityKind::Videos => each(store, read_all::<VideoRecord, _>(input)?, Store::upsert_video),
        EntityKind::Transcripts => each(store, read_all::<Transcript, _>(input)?, Store::upsert_transcript),
        EntityKind::Comments => {
            let items = read_all::<Comment, _>(input)?;
            let read = items.len();
            let changed = store.transaction(|s| s.upsert_comments(items))?;
            Ok(ImportReport { read, changed })
        }
        EntityKind::Sentences => each(store, read_all::<Sentence, _>(input)?, Store::upsert_sentence),
        EntityKind::Annotations => each(store, read_all::<Annotation, _>(input)?, Store::upsert_annotation),
    }
}

/// Exports every kind to `<dir>/<kind>.jsonl`.
pub fn export_dir(store: &Store, dir: &Path) -> io::Result<Vec<(EntityKind, usize)>> {
    std::fs::create_dir_all(dir)?;
    let mut counts = Vec::new();
    for kind in EntityKind::ALL {
        let mut f = io::BufWriter::new(std::fs::File::create(dir.join(kind.file_name()))?);
        counts.push((kind, export(store, kind, &mut f)?));
        f.flush()?;
    }
    Ok(counts)
}

/// Imports every `<kind>.jsonl` present in `dir`, parents first.
pub fn import_dir(store: &mut Store, dir: &Path) -> Result<Vec<(EntityKind, ImportReport)>, JsonlError> {
    store.transaction(|s| {
        let mut reports = Vec::new();
        for kind in EntityKind::ALL {
            let path = dir.join(kind.file_name());
            if path.exists() {
                let f = io::BufReader::new(std::fs::File::open(path)?);
                reports.push((kind, import(s, kind, f)?));
            }
        }
        Ok(reports)
    })
}
