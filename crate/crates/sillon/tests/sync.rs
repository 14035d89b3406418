mod common;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use sillon::domain::Timestamp;
use sillon::ingest::{
    register_channel, sync_all, sync_channel, ChannelRef, CommentPage, FixtureProvider, Provider, ProviderError, RemoteChannel,
    RemoteVideo, SyncError, SyncLocks,
};
use sillon::store::Store;
use sillon_core::text::TimedSegment;

fn zero(r: &sillon::ingest::SyncReport) -> bool {
    r.new_videos == 0 && r.new_comments == 0 && r.transcripts_fetched == 0 && r.transcripts_unavailable == 0 && r.errors.is_empty()
}

#[test]
fn second_sync_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::init(dir.path()).unwrap().shared();
    let provider = common::provider();
    common::register_all(&store, &provider);
    let locks = SyncLocks::default();

    let first = sync_all(&store, &provider, &locks, &common::options());
    assert_eq!(first.len(), 4);
    assert_eq!(first.iter().map(|r| r.new_videos).sum::<usize>(), 12);
    assert_eq!(first.iter().map(|r| r.new_comments).sum::<usize>(), 1405);
    assert_eq!(first.iter().map(|r| r.transcripts_fetched).sum::<usize>(), 11);
    assert_eq!(first.iter().map(|r| r.transcripts_unavailable).sum::<usize>(), 1);

    let revision = store.read().unwrap().revision();
    let on_disk = std::fs::read(dir.path().join("store.json")).unwrap();
    let second = sync_all(&store, &provider, &locks, &common::options());
    assert!(second.iter().all(zero), "{second:?}");
    assert_eq!(store.read().unwrap().revision(), revision);
    assert_eq!(std::fs::read(dir.path().join("store.json")).unwrap(), on_disk);
}

#[test]
fn authors_are_pseudonymized() {
    let store = Store::in_memory().shared();
    let provider = common::provider();
    common::register_all(&store, &provider);
    sync_all(&store, &provider, &SyncLocks::default(), &common::options());
    let s = store.read().unwrap();
    assert!(s.data().comments.values().all(|c| c.author_key.starts_with("anon-")));
    let replies: Vec<_> = s.data().comments.values().filter(|c| c.reply_to.is_some()).collect();
    assert!(!replies.is_empty());
    assert!(replies.iter().all(|c| s.comment(c.reply_to.as_ref().unwrap()).unwrap().video_id == c.video_id));
}

/// Fails comment pages after a budget of successful calls.
struct Flaky {
    inner: FixtureProvider,
    budget: AtomicUsize,
}

impl Provider for Flaky {
    fn channel(&self, channel: &ChannelRef) -> Result<RemoteChannel, ProviderError> {
        self.inner.channel(channel)
    }

    fn list_videos(&self, channel_id: &str, since: Option<Timestamp>) -> Result<Vec<RemoteVideo>, ProviderError> {
        self.inner.list_videos(channel_id, since)
    }

    fn get_transcript(&self, video_id: &str) -> Result<Option<Vec<TimedSegment>>, ProviderError> {
        self.inner.get_transcript(video_id)
    }

    fn get_comments(&self, video_id: &str, page: Option<&str>) -> Result<CommentPage, ProviderError> {
        let left = self.budget.load(Ordering::SeqCst);
        if left == 0 {
            return Err(ProviderError::Transient("connection reset".into()));
        }
        self.budget.store(left - 1, Ordering::SeqCst);
        self.inner.get_comments(video_id, page)
    }
}

#[test]
fn interrupted_sync_resumes_without_duplicates() {
    let reference = Store::in_memory().shared();
    let full = common::provider().with_page_size(7);
    common::register_all(&reference, &full);
    sync_all(&reference, &full, &SyncLocks::default(), &common::options());

    let store = Store::in_memory().shared();
    let flaky = Flaky { inner: common::provider().with_page_size(7), budget: AtomicUsize::new(9) };
    common::register_all(&store, &flaky);
    let mut opts = common::options();
    opts.parallelism = 1;
    let interrupted = sync_all(&store, &flaky, &SyncLocks::default(), &opts);
    let partial = store.read().unwrap().stats().comments;
    assert!(partial > 0 && partial < 1405, "{partial}");
    assert!(interrupted.iter().any(|r| !r.errors.is_empty()));

    let resumed = sync_all(&store, &full, &SyncLocks::default(), &opts);
    assert_eq!(resumed.iter().map(|r| r.new_comments).sum::<usize>(), 1405 - partial);
    assert_eq!(resumed.iter().map(|r| r.new_videos).sum::<usize>(), 0);
    let ids = |st: &sillon::store::SharedStore| st.read().unwrap().data().comments.keys().cloned().collect::<BTreeSet<_>>();
    assert_eq!(ids(&store), ids(&reference));
    assert!(sync_all(&store, &full, &SyncLocks::default(), &opts).iter().all(zero));
}

#[test]
fn locks_inactive_and_unknown_channels() {
    let store = Store::in_memory().shared();
    let provider = common::provider();
    assert!(sync_all(&store, &provider, &SyncLocks::default(), &common::options()).is_empty());

    {
        let mut s = store.write().unwrap();
        for id in &common::CHANNELS[..3] {
            register_channel(&mut s, &provider, id).unwrap();
        }
        let mut c = s.channel(common::CHANNELS[2]).unwrap().clone();
        c.active = false;
        s.upsert_channel(c).unwrap();
    }
    let reports = sync_all(&store, &provider, &SyncLocks::default(), &common::options());
    let synced: Vec<&str> = reports.iter().map(|r| r.channel_id.as_str()).collect();
    assert_eq!(synced, common::CHANNELS[..2]);
    assert!(store.read().unwrap().videos_of_channel(common::CHANNELS[2]).next().is_none());

    let locks = SyncLocks::default();
    let _held = locks.try_lock(common::CHANNELS[0]).unwrap();
    assert!(matches!(
        sync_channel(&store, &provider, &locks, common::CHANNELS[0], &common::options()),
        Err(SyncError::AlreadyRunning(_))
    ));
    assert!(matches!(sync_channel(&store, &provider, &locks, "UC-nope", &common::options()), Err(SyncError::UnknownChannel(_))));
    assert!(matches!(
        sync_channel(&store, &provider, &locks, common::CHANNELS[2], &common::options()),
        Err(SyncError::InactiveChannel(_))
    ));
}

#[test]
fn channel_registration_is_idempotent() {
    let mut store = Store::in_memory();
    let provider = common::provider();
    let (c, change) = register_channel(&mut store, &provider, "https://www.youtube.com/@potager-autonome").unwrap();
    assert_eq!(c.channel_id, "UC-potager-autonome");
    assert_eq!(change, sillon::store::Change::Inserted);
    let rev = store.revision();
    let (_, again) = register_channel(&mut store, &provider, "UC-potager-autonome").unwrap();
    assert_eq!(again, sillon::store::Change::Unchanged);
    assert_eq!(store.revision(), rev);
    assert!(register_channel(&mut store, &provider, "UC-absent").is_err());
}
