#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sillon::config::Config;
use sillon::ingest::{register_channel, sync_all, FixtureProvider, Provider, SyncLocks, SyncOptions};
use sillon::jsonl::{self, EntityKind};
use sillon::pipeline::process;
use sillon::store::{SharedStore, Store};

pub const CHANNELS: [&str; 4] = ["UC-autonomie-eau-pluie", "UC-ferme-vivriere", "UC-jardin-foret-anjou", "UC-potager-autonome"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn corpus() -> PathBuf {
    fixtures().join("corpus")
}

pub fn provider() -> FixtureProvider {
    FixtureProvider::new(corpus())
}

pub fn options() -> SyncOptions {
    SyncOptions { author_salt: "test-salt".into(), ..SyncOptions::default() }
}

/// Config for a data dir reading the committed fixtures.
pub fn fixture_config() -> Config {
    let mut config = Config::new("test-salt".into());
    config.provider.fixtures_dir = Some(corpus());
    config.lexicon = Some(fixtures().join("lexicon.tsv"));
    config
}

pub fn register_all(store: &SharedStore, provider: &dyn Provider) {
    let mut s = store.write().unwrap();
    for id in CHANNELS {
        register_channel(&mut s, provider, id).unwrap();
    }
    s.save().unwrap();
}

/// Registered, synced, annotated and processed fixture corpus in `dir`.
pub fn loaded_store(dir: &Path) -> SharedStore {
    let config = fixture_config();
    config.save(dir).unwrap();
    let store = Store::init(dir).unwrap().shared();
    let provider: Arc<dyn Provider> = Arc::new(provider());
    register_all(&store, &*provider);
    for r in sync_all(&store, &*provider, &SyncLocks::default(), &config.sync_options()) {
        assert!(r.errors.is_empty(), "{:?}", r.errors);
    }
    {
        let mut s = store.write().unwrap();
        let annotations = fs::File::open(fixtures().join("annotations.jsonl")).unwrap();
        jsonl::import(&mut s, EntityKind::Annotations, std::io::BufReader::new(annotations)).unwrap();
        process(&mut s, &config.restoration_config(dir).unwrap(), &config.lexicon(dir).unwrap()).unwrap();
        s.save().unwrap();
    }
    store
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the `sillon` binary against `data_dir`.
pub fn sillon(data_dir: &Path, args: &[&str]) -> Run {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_sillon"))
        .arg("--data-dir")
        .arg(data_dir)
        .args(args)
        .env_remove("SILLON_DATA_DIR")
        .env_remove("SILLON_API_KEY")
        .output()
        .expect("run sillon");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// `sillon` that must exit 0.
pub fn ok(data_dir: &Path, args: &[&str]) -> String {
    let run = sillon(data_dir, args);
    assert_eq!(run.code, 0, "sillon {args:?} failed:\n{}\n{}", run.stdout, run.stderr);
    run.stdout
}

/// `init`, `channel add` for every fixture channel, `sync`, annotation import and `process`.
pub fn cli_pipeline(data_dir: &Path) {
    let corpus = corpus();
    let lexicon = fixtures().join("lexicon.tsv");
    ok(data_dir, &["init", "--fixtures", corpus.to_str().unwrap(), "--lexicon", lexicon.to_str().unwrap()]);
    let mut add = vec!["channel", "add"];
    add.extend(CHANNELS);
    ok(data_dir, &add);
    ok(data_dir, &["sync"]);
    ok(data_dir, &["import", "--kind", "annotations", fixtures().join("annotations.jsonl").to_str().unwrap()]);
    ok(data_dir, &["process"]);
}
