//! `sillon.toml`, the data directory's configuration file.
//!
//! ```toml
//! bind = "127.0.0.1:8080"
//! author_salt = "3f9c..."
//! lexicon = "/path/to/lexicon.tsv"        # optional
//! abbreviations = "/path/to/abbrev.txt"   # optional, replaces the built-in list
//! cors_origin = "http://localhost:5173"    # optional, any origin when absent
//!
//! [provider]
//! kind = "fixture"                          # or "live"
//! fixtures_dir = "/path/to/fixtures"
//! api_base = "https://www.googleapis.com/youtube/v3"
//! captions_base = "https://www.youtube.com"
//! caption_lang = "fr"
//! requests_per_s = 5.0
//! parallelism = 4
//!
//! [restoration]
//! pause_threshold_s = 1.25
//! enabled = true
//!
//! [training]
//! train_fraction = 0.8
//! stratified = true
//! seed = 0
//! learning_rate = 0.5
//! epochs = 200
//! l2_penalty = 1e-4
//! class_weighting = "none"                 # or "inverse_frequency"
//! ```
//!
//! Relative paths are resolved against the data directory.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sillon_core::classify::{ClassWeighting, SplitConfig, TrainConfig};
use sillon_core::lexicon::KeywordLexicon;
use sillon_core::text::{Abbreviations, RestorationConfig};

use crate::ingest::{FixtureProvider, LiveConfig, LiveProvider, Provider, ProviderError, SyncOptions};

pub const CONFIG_FILE: &str = "sillon.toml";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("no config at {0} (run `sillon init` first)")]
    Missing(PathBuf),
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Fixture,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub fixtures_dir: Option<PathBuf>,
    pub api_base: Option<String>,
    pub captions_base: Option<String>,
    pub caption_lang: Option<String>,
    pub requests_per_s: f64,
    pub parallelism: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Fixture,
            fixtures_dir: None,
            api_base: None,
            captions_base: None,
            caption_lang: None,
            requests_per_s: 5.0,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestorationSettings {
    pub pause_threshold_s: f64,
    pub enabled: bool,
}

impl Default for RestorationSettings {
    fn default() -> Self {
        let d = RestorationConfig::default();
        Self { pause_threshold_s: d.pause_threshold_s, enabled: d.enabled }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSettings {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2_penalty: f64,
    pub class_weighting: ClassWeighting,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        let s = SplitConfig::default();
        let t = TrainConfig::default();
        Self {
            train_fraction: s.train_fraction,
            stratified: s.stratified,
            seed: t.seed,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            l2_penalty: t.l2_penalty,
            class_weighting: t.class_weighting,
        }
    }
}

impl TrainingSettings {
    /// Split and train configs; `seed` overrides both seeds.
    pub fn configs(&self, seed: Option<u64>, weighting: Option<ClassWeighting>) -> (SplitConfig, TrainConfig) {
        let seed = seed.unwrap_or(self.seed);
        (
            SplitConfig { train_fraction: self.train_fraction, seed, stratified: self.stratified },
            TrainConfig {
                learning_rate: self.learning_rate,
                epochs: self.epochs,
                l2_penalty: self.l2_penalty,
                class_weighting: weighting.unwrap_or(self.class_weighting),
                seed,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(default = "default_bind")]
    pub bind: String,
    pub author_salt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abbreviations: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cors_origin: Option<String>,
    #[serde(default)]
    pub provider: ProviderConfig,
    #[serde(default)]
    pub restoration: RestorationSettings,
    #[serde(default)]
    pub training: TrainingSettings,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

/// Fresh random salt for author pseudonyms.
pub fn random_salt() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

impl Config {
    pub fn new(author_salt: String) -> Self {
        Self {
            bind: default_bind(),
            author_salt,
            lexicon: None,
            abbreviations: None,
            cors_origin: None,
            provider: ProviderConfig::default(),
            restoration: RestorationSettings::default(),
            training: TrainingSettings::default(),
        }
    }

    pub fn path(data_dir: &Path) -> PathBuf {
        data_dir.join(CONFIG_FILE)
    }

    pub fn load(data_dir: &Path) -> Result<Self, ConfigError> {
        let path = Self::path(data_dir);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ConfigError::Missing(path)),
            Err(source) => return Err(ConfigError::Io { path, source }),
        };
        let config: Config = toml::from_str(&text).map_err(|e| ConfigError::Invalid { path: path.clone(), message: e.to_string() })?;
        config.validate().map_err(|message| ConfigError::Invalid { path, message })?;
        Ok(config)
    }

    pub fn save(&self, data_dir: &Path) -> Result<(), ConfigError> {
        let path = Self::path(data_dir);
        let text = toml::to_string_pretty(self).map_err(|e| ConfigError::Invalid { path: path.clone(), message: e.to_string() })?;
        fs::write(&path, text).map_err(|source| ConfigError::Io { path, source })
    }

    pub fn validate(&self) -> Result<(), String> {
        self.bind_addr()?;
        if self.author_salt.is_empty() {
            return Err("author_salt must be non-empty".into());
        }
        self.restoration_config_with(Abbreviations::empty()).validate().map_err(|e| e.to_string())?;
        if !(self.provider.requests_per_s.is_finite() && self.provider.requests_per_s > 0.0) {
            return Err("provider.requests_per_s must be > 0".into());
        }
        if self.provider.parallelism == 0 {
            return Err("provider.parallelism must be >= 1".into());
        }
        let (_, train) = self.training.configs(None, None);
        train.validate().map_err(|e| e.to_string())?;
        if !(self.training.train_fraction > 0.0 && self.training.train_fraction < 1.0) {
            return Err("training.train_fraction must be in (0, 1)".into());
        }
        Ok(())
    }

    pub fn bind_addr(&self) -> Result<SocketAddr, String> {
        self.bind.parse().map_err(|_| format!("bind `{}` is not a valid address:port", self.bind))
    }

    fn resolve(data_dir: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            data_dir.join(p)
        }
    }

    fn read(data_dir: &Path, p: &Path) -> Result<(PathBuf, String), ConfigError> {
        let path = Self::resolve(data_dir, p);
        fs::read_to_string(&path).map(|t| (path.clone(), t)).map_err(|source| ConfigError::Io { path, source })
    }

    fn restoration_config_with(&self, abbreviations: Abbreviations) -> RestorationConfig {
        RestorationConfig {
            pause_threshold_s: self.restoration.pause_threshold_s,
            abbreviations,
            enabled: self.restoration.enabled,
        }
    }

    pub fn restoration_config(&self, data_dir: &Path) -> Result<RestorationConfig, ConfigError> {
        let abbreviations = match &self.abbreviations {
            Some(p) => Abbreviations::parse(&Self::read(data_dir, p)?.1),
            None => Abbreviations::default(),
        };
        Ok(self.restoration_config_with(abbreviations))
    }

    pub fn lexicon(&self, data_dir: &Path) -> Result<KeywordLexicon, ConfigError> {
        match &self.lexicon {
            Some(p) => {
                let (path, text) = Self::read(data_dir, p)?;
                KeywordLexicon::parse(&text).map_err(|e| ConfigError::Invalid { path, message: e.to_string() })
            }
            None => Ok(KeywordLexicon::new()),
        }
    }

    pub fn sync_options(&self) -> SyncOptions {
        SyncOptions { parallelism: self.provider.parallelism, author_salt: self.author_salt.clone(), ..SyncOptions::default() }
    }

    pub fn provider(&self, data_dir: &Path) -> Result<Arc<dyn Provider>, ConfigError> {
        match self.provider.kind {
            ProviderKind::Fixture => {
                let dir = self.provider.fixtures_dir.as_deref().ok_or_else(|| ConfigError::Invalid {
                    path: Self::path(data_dir),
                    message: "provider.fixtures_dir is required for the fixture provider".into(),
                })?;
                Ok(Arc::new(FixtureProvider::new(Self::resolve(data_dir, dir))))
            }
            ProviderKind::Live => {
                let mut live = LiveConfig::from_env()?;
                if let Some(b) = &self.provider.api_base {
                    live.api_base = b.clone();
                }
                if let Some(b) = &self.provider.captions_base {
                    live.captions_base = b.clone();
                }
                if let Some(l) = &self.provider.caption_lang {
                    live.caption_lang = l.clone();
                }
                live.requests_per_s = self.provider.requests_per_s;
                Ok(Arc::new(LiveProvider::new(live)?))
            }
        }
    }
}
