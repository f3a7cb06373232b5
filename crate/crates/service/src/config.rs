//! Service configuration: an optional TOML file, then `TRACKMATE_*`
//! environment variables on top.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_BACKEND_URL: &str = "TRACKMATE_BACKEND_URL";
pub const ENV_API_KEY: &str = "TRACKMATE_API_KEY";
pub const ENV_MODEL: &str = "TRACKMATE_MODEL";
pub const ENV_STORE: &str = "TRACKMATE_STORE";
pub const ENV_PLUGIN_CMD: &str = "TRACKMATE_PLUGIN_CMD";

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 100 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// Full chat-completions endpoint URL.
    pub backend_url: Option<String>,
    pub api_key: Option<String>,
    pub model: String,
    /// Scripted mock rules (JSON); takes precedence over `backend_url`.
    pub mock_fixture: Option<PathBuf>,
    pub store_dir: PathBuf,
    pub host: String,
    pub port: u16,
    /// Friendly-producer tone block in the system prompt.
    pub persona: bool,
    /// Shell command for the external genre/theme classifier.
    pub plugin_cmd: Option<String>,
    pub max_upload_bytes: usize,
    /// How long an upload waits for analysis before answering 202.
    pub sync_wait_s: f64,
    /// Concurrent analysis jobs.
    pub workers: usize,
    pub backend_timeout_s: f64,
    pub fetch_timeout_s: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            backend_url: None,
            api_key: None,
            model: "default".into(),
            mock_fixture: None,
            store_dir: PathBuf::from("trackmate-store"),
            host: "127.0.0.1".into(),
            port: 8080,
            persona: true,
            plugin_cmd: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            sync_wait_s: 10.0,
            workers: std::thread::available_parallelism().map_or(2, |n| n.get()),
            backend_timeout_s: 120.0,
            fetch_timeout_s: 30.0,
        }
    }
}

impl ServiceConfig {
    /// Reads `path` (if given) and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok());
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Toml { path: path.into(), source })
    }

    /// Non-empty variables override the corresponding fields.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        let get = |k: &str| lookup(k).filter(|v| !v.trim().is_empty());
        if let Some(v) = get(ENV_BACKEND_URL) {
            self.backend_url = Some(v);
        }
        if let Some(v) = get(ENV_API_KEY) {
            self.api_key = Some(v);
        }
        if let Some(v) = get(ENV_MODEL) {
            self.model = v;
        }
        if let Some(v) = get(ENV_STORE) {
            self.store_dir = v.into();
        }
        if let Some(v) = get(ENV_PLUGIN_CMD) {
            self.plugin_cmd = Some(v);
        }
    }

    pub fn sync_wait(&self) -> Duration {
        Duration::from_secs_f64(self.sync_wait_s.max(0.0))
    }

    pub fn backend_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.backend_timeout_s.max(0.1))
    }

    pub fn fetch_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.fetch_timeout_s.max(0.1))
    }
}
