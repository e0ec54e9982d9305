//! Service configuration.
//!
//! The config file is plain `key = value` lines; `#` starts a comment.
//! Every key can be overridden by an environment variable named
//! `CLICKRANK_<KEY>` (upper case), e.g. `CLICKRANK_LISTEN=0.0.0.0:9000`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

pub const ENV_PREFIX: &str = "CLICKRANK_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid value for {key}: {value:?}")]
    Value { key: String, value: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("{0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: String,
    pub data_dir: PathBuf,
    pub session_timeout_minutes: u64,
    pub keyword_k: usize,
    pub stopwords_file: Option<PathBuf>,
    pub token_lifetime: Duration,
    /// PBKDF2 rounds for new password digests.
    pub hash_iterations: u32,
    /// Client click timestamps further than this from the server clock are
    /// replaced by server time.
    pub max_clock_skew: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            session_timeout_minutes: 30,
            keyword_k: clickrank_core::text::DEFAULT_KEYWORD_COUNT,
            stopwords_file: None,
            token_lifetime: Duration::from_secs(24 * 3600),
            hash_iterations: 100_000,
            max_clock_skew: Duration::from_secs(5 * 60),
        }
    }
}

impl ServiceConfig {
    /// Defaults, then the file (if any), then `CLICKRANK_*` environment variables.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
            config.apply_text(&text)?;
        }
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_env<I>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (name, value) in vars {
            if let Some(key) = name.strip_prefix(ENV_PREFIX) {
                self.set(&key.to_ascii_lowercase(), value.trim())?;
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::Value { key: key.into(), value: value.into() };
        match key {
            "listen" => self.listen = value.into(),
            "data_dir" => self.data_dir = PathBuf::from(value),
            "session_timeout_minutes" => self.session_timeout_minutes = value.parse().map_err(|_| bad())?,
            "keyword_k" => self.keyword_k = value.parse().map_err(|_| bad())?,
            "stopwords_file" => {
                self.stopwords_file = if value.is_empty() { None } else { Some(PathBuf::from(value)) }
            }
            "token_lifetime_hours" => {
                let hours: f64 = value.parse().map_err(|_| bad())?;
                if !hours.is_finite() || hours <= 0.0 {
                    return Err(bad());
                }
                self.token_lifetime = Duration::from_secs_f64(hours * 3600.0);
            }
            "hash_iterations" => self.hash_iterations = value.parse().map_err(|_| bad())?,
            "max_clock_skew_seconds" => self.max_clock_skew = Duration::from_secs(value.parse().map_err(|_| bad())?),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.keyword_k < 1 {
            return Err(ConfigError::Invalid("keyword_k must be at least 1"));
        }
        if self.session_timeout_minutes == 0 {
            return Err(ConfigError::Invalid("session_timeout_minutes must be positive"));
        }
        if self.hash_iterations == 0 {
            return Err(ConfigError::Invalid("hash_iterations must be positive"));
        }
        Ok(())
    }

    pub fn session_timeout_secs(&self) -> i64 {
        self.session_timeout_minutes as i64 * 60
    }

    pub fn users_path(&self) -> PathBuf {
        self.data_dir.join("users.json")
    }

    pub fn events_path(&self) -> PathBuf {
        self.data_dir.join("events.jsonl")
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.data_dir.join("corpus.json")
    }
}
