//! TOML configuration shared by the CLI and the HTTP service.
//!
//! ```toml
//! [bm25]
//! k1 = 1.2
//!
//! [expansion]
//! profile_size = 100
//!
//! [summarizer]
//! summary_length = 10
//!
//! [service]
//! port = 8080
//! ```
//!
//! Every key is optional. `SCISUMM_CONFIG` names the file to read when no
//! path is given explicitly and `SCISUMM_PORT` overrides `service.port`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::Bm25Config;
use crate::ingest::DedupeConfig;
use crate::query::{ExpansionConfig, FixedPointConfig, KeyphraseConfig, QueryConfig, VerbosityConfig};
use crate::summarizer::CeConfig;

pub const CONFIG_ENV: &str = "SCISUMM_CONFIG";
pub const PORT_ENV: &str = "SCISUMM_PORT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for {var}: {value:?}")]
    Env { var: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Snapshot the service loads at startup.
    pub snapshot: Option<PathBuf>,
    pub cache_capacity: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { bind: "127.0.0.1".into(), port: 8080, snapshot: None, cache_capacity: 256 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub batch_size: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { batch_size: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bm25: Bm25Config,
    pub expansion: ExpansionConfig,
    pub verbosity: VerbosityConfig,
    pub keyphrase: KeyphraseConfig,
    pub fixedpoint: FixedPointConfig,
    pub dedupe: DedupeConfig,
    pub summarizer: CeConfig,
    pub service: ServiceConfig,
    pub eval: EvalConfig,
}

impl Config {
    pub fn query(&self) -> QueryConfig {
        QueryConfig {
            expansion: self.expansion,
            verbosity: self.verbosity,
            keyphrase: self.keyphrase,
            fixedpoint: self.fixedpoint,
        }
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let cfg = Self::parse(&text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })?;
        cfg.summarizer
            .validate()
            .map_err(|e| ConfigError::Parse { path: path.into(), message: e.to_string() })?;
        Ok(cfg)
    }

    /// Loads `explicit`, else the file named by `SCISUMM_CONFIG`, else the
    /// defaults, then applies `SCISUMM_PORT`. `env` looks variables up so
    /// tests need not touch the process environment.
    pub fn resolve(explicit: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let from_env = env(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        let mut cfg = match explicit.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::load(&p)?,
            None => Self::default(),
        };
        if let Some(port) = env(PORT_ENV) {
            cfg.service.port = port.trim().parse().map_err(|_| ConfigError::Env { var: PORT_ENV, value: port })?;
        }
        Ok(cfg)
    }

    pub fn from_process_env(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        Self::resolve(explicit, |k| std::env::var(k).ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn defaults_match_documented_values() {
        let c = Config::default();
        assert_eq!(c.query().expansion.top_docs, 10);
        assert_eq!(c.query().expansion.profile_size, 100);
        assert_eq!(c.query().verbosity.threshold, 5);
        assert_eq!(c.query().keyphrase.count, 15);
        assert_eq!(c.query().fixedpoint.tol, 1e-6);
        assert_eq!(c.query().fixedpoint.max_iters, 50);
        assert_eq!(c.summarizer.summary_length, 10);
        assert_eq!(c.summarizer.sample_size, 500);
        assert_eq!(c.eval.batch_size, 24);
        assert_eq!(c.dedupe.title_threshold, 0.9);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c = Config::parse("[expansion]\nprofile_size = 50\n[summarizer]\nseed = 9\n[bm25]\nk1 = 2.0\n").unwrap();
        assert_eq!(c.query().expansion.profile_size, 50);
        assert_eq!(c.query().expansion.top_docs, 10);
        assert_eq!(c.summarizer.seed, 9);
        assert_eq!(c.summarizer.summary_length, 10);
        assert_eq!(c.bm25.k1, 2.0);
        assert_eq!(c.bm25.b, 0.75);
    }

    #[test]
    fn env_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[service]\nport = 9000\ncache_capacity = 3\n").unwrap();
        let vars: HashMap<&str, String> =
            [(CONFIG_ENV, path.display().to_string()), (PORT_ENV, "9100".into())].into();
        let c = Config::resolve(None, |k| vars.get(k).cloned()).unwrap();
        assert_eq!(c.service.port, 9100);
        assert_eq!(c.service.cache_capacity, 3);

        let c = Config::resolve(Some(&path), |_| None).unwrap();
        assert_eq!(c.service.port, 9000);
        assert!(matches!(Config::resolve(None, |k| (k == PORT_ENV).then(|| "x".into())), Err(ConfigError::Env { .. })));
    }

    #[test]
    fn invalid_summarizer_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[summarizer]\nelite_fraction = 1.5\n").unwrap();
        assert!(matches!(Config::load(&path), Err(ConfigError::Parse { .. })));
        std::fs::write(&path, "[nonsense]\nx = 1\n").unwrap();
        assert!(Config::load(&path).is_err());
    }
}
