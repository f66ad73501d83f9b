//! Service configuration.
//!
//! One TOML file; every key may be overridden by an environment variable
//! named `SAI_<KEY>` in upper case. Relative paths in the file resolve
//! against the file's directory, relative paths from the environment
//! against the working directory.
//!
//! ```toml
//! registry_paths = ["models"]        # SAI_REGISTRY_PATHS, comma separated
//! keyword_table = "keywords.json"    # SAI_KEYWORD_TABLE
//! data_dir = "var/data"              # SAI_DATA_DIR
//! journal_dir = "var/journal"        # SAI_JOURNAL_DIR
//! max_replans = 2                    # SAI_MAX_REPLANS
//! workers = 4                        # SAI_WORKERS
//! max_concurrent_runs = 4            # SAI_MAX_CONCURRENT_RUNS
//! listen = "127.0.0.1:8080"          # SAI_LISTEN
//! external_endpoint = "http://..."   # SAI_EXTERNAL_ENDPOINT, optional
//!
//! [clock]                            # SAI_CLOCK = "simulated" | "wall:<scale>"
//! mode = "simulated"
//! ```

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{ClockMode, ExecutorConfig};
use crate::planner::DEFAULT_MAX_REPLANS;

pub const ENV_PREFIX: &str = "SAI_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for {key}: {message}")]
    InvalidValue { key: String, message: String },
    #[error("configured path {key} = {path} does not exist")]
    MissingPath { key: String, path: PathBuf },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub registry_paths: Vec<PathBuf>,
    pub keyword_table: PathBuf,
    pub data_dir: PathBuf,
    pub journal_dir: PathBuf,
    pub max_replans: u32,
    pub workers: usize,
    pub max_concurrent_runs: usize,
    pub clock: ClockMode,
    pub listen: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external_endpoint: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            registry_paths: vec![PathBuf::from("models")],
            keyword_table: PathBuf::from("keywords.json"),
            data_dir: PathBuf::from("var/data"),
            journal_dir: PathBuf::from("var/journal"),
            max_replans: DEFAULT_MAX_REPLANS,
            workers: 4,
            max_concurrent_runs: 4,
            clock: ClockMode::Simulated,
            listen: "127.0.0.1:8080".into(),
            external_endpoint: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` (when given), applies process environment overrides and
    /// validates the result.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                let mut c = Self::from_toml(&text)?;
                c.rebase(p.parent().unwrap_or(Path::new(".")));
                c
            }
            None => Self::default(),
        };
        config.apply_env(std::env::vars())?;
        config.validate()?;
        Ok(config)
    }

    /// Makes relative paths relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.registry_paths.iter_mut().for_each(fix);
        fix(&mut self.keyword_table);
        fix(&mut self.data_dir);
        fix(&mut self.journal_dir);
    }

    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (key, value) in vars {
            let Some(name) = key.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let value = value.as_ref();
            let number = |k: &str| value.trim().parse::<u64>().map_err(|e| invalid(k, e.to_string()));
            match name {
                "REGISTRY_PATHS" => {
                    self.registry_paths = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(PathBuf::from)
                        .collect();
                }
                "KEYWORD_TABLE" => self.keyword_table = value.into(),
                "DATA_DIR" => self.data_dir = value.into(),
                "JOURNAL_DIR" => self.journal_dir = value.into(),
                "MAX_REPLANS" => {
                    self.max_replans = u32::try_from(number("max_replans")?)
                        .map_err(|e| invalid("max_replans", e.to_string()))?
                }
                "WORKERS" => self.workers = number("workers")? as usize,
                "MAX_CONCURRENT_RUNS" => self.max_concurrent_runs = number("max_concurrent_runs")? as usize,
                "LISTEN" => self.listen = value.to_string(),
                "EXTERNAL_ENDPOINT" => {
                    self.external_endpoint = (!value.is_empty()).then(|| value.to_string());
                }
                "CLOCK" => self.clock = parse_clock(value)?,
                // SAI_CONFIG and SAI_LOG are read by the command line, not here.
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.registry_paths.is_empty() {
            return Err(invalid("registry_paths", "at least one path is required"));
        }
        for p in &self.registry_paths {
            if !p.exists() {
                return Err(ConfigError::MissingPath {
                    key: "registry_paths".into(),
                    path: p.clone(),
                });
            }
        }
        if !self.keyword_table.is_file() {
            return Err(ConfigError::MissingPath {
                key: "keyword_table".into(),
                path: self.keyword_table.clone(),
            });
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.max_concurrent_runs == 0 {
            return Err(invalid("max_concurrent_runs", "must be at least 1"));
        }
        if let ClockMode::Wall { scale } = self.clock {
            if !scale.is_finite() || scale < 0.0 {
                return Err(invalid("clock", "wall scale must be a finite non-negative number"));
            }
        }
        self.listen_addr()?;
        Ok(())
    }

    pub fn listen_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.listen.parse().map_err(|e: std::net::AddrParseError| invalid("listen", e.to_string()))
    }

    pub fn executor(&self) -> ExecutorConfig {
        ExecutorConfig {
            workers: self.workers,
            clock: self.clock,
        }
    }
}

fn parse_clock(value: &str) -> Result<ClockMode, ConfigError> {
    match value.trim().split_once(':') {
        None if value.trim() == "simulated" => Ok(ClockMode::Simulated),
        None if value.trim() == "wall" => Ok(ClockMode::Wall { scale: 1.0 }),
        Some(("wall", scale)) => scale
            .parse()
            .map(|scale| ClockMode::Wall { scale })
            .map_err(|_| invalid("clock", format!("bad wall scale {scale:?}"))),
        _ => Err(invalid("clock", format!("expected simulated or wall:<scale>, got {value:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_defaults() {
        let c = Config::from_toml(
            r#"
            registry_paths = ["a", "b"]
            max_replans = 0
            [clock]
            mode = "wall"
            scale = 0.5
            "#,
        )
        .unwrap();
        assert_eq!(c.registry_paths.len(), 2);
        assert_eq!(c.max_replans, 0);
        assert_eq!(c.clock, ClockMode::Wall { scale: 0.5 });
        assert_eq!(c.workers, 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Config::from_toml("colour = 1"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn environment_overrides_file() {
        let mut c = Config::from_toml("workers = 2").unwrap();
        c.apply_env([
            ("SAI_WORKERS", "8"),
            ("SAI_REGISTRY_PATHS", "x, y"),
            ("SAI_CLOCK", "wall:0.25"),
            ("SAI_EXTERNAL_ENDPOINT", "http://h/complete"),
            ("HOME", "/root"),
        ])
        .unwrap();
        assert_eq!(c.workers, 8);
        assert_eq!(c.registry_paths, [PathBuf::from("x"), PathBuf::from("y")]);
        assert_eq!(c.clock, ClockMode::Wall { scale: 0.25 });
        assert_eq!(c.external_endpoint.as_deref(), Some("http://h/complete"));
        assert!(c.apply_env([("SAI_MAX_REPLANS", "-1")]).is_err());
        assert!(c.apply_env([("SAI_CLOCK", "sundial")]).is_err());
    }

    #[test]
    fn validation_requires_existing_paths() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Config::default();
        c.rebase(dir.path());
        assert!(matches!(c.validate(), Err(ConfigError::MissingPath { .. })));
        std::fs::create_dir(dir.path().join("models")).unwrap();
        std::fs::write(dir.path().join("keywords.json"), "{}").unwrap();
        c.validate().unwrap();
        c.workers = 0;
        assert!(c.validate().is_err());
    }
}
