//! Service configuration: one TOML document, with `ITIL_FORGE_LISTEN` and
//! `ITIL_FORGE_DATA_DIR` overriding the listen address and data directory.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use itil_forge::lifecycle::GateChecklist;
use itil_forge::notifications::CopyAddresses;
use itil_forge::sla::SlaConfig;
use itil_forge::EngineConfig;

pub const ENV_LISTEN: &str = "ITIL_FORGE_LISTEN";
pub const ENV_DATA_DIR: &str = "ITIL_FORGE_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SinkKind {
    Memory,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkConfig {
    pub sink: SinkKind,
    /// Output file for the file sink, relative to the data directory.
    #[serde(default = "default_sink_path")]
    pub path: PathBuf,
}

fn default_sink_path() -> PathBuf {
    PathBuf::from("notifications.jsonl")
}

impl Default for SinkConfig {
    fn default() -> Self {
        Self {
            sink: SinkKind::File,
            path: default_sink_path(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub data_dir: PathBuf,
    /// Bearer token → actor name.
    pub tokens: BTreeMap<String, String>,
    pub min_quotations: usize,
    pub sla: SlaConfig,
    /// Evidence required per phase; phases left out keep the defaults.
    pub gates: Option<GateChecklist>,
    pub notifications: SinkConfig,
    pub copies: CopyAddresses,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            tokens: BTreeMap::new(),
            min_quotations: 2,
            sla: SlaConfig::default(),
            gates: None,
            notifications: SinkConfig::default(),
            copies: CopyAddresses::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads the file (defaults when `None`), applies env overrides and validates.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text).map_err(|message| ConfigError::Parse {
                    path: p.to_path_buf(),
                    message,
                })?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok());
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(listen) = get(ENV_LISTEN).filter(|v| !v.is_empty()) {
            self.listen = listen;
        }
        if let Some(dir) = get(ENV_DATA_DIR).filter(|v| !v.is_empty()) {
            self.data_dir = PathBuf::from(dir);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.listen_addr()?;
        if self.data_dir.as_os_str().is_empty() {
            return Err(ConfigError::Invalid("data_dir is empty".into()));
        }
        if self.tokens.is_empty() {
            return Err(ConfigError::Invalid("at least one entry in [tokens] is required".into()));
        }
        if let Some((token, _)) = self.tokens.iter().find(|(t, a)| t.trim().is_empty() || a.trim().is_empty()) {
            return Err(ConfigError::Invalid(format!("token entry {token:?} has an empty token or actor")));
        }
        self.engine_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn listen_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.listen
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("listen {:?} is not host:port", self.listen)))
    }

    pub fn engine_config(&self) -> EngineConfig {
        let mut checklist = GateChecklist::default();
        if let Some(custom) = &self.gates {
            for (phase, kinds) in &custom.0 {
                checklist.0.insert(*phase, kinds.clone());
            }
        }
        EngineConfig {
            checklist,
            min_quotations: self.min_quotations,
            sla: self.sla.clone(),
            copies: self.copies.clone(),
        }
    }

    pub fn log_path(&self) -> PathBuf {
        self.data_dir.join("events.jsonl")
    }

    pub fn sink_path(&self) -> PathBuf {
        self.data_dir.join(&self.notifications.path)
    }
}
