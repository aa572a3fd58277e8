//! Flat engine configuration with layered sources.
//!
//! Precedence, lowest to highest: built-in defaults, TOML config file,
//! `GESTURA_*` environment variables, explicit `key=value` overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gesture::FsmConfig;
use crate::pointer::MapConfig;

/// Prefix for environment overrides, e.g. `GESTURA_CLICK_DIST=0.05`.
pub const ENV_PREFIX: &str = "GESTURA_";

/// Every key accepted in a config file, env var, or `--set` flag.
pub const KEYS: &[&str] = &[
    "click_dist",
    "stable_frames",
    "click_refractory_ms",
    "scroll_deadzone",
    "scroll_gain",
    "margin",
    "screen_w",
    "screen_h",
    "smooth",
    "deadzone_px",
    "rules",
    "backend",
    "weather",
    "weather_fixtures",
    "weather_url",
    "weather_timeout_ms",
    "default_city",
    "screenshot_dir",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl fmt::Display) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Os,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherKind {
    #[default]
    Stub,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    #[serde(flatten)]
    pub fsm: FsmConfig,
    #[serde(flatten)]
    pub map: MapConfig,
    /// Rule table file; the built-in table is used when unset.
    pub rules: Option<PathBuf>,
    pub backend: BackendKind,
    pub weather: WeatherKind,
    /// City fixtures for the stub provider.
    pub weather_fixtures: Option<PathBuf>,
    /// URL template for the HTTP provider; `{city}` is substituted.
    pub weather_url: Option<String>,
    pub weather_timeout_ms: u64,
    /// City used when a temperature question names none.
    pub default_city: Option<String>,
    pub screenshot_dir: String,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            fsm: FsmConfig::default(),
            map: MapConfig::default(),
            rules: None,
            backend: BackendKind::Mock,
            weather: WeatherKind::Stub,
            weather_fixtures: None,
            weather_url: None,
            weather_timeout_ms: 2000,
            default_city: None,
            screenshot_dir: "screenshots".into(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.fsm.validate()?;
        self.map.validate()?;
        if self.weather == WeatherKind::Http && self.weather_url.is_none() {
            return Err(ConfigError::invalid(
                "weather_url",
                "required when weather = \"http\"",
            ));
        }
        if self.weather_timeout_ms == 0 {
            return Err(ConfigError::invalid("weather_timeout_ms", "must be > 0"));
        }
        Ok(())
    }

    /// Effective configuration as TOML, for echoing at startup.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# unprintable config: {e}\n"))
    }
}

/// Accumulates config layers and resolves them into an [`EngineConfig`].
#[derive(Debug, Clone, Default)]
pub struct ConfigLoader {
    table: toml::Table,
}

impl ConfigLoader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn file(mut self, path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        for (key, value) in table {
            self.insert(&key, value)?;
        }
        Ok(self)
    }

    /// Applies every `GESTURA_<KEY>` variable from `vars`.
    pub fn env(mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        for (name, value) in vars {
            if let Some(key) = name.strip_prefix(ENV_PREFIX) {
                let key = key.to_ascii_lowercase();
                self.insert(&key, parse_scalar(&value))?;
            }
        }
        Ok(self)
    }

    pub fn set(mut self, key: &str, value: &str) -> Result<Self, ConfigError> {
        self.insert(key, parse_scalar(value))?;
        Ok(self)
    }

    /// Parses a `key=value` override.
    pub fn set_pair(self, pair: &str) -> Result<Self, ConfigError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax(format!("expected key=value, got `{pair}`")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    pub fn build(&self) -> Result<EngineConfig, ConfigError> {
        let cfg: EngineConfig = self
            .table
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: toml::Value) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.table.insert(key.to_string(), value);
        Ok(())
    }
}

/// Interprets a flag or env value as a TOML scalar, falling back to a plain
/// string so that `backend=mock` needs no quoting.
fn parse_scalar(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
