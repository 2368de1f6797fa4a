use std::collections::HashSet;
use std::path::{Path, PathBuf};

use fairlens_core::audit::BocPublicKey;
use serde::Deserialize;

use crate::auth::Role;

pub const DATA_DIR_ENV: &str = "FAIRLENS_DATA_DIR";
pub const LISTEN_ENV: &str = "FAIRLENS_LISTEN";
/// 365 days.
pub const DEFAULT_AUDIT_FREQUENCY_SECONDS: u64 = 365 * 24 * 3600;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenRole {
    Vendor,
    Auditor,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenEntry {
    pub token: String,
    pub role: TokenRole,
    pub id: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuerEntry {
    pub id: String,
    pub public_key: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    listen: Option<String>,
    data_dir: Option<PathBuf>,
    #[serde(default)]
    default_audit_frequency_seconds: Option<u64>,
    #[serde(default)]
    tokens: Vec<TokenEntry>,
    #[serde(default)]
    issuers: Vec<IssuerEntry>,
}

#[derive(Clone, Debug)]
pub struct RegistryConfig {
    pub listen: String,
    pub data_dir: PathBuf,
    pub default_audit_frequency_seconds: u64,
    pub tokens: Vec<(String, Role)>,
    pub issuers: Vec<(String, BocPublicKey)>,
}

impl RegistryConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            data_dir: data_dir.into(),
            default_audit_frequency_seconds: DEFAULT_AUDIT_FREQUENCY_SECONDS,
            tokens: Vec::new(),
            issuers: Vec::new(),
        }
    }

    pub fn with_token(mut self, token: impl Into<String>, role: Role) -> Self {
        self.tokens.push((token.into(), role));
        self
    }

    pub fn with_issuer(mut self, id: impl Into<String>, key: BocPublicKey) -> Self {
        self.issuers.push((id.into(), key));
        self
    }

    /// Parses TOML, then applies the environment overrides.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with_env(text, |name| std::env::var(name).ok())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn from_toml_with_env(text: &str, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let listen = env(LISTEN_ENV)
            .or(raw.listen)
            .unwrap_or_else(|| "127.0.0.1:8080".to_string());
        let data_dir = env(DATA_DIR_ENV)
            .map(PathBuf::from)
            .or(raw.data_dir)
            .ok_or_else(|| ConfigError::Invalid(format!("data_dir is required (or set {DATA_DIR_ENV})")))?;
        let frequency = raw.default_audit_frequency_seconds.unwrap_or(DEFAULT_AUDIT_FREQUENCY_SECONDS);
        if frequency == 0 {
            return Err(ConfigError::Invalid("default_audit_frequency_seconds must be positive".into()));
        }

        let mut seen = HashSet::new();
        let mut tokens = Vec::with_capacity(raw.tokens.len());
        for entry in raw.tokens {
            if entry.token.is_empty() || entry.id.is_empty() {
                return Err(ConfigError::Invalid("tokens need a non-empty token and id".into()));
            }
            if !seen.insert(entry.token.clone()) {
                return Err(ConfigError::Invalid(format!("token for {:?} is listed twice", entry.id)));
            }
            let role = match entry.role {
                TokenRole::Vendor => Role::Vendor(entry.id),
                TokenRole::Auditor => Role::Auditor(entry.id),
            };
            tokens.push((entry.token, role));
        }

        let mut issuers = Vec::with_capacity(raw.issuers.len());
        for entry in raw.issuers {
            let key = BocPublicKey::from_hex(&entry.public_key)
                .map_err(|e| ConfigError::Invalid(format!("issuer {:?}: {e}", entry.id)))?;
            issuers.push((entry.id, key));
        }

        Ok(Self {
            listen,
            data_dir,
            default_audit_frequency_seconds: frequency,
            tokens,
            issuers,
        })
    }
}
