use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{sha256_hex, write_atomic};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the manifest's directory where possible.
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            path: path.into(),
            sha256: sha256_hex(bytes),
        }
    }

    pub fn of_file(path: &Path) -> Result<Self> {
        Ok(Self::of_bytes(path.display().to_string(), &std::fs::read(path)?))
    }
}

/// Provenance of one command invocation. Everything random derives from
/// `seed`, and `config` embeds the exact configuration text, so a manifest
/// is sufficient to reproduce its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Hash of the identity fields below; written into every output file.
    pub run_id: String,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub config_sha256: Option<String>,
    pub config: Option<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub created_unix: u64,
}

#[derive(Serialize)]
struct Identity<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    seed: Option<u64>,
    alpha: Option<f64>,
    config_sha256: Option<&'a str>,
    inputs: &'a [FileDigest],
}

fn now_unix() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "homcert".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            run_id: String::new(),
            seed: None,
            alpha: None,
            config_sha256: None,
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            created_unix: now_unix(),
        }
    }

    pub fn with_config(mut self, text: &str) -> Self {
        self.config_sha256 = Some(sha256_hex(text.as_bytes()));
        self.config = Some(text.to_string());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_inputs(mut self, inputs: Vec<FileDigest>) -> Self {
        self.inputs = inputs;
        self
    }

    /// Fixes `run_id` from the identity fields. Call before rendering outputs.
    pub fn seal(mut self) -> Self {
        let id = Identity {
            tool: &self.tool,
            version: &self.version,
            command: &self.command,
            seed: self.seed,
            alpha: self.alpha,
            config_sha256: self.config_sha256.as_deref(),
            inputs: &self.inputs,
        };
        self.run_id = sha256_hex(&serde_json::to_vec(&id).expect("identity serializes"));
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        self.write_as(dir, MANIFEST_FILE)
    }

    pub fn write_as(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        write_atomic(&path, self.to_json()?.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let m: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.tool != "homcert" {
            return Err(Error::Config(format!("{} is not a homcert manifest", path.display())));
        }
        Ok(m)
    }
}
