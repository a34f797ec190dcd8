//! File-level analysis stages.
//!
//! Each stage reads a [`RunConfig`], writes its outputs into the configured
//! output directory and returns a serializable summary. Every output file `f`
//! gets a sidecar `f.meta.json` holding the tool version, the SHA-256 of the
//! full configuration, and the SHA-256 of `f` itself.

mod cluster;
mod config;
mod content;
mod ingest;
mod simulate;
mod temporal;

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use cluster::{run_cluster, ClusterSummary};
pub use config::{
    ClusterBy, ClusterConfig, ContentConfig, IngestConfig, InputConfig, InputFormat, RunConfig, SessionConfig,
    SimulateConfig, TemporalConfig,
};
pub use content::{run_content, ContentSummary};
pub use ingest::{load_input, run_ingest, IngestSummary};
pub use simulate::{run_simulate, SimulateSummary};
pub use temporal::{run_temporal, TemporalSummary};

use crate::error::{Error, Result};
use crate::ingest::Corpus;

pub const TOOL_NAME: &str = "newsrhythm";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the JSON serialization of `cfg`, hex encoded.
pub fn config_hash(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    tool: &'a str,
    version: &'a str,
    config_hash: &'a str,
    file: &'a str,
    sha256: String,
}

/// Output directory that records a metadata sidecar for every file written.
pub struct OutputDir {
    dir: PathBuf,
    config_hash: String,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(cfg: &RunConfig) -> Result<Self> {
        let dir = cfg.output.clone();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(OutputDir {
            dir,
            config_hash: config_hash(cfg),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Names of the files written so far, sidecars excluded.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Writes the sidecar of a file already present in the directory.
    pub fn seal(&mut self, name: &str) -> Result<()> {
        let path = self.path(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let meta = Meta {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            config_hash: &self.config_hash,
            file: name,
            sha256: hex::encode(Sha256::digest(&bytes)),
        };
        write_json_file(&self.path(&format!("{name}.meta.json")), &meta)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json_file(&self.path(name), value)?;
        self.seal(name)
    }

    /// Runs `write` on the file's path, then seals it.
    pub fn write_with(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        write(&self.path(name))?;
        self.seal(name)
    }
}

fn write_json_file<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A sub-result that may fail without failing the stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl<T> From<Result<T>> for Outcome<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome {
                result: Some(v),
                error: None,
            },
            Err(e) => Outcome {
                result: None,
                error: Some(e.to_string()),
            },
        }
    }
}

pub(crate) fn require_path(path: Option<&PathBuf>, key: &str) -> Result<PathBuf> {
    let p = path.ok_or_else(|| Error::InvalidInput(format!("{key} is required")))?;
    if !p.exists() {
        return Err(Error::InvalidInput(format!(
            "{}: no such file or directory",
            p.display()
        )));
    }
    Ok(p.clone())
}

/// Reads the canonical corpus named by `input.corpus`.
pub fn load_corpus(cfg: &RunConfig) -> Result<Corpus> {
    let dir = require_path(cfg.input.corpus.as_ref(), "input.corpus")?;
    if !dir.is_dir() {
        return Err(Error::InvalidInput(format!(
            "{}: not a corpus directory",
            dir.display()
        )));
    }
    Corpus::read_canonical(&dir)
}
