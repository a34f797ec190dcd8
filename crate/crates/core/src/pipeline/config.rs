use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::abm::AgentConfig;
use crate::cohorts::{Algorithm, TagEncoding};
use crate::content::DEFAULT_ENTROPY_BINS;
use crate::error::{Error, Result};
use crate::ingest::CountBasis;
use crate::sessions::{ProfileBasis, DEFAULT_THRESHOLD_SECS};
use crate::temporal::{FitMethod, DEFAULT_LOG_BINS};

/// Every setting of every stage. Each field has a default, so a config file
/// only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output: PathBuf,
    pub input: InputConfig,
    pub ingest: IngestConfig,
    pub sessions: SessionConfig,
    pub temporal: TemporalConfig,
    pub content: ContentConfig,
    pub cluster: ClusterConfig,
    pub simulate: SimulateConfig,
    pub abm: AgentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output: PathBuf::from("out"),
            input: InputConfig::default(),
            ingest: IngestConfig::default(),
            sessions: SessionConfig::default(),
            temporal: TemporalConfig::default(),
            content: ContentConfig::default(),
            cluster: ClusterConfig::default(),
            simulate: SimulateConfig::default(),
            abm: AgentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Mind,
    Jsonl,
    Canonical,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mind" => Ok(InputFormat::Mind),
            "jsonl" => Ok(InputFormat::Jsonl),
            "canonical" => Ok(InputFormat::Canonical),
            other => Err(Error::InvalidInput(format!("unknown input format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    pub format: InputFormat,
    /// MIND behaviors TSV.
    pub behaviors: Option<PathBuf>,
    /// MIND news TSV.
    pub news: Option<PathBuf>,
    /// Generic events JSONL.
    pub events: Option<PathBuf>,
    /// Canonical corpus directory.
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    /// Keep users with strictly more interactions than this; 0 keeps everyone.
    pub min_interactions: usize,
    pub count_basis: CountBasis,
    pub dedup: bool,
    /// Replace impression histories by the user's earlier clicks.
    pub realtime_history: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            min_interactions: 0,
            count_basis: CountBasis::default(),
            dedup: true,
            realtime_history: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionConfig {
    pub threshold_secs: i64,
    /// Derive the threshold from the data instead of `threshold_secs`.
    pub adaptive: bool,
    /// Added to epoch seconds before taking the hour of day.
    pub utc_offset_secs: i64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            threshold_secs: DEFAULT_THRESHOLD_SECS,
            adaptive: false,
            utc_offset_secs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemporalConfig {
    pub period_hours: f64,
    pub harmonics: usize,
    pub profile_basis: ProfileBasis,
    pub interval_method: FitMethod,
    pub micro_method: FitMethod,
    pub bins: usize,
    /// Search band for the short/long gap valley, minutes.
    pub band_minutes: (f64, f64),
    /// Fixed upper limit for interval fits, minutes; unset uses the detected valley.
    pub interval_cutoff_minutes: Option<f64>,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        TemporalConfig {
            period_hours: 24.0,
            harmonics: 3,
            profile_basis: ProfileBasis::SessionStart,
            interval_method: FitMethod::Mle,
            micro_method: FitMethod::Logls,
            bins: DEFAULT_LOG_BINS,
            band_minutes: (360.0, 540.0),
            interval_cutoff_minutes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentConfig {
    /// Embedding file; unset hashes article titles instead.
    pub embeddings: Option<PathBuf>,
    pub hash_dim: usize,
    pub entropy_bins: Vec<(f64, f64)>,
    /// Inclusive exposure-length band.
    pub exposure_len: Option<(usize, usize)>,
    /// Build one pseudo-impression per user from its clicks.
    pub proxy_exposure: bool,
    pub joint_grid_points: usize,
}

impl Default for ContentConfig {
    fn default() -> Self {
        ContentConfig {
            embeddings: None,
            hash_dim: 64,
            entropy_bins: DEFAULT_ENTROPY_BINS.to_vec(),
            exposure_len: None,
            proxy_exposure: false,
            joint_grid_points: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterBy {
    #[default]
    Tags,
    Activity,
}

impl std::str::FromStr for ClusterBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tags" => Ok(ClusterBy::Tags),
            "activity" => Ok(ClusterBy::Activity),
            other => Err(Error::InvalidInput(format!("unknown clustering basis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub by: ClusterBy,
    pub algorithms: Vec<Algorithm>,
    pub k: usize,
    pub n_tags: usize,
    pub encoding: TagEncoding,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            by: ClusterBy::Tags,
            algorithms: vec![Algorithm::Kmeans, Algorithm::Gmm, Algorithm::Agglomerative],
            k: 4,
            n_tags: 3,
            encoding: TagEncoding::RankWeighted,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub agents: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { agents: 1000 }
    }
}

impl RunConfig {
    /// Range and consistency checks that do not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.sessions.threshold_secs <= 0 {
            return bad(format!(
                "sessions.threshold_secs must be positive, got {}",
                self.sessions.threshold_secs
            ));
        }
        let t = &self.temporal;
        if !(t.period_hours > 0.0) || t.harmonics == 0 || t.bins < 2 {
            return bad("temporal: period_hours > 0, harmonics >= 1 and bins >= 2 required".into());
        }
        if !(t.band_minutes.0 > 0.0 && t.band_minutes.0 < t.band_minutes.1) {
            return bad(format!(
                "temporal.band_minutes must satisfy 0 < lo < hi, got {:?}",
                t.band_minutes
            ));
        }
        if t.interval_cutoff_minutes.is_some_and(|c| !(c > 0.0)) {
            return bad("temporal.interval_cutoff_minutes must be positive".into());
        }
        let c = &self.content;
        if c.hash_dim < 8 {
            return bad(format!("content.hash_dim must be at least 8, got {}", c.hash_dim));
        }
        if c.entropy_bins.is_empty() || c.entropy_bins.iter().any(|(lo, hi)| !(lo < hi)) {
            return bad("content.entropy_bins must be non-empty [lo, hi) pairs with lo < hi".into());
        }
        if let Some((lo, hi)) = c.exposure_len {
            if lo > hi {
                return bad(format!("content.exposure_len [{lo}, {hi}] is empty"));
            }
        }
        let k = &self.cluster;
        if k.k < 1 || k.n_tags < 1 || k.algorithms.is_empty() {
            return bad("cluster: k >= 1, n_tags >= 1 and at least one algorithm required".into());
        }
        if self.simulate.agents == 0 {
            return bad("simulate.agents must be at least 1".into());
        }
        self.abm.validate()
    }
}
