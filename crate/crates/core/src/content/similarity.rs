use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EmbeddingStore;
use crate::error::{Error, Result};
use crate::ingest::Impression;
use crate::stats::median;

/// Cosine of the angle between `u` and `v`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if !(nu > 0.0) || !(nv > 0.0) {
        return Err(Error::InvalidInput("cosine similarity of a zero vector".into()));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Exposure-by-history cosine similarities; row `i` belongs to exposure `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows.first().map_or(0, Vec::len))
    }
}

/// Why an impression was left out of content analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    EmptyHistory,
    MissingEmbedding(String),
}

pub fn similarity_matrix(
    imp: &Impression,
    store: &EmbeddingStore,
) -> std::result::Result<SimilarityMatrix, SkipReason> {
    if imp.history.is_empty() {
        return Err(SkipReason::EmptyHistory);
    }
    let lookup = |id: &str| {
        store
            .get(id)
            .ok_or_else(|| SkipReason::MissingEmbedding(id.to_string()))
    };
    let history: Vec<&[f64]> = imp
        .history
        .iter()
        .map(|h| lookup(h))
        .collect::<std::result::Result<_, _>>()?;
    let rows = imp
        .exposures
        .iter()
        .map(|e| {
            let ev = lookup(&e.article_id)?;
            // loaded vectors share the store dimension; only zero vectors can fail here
            Ok(history
                .iter()
                .map(|h| cosine_similarity(ev, h).unwrap_or(0.0))
                .collect())
        })
        .collect::<std::result::Result<_, SkipReason>>()?;
    Ok(SimilarityMatrix { rows })
}

/// Shannon entropy in bits of the category distribution of an exposure list.
pub fn exposure_entropy<S: AsRef<str>>(categories: &[S]) -> f64 {
    if categories.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for c in categories {
        *counts.entry(c.as_ref()).or_default() += 1;
    }
    let n = categories.len() as f64;
    let h = -counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

/// Mean Euclidean distance over all unordered pairs; `None` for fewer than two vectors.
pub fn mean_pairwise_distance(vectors: &[&[f64]]) -> Option<f64> {
    let n = vectors.len();
    if n < 2 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += vectors[i]
                .iter()
                .zip(vectors[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
    }
    Some(total / (n * (n - 1) / 2) as f64)
}

/// List-level diversity shared by every exposure of one impression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureDiversity {
    pub entropy: f64,
    pub mean_pair_dist: Option<f64>,
    pub exposure_len: usize,
}

impl ExposureDiversity {
    pub fn new<S: AsRef<str>>(categories: &[S], embeddings: &[&[f64]]) -> Self {
        ExposureDiversity {
            entropy: exposure_entropy(categories),
            mean_pair_dist: mean_pairwise_distance(embeddings),
            exposure_len: categories.len(),
        }
    }
}

/// One row of the feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureFeatures {
    pub impression_id: String,
    pub exposure_index: usize,
    pub clicked: bool,
    /// Maximum similarity to the history (`M`).
    pub max: f64,
    /// Median similarity to the history (`m`).
    pub median: f64,
    /// Exposure-list entropy in bits (`En`).
    pub entropy: f64,
    pub mean_pair_dist: Option<f64>,
    pub exposure_len: usize,
}

pub fn exposure_features(
    impression_id: &str,
    exposure_index: usize,
    row: &[f64],
    diversity: &ExposureDiversity,
    clicked: bool,
) -> Result<ExposureFeatures> {
    if row.is_empty() {
        return Err(Error::InvalidInput("similarity row is empty".into()));
    }
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ExposureFeatures {
        impression_id: impression_id.to_string(),
        exposure_index,
        clicked,
        max,
        median: median(row),
        entropy: diversity.entropy,
        mean_pair_dist: diversity.mean_pair_dist,
        exposure_len: diversity.exposure_len,
    })
}
