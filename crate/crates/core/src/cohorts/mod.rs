//! User cohorts: interest signatures, clustering with silhouette-based model
//! selection, and group-versus-population deviation profiles.

mod agglomerative;
mod gmm;
mod kmeans;
mod profiles;
mod score;
mod tags;

use serde::{Deserialize, Serialize};

pub use agglomerative::{agglomerative, Linkage};
pub use gmm::{gmm_em, GmmOptions};
pub use kmeans::{kmeans, KMeansOptions};
pub use profiles::{
    activity_clusters, distribution_deviation, group_deviation_profile, mean_profile, ActivityClusters, Daypart,
    DeviationProfile, DAY_WINDOW,
};
pub use score::{adjusted_rand_index, silhouette};
pub use tags::{build_signatures, top_n_tags, InterestSignature, TagEncoding};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Kmeans,
    Gmm,
    Agglomerative,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Gmm => "gmm",
            Algorithm::Agglomerative => "agglomerative",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(Algorithm::Kmeans),
            "gmm" => Ok(Algorithm::Gmm),
            "agglo" | "agglomerative" | "hierarchical" => Ok(Algorithm::Agglomerative),
            other => Err(Error::InvalidInput(format!("unknown clustering algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub algorithm: Algorithm,
    pub k: usize,
    pub labels: Vec<usize>,
    /// Cluster centroids (k-means, agglomerative) or component means (GMM).
    pub centroids: Vec<Vec<f64>>,
    pub silhouette: Option<f64>,
    pub seed: u64,
    /// Per-iteration objective: k-means inertia or GMM regularised log-likelihood.
    pub trace: Vec<f64>,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_points(x: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::InvalidInput("points must be non-empty vectors".into()));
    }
    if x.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput(
            "points must share a dimension and be finite".into(),
        ));
    }
    Ok(d)
}

/// Centroid of each label in `0..k`; empty clusters get an empty vector.
pub(crate) fn label_means(x: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = x[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in x.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| {
            if c == 0 {
                Vec::new()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

/// One row of the model-selection score table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub silhouette: Option<f64>,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub best: ClusterResult,
    pub table: Vec<ScoreRow>,
}

/// Runs every algorithm and keeps the one with the highest silhouette.
/// Ties keep the earliest algorithm in `algorithms`.
pub fn select_best_clustering(x: &[Vec<f64>], algorithms: &[Algorithm], k: usize, seed: u64) -> Result<Selection> {
    if algorithms.len() < 2 {
        return Err(Error::InvalidInput(
            "model selection needs at least two algorithms".into(),
        ));
    }
    let runs: Vec<Result<ClusterResult>> = {
        use rayon::prelude::*;
        algorithms
            .par_iter()
            .map(|a| {
                let mut r = match a {
                    Algorithm::Kmeans => kmeans(x, k, seed, &KMeansOptions::default()),
                    Algorithm::Gmm => gmm_em(x, k, seed, &GmmOptions::default()),
                    Algorithm::Agglomerative => agglomerative(x, k, Linkage::Average),
                }?;
                r.seed = seed;
                r.silhouette = silhouette(x, &r.labels).ok();
                Ok(r)
            })
            .collect()
    };
    let mut table = Vec::new();
    let mut best: Option<ClusterResult> = None;
    for (a, run) in algorithms.iter().zip(runs) {
        match run {
            Ok(r) => {
                table.push(ScoreRow {
                    algorithm: *a,
                    k,
                    silhouette: r.silhouette,
                    seed,
                    error: None,
                });
                let better = match (&best, r.silhouette) {
                    (_, None) => false,
                    (None, Some(_)) => true,
                    (Some(b), Some(s)) => b.silhouette.is_none_or(|bs| s > bs),
                };
                if better {
                    best = Some(r);
                }
            }
            Err(e) => table.push(ScoreRow {
                algorithm: *a,
                k,
                silhouette: None,
                seed,
                error: Some(e.to_string()),
            }),
        }
    }
    let best = best.ok_or_else(|| Error::Degenerate("no clustering algorithm produced a silhouette score".into()))?;
    Ok(Selection { best, table })
}
