use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KMeansOptions};
use super::score::silhouette;
use super::ClusterResult;
use crate::error::{Error, Result};
use crate::sessions::ActivityProfile;

/// Hours `[start, end)` whose centroid mass marks a cluster as daytime.
pub const DAY_WINDOW: (usize, usize) = (8, 20);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Daypart {
    Day,
    Night,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityClusters {
    pub result: ClusterResult,
    /// Day/night label per cluster id.
    pub parts: Vec<Daypart>,
    /// Set when every profile is identical, so no split is meaningful.
    pub degenerate: bool,
}

/// k-means over 24-hour profiles, each cluster labelled day or night by
/// whether its centroid puts at least half its mass inside [`DAY_WINDOW`].
pub fn activity_clusters(profiles: &[ActivityProfile], k: usize, seed: u64) -> Result<ActivityClusters> {
    if profiles.len() < k {
        return Err(Error::InvalidInput(format!(
            "activity clustering needs at least k={k} users, got {}",
            profiles.len()
        )));
    }
    let x: Vec<Vec<f64>> = profiles.iter().map(|p| p.x.to_vec()).collect();
    let degenerate = x.iter().all(|p| p == &x[0]);
    let mut result = kmeans(&x, k, seed, &KMeansOptions::default())?;
    result.silhouette = if degenerate {
        None
    } else {
        silhouette(&x, &result.labels).ok()
    };
    let parts = result
        .centroids
        .iter()
        .map(|c| {
            let total: f64 = c.iter().sum();
            let day: f64 = c[DAY_WINDOW.0..DAY_WINDOW.1].iter().sum();
            if total > 0.0 && day >= 0.5 * total {
                Daypart::Day
            } else {
                Daypart::Night
            }
        })
        .collect();
    Ok(ActivityClusters {
        result,
        parts,
        degenerate,
    })
}

/// Mean of the non-empty profiles; all zeros when there are none.
pub fn mean_profile<'a>(profiles: impl IntoIterator<Item = &'a ActivityProfile>) -> [f64; 24] {
    let mut acc = [0.0; 24];
    let mut n = 0usize;
    for p in profiles.into_iter().filter(|p| !p.is_empty()) {
        n += 1;
        for (a, v) in acc.iter_mut().zip(&p.x) {
            *a += v;
        }
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationProfile {
    pub group: String,
    /// Group mean minus overall mean, per hour.
    pub hourly: [f64; 24],
    /// Session-interval density deviation on caller-supplied bins.
    pub meso: Option<Vec<f64>>,
    /// Session-length density deviation.
    pub micro_n: Option<Vec<f64>>,
    /// Intra-session gap density deviation.
    pub micro_dt: Option<Vec<f64>>,
}

/// Hourly deviation of a group's mean profile from the overall mean profile.
pub fn group_deviation_profile(
    group: &str,
    members: &[&ActivityProfile],
    overall: &[f64; 24],
) -> Result<DeviationProfile> {
    if members.iter().all(|p| p.is_empty()) {
        return Err(Error::InsufficientData(format!("group {group:?} has no activity")));
    }
    let m = mean_profile(members.iter().copied());
    let mut hourly = [0.0; 24];
    for ((h, g), o) in hourly.iter_mut().zip(m).zip(overall) {
        *h = g - o;
    }
    Ok(DeviationProfile {
        group: group.to_string(),
        hourly,
        meso: None,
        micro_n: None,
        micro_dt: None,
    })
}

fn proportions(samples: &[f64], edges: &[f64]) -> Vec<f64> {
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    for &s in samples {
        if s < edges[0] || s > edges[nb] {
            continue;
        }
        let i = edges.partition_point(|&e| e <= s).saturating_sub(1).min(nb - 1);
        counts[i] += 1;
    }
    let total: usize = counts.iter().sum();
    counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect()
}

/// Per-bin difference of in-range sample proportions, group minus overall.
/// Bins are `[e_i, e_{i+1})` with the last bin closed.
pub fn distribution_deviation(group: &[f64], overall: &[f64], edges: &[f64]) -> Result<Vec<f64>> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("bin edges must be strictly increasing".into()));
    }
    let g = proportions(group, edges);
    let o = proportions(overall, edges);
    Ok(g.into_iter().zip(o).map(|(a, b)| a - b).collect())
}
