//! Session segmentation and session-level statistics.
//!
//! A session is a maximal run of one user's actions in which every
//! consecutive gap is strictly below the threshold. Gaps between sessions are
//! measured from the last action of one session to the first action of the
//! next.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{hour_bin, hour_of_day};

/// Default segmentation threshold, 10 minutes.
pub const DEFAULT_THRESHOLD_SECS: i64 = 600;
/// Clamp range of [`adaptive_threshold`].
pub const ADAPTIVE_MIN_SECS: f64 = 60.0;
pub const ADAPTIVE_MAX_SECS: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub user_id: String,
    pub start: i64,
    pub end: i64,
    pub action_times: Vec<i64>,
    /// Within-session gaps between consecutive actions, seconds.
    pub deltas: Vec<i64>,
}

impl Session {
    fn from_times(user_id: &str, times: &[i64]) -> Self {
        Session {
            user_id: user_id.to_string(),
            start: times[0],
            end: times[times.len() - 1],
            action_times: times.to_vec(),
            deltas: times.windows(2).map(|w| w[1] - w[0]).collect(),
        }
    }

    /// Number of actions.
    pub fn n(&self) -> usize {
        self.action_times.len()
    }
}

/// Gap between two consecutive sessions of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionGap {
    pub user_id: String,
    /// Seconds from the end of one session to the start of the next.
    pub delta_t: i64,
    /// Hour of day at the gap start, `[0, 24)`.
    pub start_hour: f64,
    /// Hour of day at the gap end, `[0, 24)`.
    pub end_hour: f64,
}

/// Splits one user's sorted action times into sessions.
pub fn segment_sessions(user_id: &str, times: &[i64], threshold_secs: i64) -> Result<Vec<Session>> {
    if threshold_secs <= 0 {
        return Err(Error::InvalidInput(format!(
            "session threshold must be positive, got {threshold_secs}"
        )));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] < w[0]) {
        return Err(Error::Unsorted(format!("user {user_id}: {} after {}", w[1], w[0])));
    }
    let mut sessions = Vec::new();
    let mut begin = 0;
    for i in 1..=times.len() {
        if i == times.len() || times[i] - times[i - 1] >= threshold_secs {
            if i > begin {
                sessions.push(Session::from_times(user_id, &times[begin..i]));
            }
            begin = i;
        }
    }
    Ok(sessions)
}

/// Segments every user; output ordered by user id then time.
pub fn segment_all(times_by_user: &BTreeMap<String, Vec<i64>>, threshold_secs: i64) -> Result<Vec<Session>> {
    let per_user: Vec<Vec<Session>> = times_by_user
        .par_iter()
        .map(|(u, t)| segment_sessions(u, t, threshold_secs))
        .collect::<Result<_>>()?;
    Ok(per_user.into_iter().flatten().collect())
}

/// Segments every user with a threshold adapted to that user's own gaps.
pub fn segment_all_adaptive(times_by_user: &BTreeMap<String, Vec<i64>>) -> Result<Vec<Session>> {
    let per_user: Vec<Vec<Session>> = times_by_user
        .par_iter()
        .map(|(u, t)| {
            let gaps: Vec<f64> = t.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
            let threshold = adaptive_threshold(&gaps).round() as i64;
            segment_sessions(u, t, threshold)
        })
        .collect::<Result<_>>()?;
    Ok(per_user.into_iter().flatten().collect())
}

/// Data-driven threshold from a two-cluster split of the log-gaps.
///
/// Gaps are log-transformed and sorted; the split point minimising the total
/// within-cluster sum of squares (the final merge of Ward agglomeration in one
/// dimension) separates them, and the threshold is the geometric midpoint of
/// the two gaps on either side of the cut, clamped to `[60 s, 3600 s]`.
/// Zero gaps are ignored. With fewer than two positive gaps the default
/// 600 s is returned. If all gaps are equal the cut degenerates to that value.
pub fn adaptive_threshold(gaps: &[f64]) -> f64 {
    let mut logs: Vec<f64> = gaps
        .iter()
        .filter(|g| **g > 0.0 && g.is_finite())
        .map(|g| g.ln())
        .collect();
    if logs.len() < 2 {
        return DEFAULT_THRESHOLD_SECS as f64;
    }
    logs.sort_by(f64::total_cmp);
    let n = logs.len();
    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, v) in logs.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    let sse = |a: usize, b: usize| {
        let cnt = (b - a) as f64;
        let s = prefix[b] - prefix[a];
        (prefix_sq[b] - prefix_sq[a] - s * s / cnt).max(0.0)
    };
    let mut best = (f64::INFINITY, 1);
    for cut in 1..n {
        if logs[cut] == logs[cut - 1] {
            continue;
        }
        let cost = sse(0, cut) + sse(cut, n);
        if cost < best.0 {
            best = (cost, cut);
        }
    }
    let boundary = if best.0.is_finite() {
        (0.5 * (logs[best.1 - 1] + logs[best.1])).exp()
    } else {
        logs[0].exp()
    };
    boundary.clamp(ADAPTIVE_MIN_SECS, ADAPTIVE_MAX_SECS)
}

/// Session counts, within-session gaps and between-session gaps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionStats {
    pub counts: Vec<usize>,
    pub deltas: Vec<i64>,
    pub gaps: Vec<SessionGap>,
}

/// Extracts N, Δt and ΔT. `sessions` must be grouped by user and sorted in time
/// within each user; gaps are only emitted between neighbours of the same user.
pub fn session_stats(sessions: &[Session], utc_offset_secs: i64) -> SessionStats {
    let mut stats = SessionStats::default();
    for s in sessions {
        stats.counts.push(s.n());
        stats.deltas.extend_from_slice(&s.deltas);
    }
    for w in sessions.windows(2) {
        if w[0].user_id != w[1].user_id {
            continue;
        }
        stats.gaps.push(SessionGap {
            user_id: w[0].user_id.clone(),
            delta_t: w[1].start - w[0].end,
            start_hour: hour_of_day(w[0].end as f64, utc_offset_secs),
            end_hour: hour_of_day(w[1].start as f64, utc_offset_secs),
        });
    }
    stats
}

/// Hourly activity proportions X(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub x: [f64; 24],
    /// Number of counted items; zero means the profile is all zeros.
    pub total: usize,
}

impl Default for ActivityProfile {
    fn default() -> Self {
        ActivityProfile { x: [0.0; 24], total: 0 }
    }
}

impl ActivityProfile {
    pub fn from_counts(counts: [usize; 24]) -> Self {
        let total: usize = counts.iter().sum();
        let mut x = [0.0; 24];
        if total > 0 {
            for (xi, c) in x.iter_mut().zip(counts) {
                *xi = c as f64 / total as f64;
            }
        }
        ActivityProfile { x, total }
    }

    pub fn from_timestamps(times: impl IntoIterator<Item = f64>, utc_offset_secs: i64) -> Self {
        let mut counts = [0usize; 24];
        for t in times {
            counts[hour_bin(t, utc_offset_secs)] += 1;
        }
        Self::from_counts(counts)
    }

    /// Builds a profile from arbitrary non-negative weights, normalised to sum 1.
    pub fn from_weights(weights: &[f64; 24]) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "activity weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("activity weights are all zero".into()));
        }
        let mut x = [0.0; 24];
        for (xi, w) in x.iter_mut().zip(weights) {
            *xi = w / total;
        }
        Ok(ActivityProfile { x, total: 1 })
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn sum(&self) -> f64 {
        self.x.iter().sum()
    }
}

/// What [`hourly_activity_profile`] counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileBasis {
    /// One count per session, at its start hour.
    #[default]
    SessionStart,
    /// One count per action.
    Click,
}

pub fn hourly_activity_profile(sessions: &[Session], basis: ProfileBasis, utc_offset_secs: i64) -> ActivityProfile {
    match basis {
        ProfileBasis::SessionStart => {
            ActivityProfile::from_timestamps(sessions.iter().map(|s| s.start as f64), utc_offset_secs)
        }
        ProfileBasis::Click => ActivityProfile::from_timestamps(
            sessions.iter().flat_map(|s| s.action_times.iter().map(|&t| t as f64)),
            utc_offset_secs,
        ),
    }
}

pub fn write_sessions_csv(path: &Path, sessions: &[Session]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["user_id", "start", "end", "N"])?;
    for s in sessions {
        w.write_record([
            s.user_id.clone(),
            s.start.to_string(),
            s.end.to_string(),
            s.n().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_gaps_csv(path: &Path, gaps: &[SessionGap]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["user_id", "delta_t", "t_s", "t_e"])?;
    for g in gaps {
        w.write_record([
            g.user_id.clone(),
            g.delta_t.to_string(),
            g.start_hour.to_string(),
            g.end_hour.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
