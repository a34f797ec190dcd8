use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::{load_corpus, ClusterBy, OutputDir, RunConfig};
use crate::cohorts::{
    activity_clusters, agglomerative, build_signatures, gmm_em, group_deviation_profile, kmeans, mean_profile,
    select_best_clustering, silhouette, Algorithm, ClusterResult, Daypart, GmmOptions, KMeansOptions, Linkage,
    ScoreRow,
};
use crate::error::{Error, Result};
use crate::ingest::{Corpus, EventKind};
use crate::sessions::ActivityProfile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterGroup {
    pub label: usize,
    pub size: usize,
    /// Most frequent top tags among members, with member counts (tag clustering).
    pub top_tags: Vec<(String, usize)>,
    /// Day/night label (activity clustering).
    pub daypart: Option<Daypart>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub by: ClusterBy,
    pub users: usize,
    pub excluded_users: usize,
    pub best: Algorithm,
    pub k: usize,
    pub silhouette: Option<f64>,
    pub degenerate: bool,
    pub scores: Vec<ScoreRow>,
    pub groups: Vec<ClusterGroup>,
    pub files: Vec<String>,
}

fn category_counts(corpus: &Corpus) -> BTreeMap<String, BTreeMap<String, usize>> {
    corpus
        .users
        .iter()
        .map(|(u, log)| {
            let mut counts = BTreeMap::new();
            for e in log.events.iter().filter(|e| e.kind == EventKind::Click) {
                let Some(meta) = e.article_id.as_ref().and_then(|a| corpus.articles.get(a)) else {
                    continue;
                };
                if !meta.category.is_empty() {
                    *counts.entry(meta.category.clone()).or_insert(0) += 1;
                }
            }
            (u.clone(), counts)
        })
        .collect()
}

fn run_single(x: &[Vec<f64>], algo: Algorithm, k: usize, seed: u64) -> Result<(ClusterResult, Vec<ScoreRow>)> {
    let mut r = match algo {
        Algorithm::Kmeans => kmeans(x, k, seed, &KMeansOptions::default()),
        Algorithm::Gmm => gmm_em(x, k, seed, &GmmOptions::default()),
        Algorithm::Agglomerative => agglomerative(x, k, Linkage::Average),
    }?;
    r.seed = seed;
    r.silhouette = silhouette(x, &r.labels).ok();
    let row = ScoreRow {
        algorithm: algo,
        k,
        silhouette: r.silhouette,
        seed,
        error: None,
    };
    Ok((r, vec![row]))
}

fn write_assignments(path: &Path, users: &[String], r: &ClusterResult, parts: Option<&[Daypart]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["user_id", "algorithm", "k", "label"];
    if parts.is_some() {
        header.push("daypart");
    }
    w.write_record(&header)?;
    for (u, &l) in users.iter().zip(&r.labels) {
        let mut row = vec![
            u.clone(),
            r.algorithm.name().to_string(),
            r.k.to_string(),
            l.to_string(),
        ];
        if let Some(p) = parts {
            row.push(match p[l] {
                Daypart::Day => "day".into(),
                Daypart::Night => "night".into(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_scores(path: &Path, rows: &[ScoreRow], best: Algorithm) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["algorithm", "k", "silhouette", "seed", "best", "error"])?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            r.k.to_string(),
            r.silhouette.map(|s| s.to_string()).unwrap_or_default(),
            r.seed.to_string(),
            (r.algorithm == best && r.silhouette.is_some()).to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_deviation(path: &Path, rows: &[(usize, [f64; 24])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["label", "hour", "deviation"])?;
    for (label, dev) in rows {
        for (h, v) in dev.iter().enumerate() {
            w.write_record([label.to_string(), h.to_string(), v.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn sizes(labels: &[usize], k: usize) -> Vec<usize> {
    let mut s = vec![0; k];
    labels.iter().for_each(|&l| s[l] += 1);
    s
}

/// Clusters users by interest tags or by 24-hour activity.
///
/// Writes `assignments.csv`, `scores.csv`, `cluster_summary.json`, and for
/// activity clustering `deviation.csv` with each group's hourly deviation
/// from the population mean profile.
pub fn run_cluster(cfg: &RunConfig) -> Result<ClusterSummary> {
    cfg.validate()?;
    let cc = &cfg.cluster;
    let corpus = load_corpus(cfg)?;
    let mut out = OutputDir::create(cfg)?;
    let summary = match cc.by {
        ClusterBy::Tags => {
            let (sigs, _vocab, excluded) = build_signatures(&category_counts(&corpus), cc.n_tags, cc.encoding);
            if sigs.len() < cc.k {
                return Err(Error::InsufficientData(format!(
                    "{} users with categorised clicks, fewer than k = {}",
                    sigs.len(),
                    cc.k
                )));
            }
            let x: Vec<Vec<f64>> = sigs.iter().map(|s| s.tag_vector.clone()).collect();
            let users: Vec<String> = sigs.iter().map(|s| s.user_id.clone()).collect();
            let (best, scores) = if cc.algorithms.len() == 1 {
                run_single(&x, cc.algorithms[0], cc.k, cc.seed)?
            } else {
                let sel = select_best_clustering(&x, &cc.algorithms, cc.k, cc.seed)?;
                (sel.best, sel.table)
            };
            let groups = sizes(&best.labels, cc.k)
                .into_iter()
                .enumerate()
                .map(|(label, size)| {
                    let mut tags: BTreeMap<&str, usize> = BTreeMap::new();
                    for (s, _) in sigs.iter().zip(&best.labels).filter(|(_, &l)| l == label) {
                        for t in &s.top_tags {
                            *tags.entry(t.as_str()).or_insert(0) += 1;
                        }
                    }
                    let mut top: Vec<(String, usize)> = tags.into_iter().map(|(t, n)| (t.to_string(), n)).collect();
                    top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                    top.truncate(cc.n_tags);
                    ClusterGroup {
                        label,
                        size,
                        top_tags: top,
                        daypart: None,
                    }
                })
                .collect();
            out.write_with("assignments.csv", |p| write_assignments(p, &users, &best, None))?;
            out.write_with("scores.csv", |p| write_scores(p, &scores, best.algorithm))?;
            ClusterSummary {
                by: cc.by,
                users: users.len(),
                excluded_users: excluded.len(),
                best: best.algorithm,
                k: cc.k,
                silhouette: best.silhouette,
                degenerate: false,
                scores,
                groups,
                files: Vec::new(),
            }
        }
        ClusterBy::Activity => {
            let offset = cfg.sessions.utc_offset_secs;
            let mut users = Vec::new();
            let mut profiles = Vec::new();
            let mut excluded = 0;
            for (u, times) in corpus.click_times() {
                if times.is_empty() {
                    excluded += 1;
                    continue;
                }
                users.push(u);
                profiles.push(ActivityProfile::from_timestamps(
                    times.iter().map(|&t| t as f64),
                    offset,
                ));
            }
            let ac = activity_clusters(&profiles, cc.k, cc.seed)?;
            let overall = mean_profile(&profiles);
            let size = sizes(&ac.result.labels, cc.k);
            let mut deviations = Vec::new();
            for (label, &n) in size.iter().enumerate() {
                if n == 0 {
                    continue;
                }
                let members: Vec<&ActivityProfile> = profiles
                    .iter()
                    .zip(&ac.result.labels)
                    .filter(|(_, &l)| l == label)
                    .map(|(p, _)| p)
                    .collect();
                let dev = group_deviation_profile(&label.to_string(), &members, &overall)?;
                deviations.push((label, dev.hourly));
            }
            let scores = vec![ScoreRow {
                algorithm: Algorithm::Kmeans,
                k: cc.k,
                silhouette: ac.result.silhouette,
                seed: cc.seed,
                error: None,
            }];
            out.write_with("assignments.csv", |p| {
                write_assignments(p, &users, &ac.result, Some(&ac.parts))
            })?;
            out.write_with("scores.csv", |p| write_scores(p, &scores, Algorithm::Kmeans))?;
            out.write_with("deviation.csv", |p| write_deviation(p, &deviations))?;
            ClusterSummary {
                by: cc.by,
                users: users.len(),
                excluded_users: excluded,
                best: Algorithm::Kmeans,
                k: cc.k,
                silhouette: ac.result.silhouette,
                degenerate: ac.degenerate,
                scores,
                groups: size
                    .into_iter()
                    .enumerate()
                    .map(|(label, size)| ClusterGroup {
                        label,
                        size,
                        top_tags: Vec::new(),
                        daypart: Some(ac.parts[label]),
                    })
                    .collect(),
                files: Vec::new(),
            }
        }
    };
    let summary = ClusterSummary {
        files: out.files().to_vec(),
        ..summary
    };
    out.write_json("cluster_summary.json", &summary)?;
    Ok(summary)
}
