use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::similarity::{exposure_features, similarity_matrix, ExposureDiversity, ExposureFeatures, SkipReason};
use super::wasserstein::wasserstein_1d;
use super::EmbeddingStore;
use crate::error::{Error, Result};
use crate::ingest::{ArticleMeta, Exposure, Impression};
use crate::stats::{gaussian_kde_at, linspace, median, pearson, silverman_bandwidth, std_dev};

/// Low / medium / high exposure-diversity bands in bits.
pub const DEFAULT_ENTROPY_BINS: [(f64, f64); 3] = [(1.2, 2.0), (2.0, 2.8), (2.8, 3.6)];

const UNKNOWN_CATEGORY: &str = "unknown";
const SIMILARITY_GRID: usize = 201;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ContentDiagnostics {
    pub impressions_in: usize,
    pub impressions_used: usize,
    pub empty_history: usize,
    pub missing_embedding: usize,
    /// Exposures whose category is unknown; they count as category `unknown`.
    pub missing_category: usize,
    pub feature_rows: usize,
}

/// Feature rows for every usable impression, sorted by impression id then exposure index.
pub fn extract_features(
    impressions: &[Impression],
    store: &EmbeddingStore,
    articles: &BTreeMap<String, ArticleMeta>,
) -> (Vec<ExposureFeatures>, ContentDiagnostics) {
    enum Outcome {
        Rows(Vec<ExposureFeatures>, usize),
        Skip(SkipReason),
    }
    let outcomes: Vec<Outcome> = impressions
        .par_iter()
        .map(|imp| {
            let matrix = match similarity_matrix(imp, store) {
                Ok(m) => m,
                Err(reason) => return Outcome::Skip(reason),
            };
            let mut missing_category = 0;
            let categories: Vec<&str> = imp
                .exposures
                .iter()
                .map(|e| match articles.get(&e.article_id) {
                    Some(meta) if !meta.category.is_empty() => meta.category.as_str(),
                    _ => {
                        missing_category += 1;
                        UNKNOWN_CATEGORY
                    }
                })
                .collect();
            // similarity_matrix already checked presence
            let embeddings: Vec<&[f64]> = imp.exposures.iter().filter_map(|e| store.get(&e.article_id)).collect();
            let diversity = ExposureDiversity::new(&categories, &embeddings);
            let rows = matrix
                .rows
                .iter()
                .zip(&imp.exposures)
                .enumerate()
                .filter_map(|(i, (row, e))| exposure_features(&imp.impression_id, i, row, &diversity, e.clicked()).ok())
                .collect();
            Outcome::Rows(rows, missing_category)
        })
        .collect();

    let mut diag = ContentDiagnostics {
        impressions_in: impressions.len(),
        ..Default::default()
    };
    let mut rows = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Rows(mut r, missing) => {
                diag.impressions_used += 1;
                diag.missing_category += missing;
                rows.append(&mut r);
            }
            Outcome::Skip(SkipReason::EmptyHistory) => diag.empty_history += 1,
            Outcome::Skip(SkipReason::MissingEmbedding(_)) => diag.missing_embedding += 1,
        }
    }
    rows.sort_by(|a, b| {
        a.impression_id
            .cmp(&b.impression_id)
            .then(a.exposure_index.cmp(&b.exposure_index))
    });
    diag.feature_rows = rows.len();
    (rows, diag)
}

/// Clicked (`E+`) and non-clicked (`E-`) feature rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Partition<'a> {
    pub clicked: Vec<&'a ExposureFeatures>,
    pub unclicked: Vec<&'a ExposureFeatures>,
}

impl Partition<'_> {
    /// True when either side is empty, so distribution comparisons are undefined.
    pub fn is_degenerate(&self) -> bool {
        self.clicked.is_empty() || self.unclicked.is_empty()
    }
}

pub fn partition_by_click(features: &[ExposureFeatures]) -> Partition<'_> {
    let (clicked, unclicked) = features.iter().partition(|f| f.clicked);
    Partition { clicked, unclicked }
}

/// One exposure-diversity band of the diversity analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityBin {
    pub lo: f64,
    pub hi: f64,
    pub n_clicked: usize,
    pub n_unclicked: usize,
    /// Set when the bin lacks one of the classes and is left out of the curves.
    pub flag: Option<String>,
    /// Wasserstein distance between clicked and non-clicked medians.
    pub ws_median: Option<f64>,
    /// Wasserstein distance between clicked and non-clicked maxima.
    pub ws_max: Option<f64>,
    pub median_clicked_m: Option<f64>,
    pub median_unclicked_m: Option<f64>,
    /// Kernel densities on [`DiversityBin::grid`]; `None` if a class has fewer than two distinct values.
    pub density_m_clicked: Option<Vec<f64>>,
    pub density_m_unclicked: Option<Vec<f64>>,
    pub density_max_clicked: Option<Vec<f64>>,
    pub density_max_unclicked: Option<Vec<f64>>,
    pub grid: Vec<f64>,
}

fn kde_on(values: &[f64], grid: &[f64]) -> Option<Vec<f64>> {
    if values.len() < 2 || !(std_dev(values) > 0.0) {
        return None;
    }
    Some(gaussian_kde_at(values, silverman_bandwidth(values), grid))
}

/// Groups feature rows by exposure entropy and compares clicked against
/// non-clicked similarity distributions inside each band.
///
/// Bands are half-open `[lo, hi)` except the last, which includes `hi`.
pub fn diversity_binned_analysis(features: &[ExposureFeatures], bins: &[(f64, f64)]) -> Vec<DiversityBin> {
    let grid = linspace(-1.0, 1.0, SIMILARITY_GRID);
    bins.iter()
        .enumerate()
        .map(|(bi, &(lo, hi))| {
            let last = bi + 1 == bins.len();
            let members: Vec<&ExposureFeatures> = features
                .iter()
                .filter(|f| f.entropy >= lo && (f.entropy < hi || (last && f.entropy == hi)))
                .collect();
            let pick = |clicked: bool, m: bool| -> Vec<f64> {
                members
                    .iter()
                    .filter(|f| f.clicked == clicked)
                    .map(|f| if m { f.median } else { f.max })
                    .collect()
            };
            let (pos_m, neg_m, pos_max, neg_max) = (
                pick(true, true),
                pick(false, true),
                pick(true, false),
                pick(false, false),
            );
            let flag = match (pos_m.is_empty(), neg_m.is_empty()) {
                (true, true) => Some("empty bin".to_string()),
                (true, false) => Some("no clicked exposures".to_string()),
                (false, true) => Some("no non-clicked exposures".to_string()),
                _ => None,
            };
            let ws = |a: &[f64], b: &[f64]| {
                if flag.is_none() {
                    wasserstein_1d(a, b).ok()
                } else {
                    None
                }
            };
            let med = |v: &[f64]| (!v.is_empty()).then(|| median(v));
            DiversityBin {
                lo,
                hi,
                n_clicked: pos_m.len(),
                n_unclicked: neg_m.len(),
                ws_median: ws(&pos_m, &neg_m),
                ws_max: ws(&pos_max, &neg_max),
                median_clicked_m: med(&pos_m),
                median_unclicked_m: med(&neg_m),
                density_m_clicked: kde_on(&pos_m, &grid),
                density_m_unclicked: kde_on(&neg_m, &grid),
                density_max_clicked: kde_on(&pos_max, &grid),
                density_max_unclicked: kde_on(&neg_max, &grid),
                flag,
                grid: grid.clone(),
            }
        })
        .collect()
}

/// Difference of clicked minus non-clicked joint `(m, M)` densities on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDensityDiff {
    /// Grid over `m` (columns).
    pub m: Vec<f64>,
    /// Grid over `M` (rows).
    pub max: Vec<f64>,
    /// `diff[row][col]` at `(m[col], max[row])`.
    pub diff: Vec<Vec<f64>>,
}

impl JointDensityDiff {
    /// 2-D trapezoid integral of the difference.
    pub fn integral(&self) -> f64 {
        trapezoid_2d(&self.m, &self.max, &self.diff)
    }
}

fn trapezoid_2d(x: &[f64], y: &[f64], z: &[Vec<f64>]) -> f64 {
    let row_integrals: Vec<f64> = z.iter().map(|row| crate::stats::trapezoid(x, row)).collect();
    crate::stats::trapezoid(y, &row_integrals)
}

fn kde_2d(points: &[(f64, f64)], gx: &[f64], gy: &[f64]) -> Result<Vec<Vec<f64>>> {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (hx, hy) = (silverman_bandwidth(&xs), silverman_bandwidth(&ys));
    if !(hx > 0.0) || !(hy > 0.0) {
        return Err(Error::Degenerate(
            "joint density input has zero variance in a coordinate".into(),
        ));
    }
    if pearson(&xs, &ys).is_some_and(|r| r.abs() > 1.0 - 1e-12) {
        return Err(Error::Degenerate("joint density input is collinear".into()));
    }
    let kernel = |grid: &[f64], vals: &[f64], h: f64| -> Vec<Vec<f64>> {
        grid.iter()
            .map(|&g| {
                vals.iter()
                    .map(|&v| {
                        let z = (g - v) / h;
                        (-0.5 * z * z).exp()
                    })
                    .collect()
            })
            .collect()
    };
    let kx = kernel(gx, &xs, hx);
    let ky = kernel(gy, &ys, hy);
    let mut z: Vec<Vec<f64>> = ky
        .iter()
        .map(|kyr| {
            kx.iter()
                .map(|kxr| kxr.iter().zip(kyr).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let area = trapezoid_2d(gx, gy, &z);
    if !(area > 0.0) {
        return Err(Error::Numerical("joint density vanishes on the grid".into()));
    }
    for row in &mut z {
        row.iter_mut().for_each(|v| *v /= area);
    }
    Ok(z)
}

/// Joint-density difference of clicked minus non-clicked `(m, M)` pairs.
///
/// Each side is a product-Gaussian KDE (Silverman bandwidth per coordinate)
/// normalised to unit mass on the grid before subtracting, so the
/// difference integrates to zero. Without an explicit grid, a
/// `points x points` grid spans both samples padded by three bandwidths.
pub fn joint_density_difference(
    clicked: &[(f64, f64)],
    unclicked: &[(f64, f64)],
    grid: Option<(Vec<f64>, Vec<f64>)>,
    points: usize,
) -> Result<JointDensityDiff> {
    if clicked.len() < 30 || unclicked.len() < 30 {
        return Err(Error::InsufficientData(format!(
            "joint density needs at least 30 points per class, got {} and {}",
            clicked.len(),
            unclicked.len()
        )));
    }
    let (gm, gmax) = match grid {
        Some(g) => g,
        None => {
            let all: Vec<&(f64, f64)> = clicked.iter().chain(unclicked).collect();
            let col = |f: fn(&(f64, f64)) -> f64| all.iter().map(|p| f(p)).collect::<Vec<f64>>();
            let (xs, ys) = (col(|p| p.0), col(|p| p.1));
            let pad = |v: &[f64]| {
                let h = silverman_bandwidth(v);
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
                linspace(lo, hi, points.max(8))
            };
            (pad(&xs), pad(&ys))
        }
    };
    let pos = kde_2d(clicked, &gm, &gmax)?;
    let neg = kde_2d(unclicked, &gm, &gmax)?;
    let diff = pos
        .iter()
        .zip(&neg)
        .map(|(p, n)| p.iter().zip(n).map(|(a, b)| a - b).collect())
        .collect();
    Ok(JointDensityDiff { m: gm, max: gmax, diff })
}

/// Pseudo-impressions for click-only logs: the last click of each user becomes
/// a clicked exposure whose history is every earlier click.
///
/// `clicks` maps users to `(timestamp, article_id)` in chronological order.
/// Users with fewer than two clicks are skipped.
pub fn proxy_exposure(clicks: &BTreeMap<String, Vec<(i64, String)>>) -> Vec<Impression> {
    clicks
        .iter()
        .filter(|(_, c)| c.len() >= 2)
        .map(|(user, c)| {
            let (t, last) = c.last().expect("len >= 2");
            Impression {
                impression_id: format!("proxy-{user}"),
                user_id: user.clone(),
                timestamp: *t,
                history: c[..c.len() - 1].iter().map(|(_, a)| a.clone()).collect(),
                exposures: vec![Exposure {
                    article_id: last.clone(),
                    label: 1,
                }],
            }
        })
        .collect()
}

/// Keeps impressions whose exposure count lies in `[lo, hi]`.
pub fn filter_exposure_length(impressions: Vec<Impression>, lo: usize, hi: usize) -> Result<Vec<Impression>> {
    if lo > hi {
        return Err(Error::InvalidInput(format!(
            "exposure length band [{lo}, {hi}] is empty"
        )));
    }
    Ok(impressions
        .into_iter()
        .filter(|i| (lo..=hi).contains(&i.exposures.len()))
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_features_csv(path: &Path, rows: &[ExposureFeatures]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "impression_id",
        "exposure_index",
        "clicked",
        "M",
        "m",
        "En",
        "meanPairDist",
        "exposure_len",
    ])?;
    for r in rows {
        w.write_record([
            r.impression_id.clone(),
            r.exposure_index.to_string(),
            u8::from(r.clicked).to_string(),
            r.max.to_string(),
            r.median.to_string(),
            r.entropy.to_string(),
            opt(r.mean_pair_dist),
            r.exposure_len.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_ws_curve_csv(path: &Path, bins: &[DiversityBin]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "en_lo",
        "en_hi",
        "n_clicked",
        "n_unclicked",
        "ws_m",
        "ws_M",
        "median_m_clicked",
        "median_m_unclicked",
        "flag",
    ])?;
    for b in bins {
        w.write_record([
            b.lo.to_string(),
            b.hi.to_string(),
            b.n_clicked.to_string(),
            b.n_unclicked.to_string(),
            opt(b.ws_median),
            opt(b.ws_max),
            opt(b.median_clicked_m),
            opt(b.median_unclicked_m),
            b.flag.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Long-format CSV `m,M,diff`.
pub fn write_joint_diff_csv(path: &Path, jd: &JointDensityDiff) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "M", "diff"])?;
    for (r, &y) in jd.max.iter().enumerate() {
        for (c, &x) in jd.m.iter().enumerate() {
            w.write_record([x.to_string(), y.to_string(), jd.diff[r][c].to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
