use std::collections::BTreeMap;

use serde::Serialize;

use super::{load_corpus, require_path, Outcome, OutputDir, RunConfig};
use crate::content::{
    diversity_binned_analysis, extract_features, filter_exposure_length, hash_embed, joint_density_difference,
    partition_by_click, proxy_exposure, write_features_csv, write_joint_diff_csv, write_ws_curve_csv,
    ContentDiagnostics, EmbeddingStore,
};
use crate::error::Result;
use crate::ingest::{Corpus, EventKind, Impression};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WsPoint {
    pub lo: f64,
    pub hi: f64,
    pub n_clicked: usize,
    pub n_unclicked: usize,
    pub ws_median: Option<f64>,
    pub ws_max: Option<f64>,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContentSummary {
    /// `file` or `hashed_titles`.
    pub embedding_source: String,
    pub embedding_dim: usize,
    pub impressions_after_length_filter: usize,
    pub diagnostics: ContentDiagnostics,
    pub clicked_rows: usize,
    pub unclicked_rows: usize,
    pub ws_curve: Vec<WsPoint>,
    pub joint_diff: Outcome<()>,
    pub files: Vec<String>,
}

fn title_store(corpus: &Corpus, dim: usize) -> Result<EmbeddingStore> {
    let mut store = EmbeddingStore::new(dim);
    for (id, meta) in &corpus.articles {
        if !meta.title.trim().is_empty() {
            store.insert(id.clone(), hash_embed(&meta.title, dim)?)?;
        }
    }
    Ok(store)
}

fn click_sequences(corpus: &Corpus) -> BTreeMap<String, Vec<(i64, String)>> {
    corpus
        .users
        .iter()
        .map(|(u, log)| {
            let seq = log
                .events
                .iter()
                .filter(|e| e.kind == EventKind::Click)
                .filter_map(|e| e.article_id.clone().map(|a| (e.timestamp, a)))
                .collect();
            (u.clone(), seq)
        })
        .collect()
}

/// Similarity features, diversity-binned Wasserstein curves and the joint
/// `(m, M)` density difference.
///
/// Writes `features.csv`, `ws_curve.csv`, `diversity_bins.json`,
/// `joint_diff.csv` (when both classes have enough spread) and
/// `content_summary.json`.
pub fn run_content(cfg: &RunConfig) -> Result<ContentSummary> {
    cfg.validate()?;
    let c = &cfg.content;
    let corpus = load_corpus(cfg)?;
    let (store, source) = match c.embeddings.as_ref() {
        Some(_) => (
            EmbeddingStore::load(&require_path(c.embeddings.as_ref(), "content.embeddings")?)?,
            "file",
        ),
        None => (title_store(&corpus, c.hash_dim)?, "hashed_titles"),
    };
    let mut impressions: Vec<Impression> = if c.proxy_exposure {
        proxy_exposure(&click_sequences(&corpus))
    } else {
        corpus.impressions().cloned().collect()
    };
    if let Some((lo, hi)) = c.exposure_len {
        impressions = filter_exposure_length(impressions, lo, hi)?;
    }
    let (features, diagnostics) = extract_features(&impressions, &store, &corpus.articles);
    let bins = diversity_binned_analysis(&features, &c.entropy_bins);
    let part = partition_by_click(&features);
    let pairs = |rows: &[&crate::content::ExposureFeatures]| rows.iter().map(|f| (f.median, f.max)).collect::<Vec<_>>();
    let joint = joint_density_difference(
        &pairs(&part.clicked),
        &pairs(&part.unclicked),
        None,
        c.joint_grid_points,
    );

    let mut out = OutputDir::create(cfg)?;
    out.write_with("features.csv", |p| write_features_csv(p, &features))?;
    out.write_with("ws_curve.csv", |p| write_ws_curve_csv(p, &bins))?;
    out.write_json("diversity_bins.json", &bins)?;
    if let Ok(jd) = &joint {
        out.write_with("joint_diff.csv", |p| write_joint_diff_csv(p, jd))?;
    }
    let summary = ContentSummary {
        embedding_source: source.to_string(),
        embedding_dim: store.dim(),
        impressions_after_length_filter: impressions.len(),
        diagnostics,
        clicked_rows: part.clicked.len(),
        unclicked_rows: part.unclicked.len(),
        ws_curve: bins
            .iter()
            .map(|b| WsPoint {
                lo: b.lo,
                hi: b.hi,
                n_clicked: b.n_clicked,
                n_unclicked: b.n_unclicked,
                ws_median: b.ws_median,
                ws_max: b.ws_max,
                flag: b.flag.clone(),
            })
            .collect(),
        joint_diff: joint.map(|_| ()).into(),
        files: out.files().to_vec(),
    };
    out.write_json("content_summary.json", &summary)?;
    Ok(summary)
}
