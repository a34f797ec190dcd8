//! Content-selection analysis: how strongly clicks follow a user's historical
//! interests, and how that dependence changes with exposure diversity.
//!
//! Each impression yields a similarity matrix between exposure and history
//! embeddings; every exposure row is reduced to its maximum (`M`) and median
//! (`m`) and tagged with the diversity of the exposure list it came from.

mod analysis;
mod embed;
mod similarity;
mod wasserstein;

pub use analysis::{
    diversity_binned_analysis, extract_features, filter_exposure_length, joint_density_difference, partition_by_click,
    proxy_exposure, write_features_csv, write_joint_diff_csv, write_ws_curve_csv, ContentDiagnostics, DiversityBin,
    JointDensityDiff, Partition, DEFAULT_ENTROPY_BINS,
};
pub use embed::{hash_embed, EmbeddingStore};
pub use similarity::{
    cosine_similarity, exposure_entropy, exposure_features, mean_pairwise_distance, similarity_matrix,
    ExposureDiversity, ExposureFeatures, SimilarityMatrix, SkipReason,
};
pub use wasserstein::wasserstein_1d;
