//! Outlier-based new-word discovery, cross-class overlap, clustering into
//! taxonomies and 2-D projection of latent vectors.

pub mod cluster;
mod context;
mod outlier;
mod overlap;
mod project;
mod stats;

pub use cluster::{
    build_taxonomy, estimate_k, kmeans, silhouette, KMeansResult, Taxonomy, TaxonomyCluster,
    DEFAULT_K_RANGE, MAX_SUBCATEGORIES,
};
pub use context::contextual_word_vectors;
pub use outlier::{
    detect_new_words, fit_outlier_model, scalarize, BandMode, NewWordFlag, OutlierModel, Tail,
};
pub use overlap::{detect_overlap, ClassWords, DocumentOverlap, OverlapReport};
pub use project::{pca_2d, project_2d, projection_method, ProjectionMethod, TSNE_MIN_POINTS};
pub use stats::{confidence_interval, inverse_normal_cdf, mean_std, z_critical};
