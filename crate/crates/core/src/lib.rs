//! Customer segmentation on revenue-share baskets and value-aware top-L
//! recommendation.
//!
//! The pipeline is:
//!
//! 1. [`interaction`]: aggregate transactions into aligned expenditure,
//!    binary and share matrices, and mask per-user held-out baskets.
//! 2. [`similarity`]: pairwise Euclidean, Cosine, Jaccard and MADD
//!    dissimilarity matrices.
//! 3. [`clustering`]: PAM k-medoids with silhouette-based choice of k.
//! 4. [`recommend`]: cluster-level popularity, revenue and expected-profit
//!    scores and the top-L lists they induce.
//! 5. [`metrics`]: Precision@L, NDCG@L and NDCV@L.
//!
//! [`synthgen`] produces the synthetic consumer populations and
//! [`harness`] runs repeated end-to-end experiments and timing sweeps.
//!
//! Data-parallel loops go through [`Exec`]. With the default `parallel`
//! feature they run on rayon; without it every path is sequential and
//! produces bit-identical output.

pub mod clustering;
pub mod error;
pub mod exec;
pub mod harness;
pub mod interaction;
pub mod metrics;
pub mod recommend;
pub mod rng;
pub mod similarity;
pub mod sparse;
pub mod synthgen;

pub use clustering::{pam, select_k, silhouette, ClusteringModel, KRange};
pub use error::{Error, Result};
pub use exec::Exec;
pub use interaction::{
    build_matrices, split_by_masking, InteractionMatrices, SplitMatrices, TransactionRecord,
};
pub use metrics::{ndcg_at_l, ndcv_at_l, ndcv_hits_at_l, precision_at_l, EvalReport, ValueIdeal};
pub use recommend::{cluster_stats, top_l, ClusterProductStats, Method, RecommendationList};
pub use similarity::{pairwise, DissimilarityMatrix, MetricKind};
pub use synthgen::{generate, ConsumerType, OffPreference, Scenario, ScenarioSpec};
