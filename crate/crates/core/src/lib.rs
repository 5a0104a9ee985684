//! Detecting correlation between two graphs from small induced subgraphs.
//!
//! Two Gaussian Wigner graphs are either independent or a noisy relabelled
//! copy of each other. Only `s` vertices of each are observed. The crate
//! scores partial vertex correspondences between the two samples, searches
//! for the best one exactly or with a clique-seeded heuristic, and runs the
//! Monte Carlo experiments that measure how well the resulting test works.

pub mod clique;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod harness;
pub mod model;
pub mod rng;
pub mod similarity;
pub mod theory;

pub use clique::{detect, AlgoParams, Detection};
pub use error::{Error, Result};
pub use exact::{decide, enumerate_max_score, threshold_mse, threshold_overlap, Decision, ExactBudget};
pub use harness::{auc, histogram, roc_points, run_experiment, ExperimentConfig, RocCurve, TrialRecord};
pub use model::{
    generate_pair, mapping_size_m, sample_subgraphs, GraphPairInstance, Hypothesis, Permutation,
    SampledSubgraphs, WeightedGraph,
};
pub use similarity::{similarity_score, PartialInjection, SimilarityKernel};
