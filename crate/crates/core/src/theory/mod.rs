//! Numerical checks of the probabilistic machinery behind the detector:
//! overlap law and tails, moment generating functions, the likelihood
//! ratio, the correlated functional digraph and its core set.

mod digraph;
mod hypergeom;
mod mgf;
mod montecarlo;

pub use digraph::{
    build_digraph, core_set, cycle_vertices, decompose, CoreSet, Decomposition, EdgeKey,
    FunctionalDigraph, Node,
};
pub use hypergeom::{hypergeom_pmf, hypergeom_support, hypergeom_tail_bounds};
pub use mgf::{
    likelihood_ratio, mc_likelihood_ratio_mean, mc_mgf_mse, mc_mgf_overlap, mgf_mse, mgf_overlap,
};
pub use montecarlo::{
    core_set_tail_check, mc_component_expectation, mc_mean, mc_overlap_law,
    sample_complexity_boundary, total_variation, ComponentKind, McEstimate, TailCheck,
};
