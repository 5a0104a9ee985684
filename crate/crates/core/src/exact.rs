//! Brute-force test statistic: the best similarity score over every
//! injective mapping of size `m`, plus the closed-form thresholds and the
//! accept/reject rule.
//!
//! Enumeration order is fixed: domain `m`-subsets of the first graph in
//! lexicographic order, then image `m`-subsets of the second graph, then the
//! pairings in lexicographic permutation order. The first mapping reaching
//! the maximum wins, so ties resolve to the lexicographically smallest
//! `(domain, image, pairing)`.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binom_u128, combinations, factorial_u128, first_combination, next_combination,
    next_permutation, pairs,
};
use crate::error::{Error, Result};
use crate::model::WeightedGraph;
use crate::similarity::{score_unchecked, similarity_score, PartialInjection, SimilarityKernel};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Cap on the number of mapping evaluations the exact search may perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactBudget {
    pub max_evaluations: u128,
}

impl Default for ExactBudget {
    fn default() -> Self {
        ExactBudget {
            max_evaluations: DEFAULT_BUDGET,
        }
    }
}

impl ExactBudget {
    pub fn new(max_evaluations: u128) -> Result<Self> {
        if max_evaluations == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        Ok(ExactBudget { max_evaluations })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    #[serde(rename = "reject")]
    RejectNull,
    #[serde(rename = "accept")]
    AcceptNull,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::RejectNull => "reject",
            Decision::AcceptNull => "accept",
        }
    }
}

impl std::str::FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(Decision::RejectNull),
            "accept" => Ok(Decision::AcceptNull),
            other => Err(Error::invalid(format!("unknown decision {other:?}"))),
        }
    }
}

/// Number of size-`m` injections between two `s`-vertex graphs:
/// `binom(s, m)^2 m!`, saturating.
pub fn exact_evaluation_count(s1: usize, s2: usize, m: usize) -> u128 {
    binom_u128(s1, m)
        .checked_mul(binom_u128(s2, m))
        .and_then(|v| v.checked_mul(factorial_u128(m)))
        .unwrap_or(u128::MAX)
}

struct Best {
    score: f64,
    domain_rank: usize,
    image: Vec<usize>,
    order: Vec<usize>,
}

fn best_for_domain(
    f: SimilarityKernel,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    domain: &[usize],
    domain_rank: usize,
) -> Best {
    let m = domain.len();
    let n2 = sub2.n();
    let mut best = Best {
        score: f64::NEG_INFINITY,
        domain_rank,
        image: Vec::new(),
        order: Vec::new(),
    };
    let mut img = first_combination(m);
    let mut mapped = vec![0usize; m];
    loop {
        let mut perm: Vec<usize> = (0..m).collect();
        loop {
            for k in 0..m {
                mapped[k] = img[perm[k]];
            }
            let sc = score_unchecked(f, sub1, sub2, domain, &mapped);
            if sc > best.score {
                best.score = sc;
                best.image.clone_from(&img);
                best.order.clone_from(&perm);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        if !next_combination(&mut img, n2) {
            break;
        }
    }
    best
}

/// Exact maximum of the similarity score over all size-`m` injections.
pub fn enumerate_max_score(
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    m: usize,
    f: SimilarityKernel,
    budget: ExactBudget,
) -> Result<(f64, PartialInjection)> {
    f.validate()?;
    let s = sub1.n().min(sub2.n());
    if m < 2 || m > s {
        return Err(Error::invalid(format!(
            "need 2 <= m <= min(s1, s2) = {s}, got m = {m}"
        )));
    }
    let required = exact_evaluation_count(sub1.n(), sub2.n(), m);
    if required > budget.max_evaluations {
        return Err(Error::Infeasible {
            what: format!("exact search with s = ({}, {}), m = {m}", sub1.n(), sub2.n()),
            required,
            budget: budget.max_evaluations,
        });
    }

    let domains = combinations(sub1.n(), m);
    let run = |(rank, d): (usize, &Vec<usize>)| best_for_domain(f, sub1, sub2, d, rank);
    let pick = |a: Best, b: Best| {
        // larger score wins; ties go to the earlier domain
        if b.score > a.score || (b.score == a.score && b.domain_rank < a.domain_rank) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    let best = domains
        .par_iter()
        .enumerate()
        .map(run)
        .reduce_with(pick)
        .expect("at least one domain subset");
    #[cfg(not(feature = "parallel"))]
    let best = domains
        .iter()
        .enumerate()
        .map(run)
        .reduce(pick)
        .expect("at least one domain subset");

    let domain = domains[best.domain_rank].clone();
    let image = best.order.iter().map(|&k| best.image[k]).collect();
    let pi = PartialInjection::new_unchecked(domain, image);
    let score = similarity_score(f, sub1, sub2, &pi)?;
    Ok((score, pi))
}

/// Threshold for the overlap statistic: `binom(m, 2) rho / 2`.
pub fn threshold_overlap(m: usize, rho: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid(format!("threshold needs m >= 2, got {m}")));
    }
    Ok(pairs(m) as f64 * rho / 2.0)
}

/// Threshold for the mean-squared-error statistic: `2 binom(m, 2) (rho - 1)`.
pub fn threshold_mse(m: usize, rho: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid(format!("threshold needs m >= 2, got {m}")));
    }
    Ok(2.0 * pairs(m) as f64 * (rho - 1.0))
}

/// Rejects the null exactly when `statistic >= tau`.
pub fn decide(statistic: f64, tau: f64) -> Decision {
    if statistic >= tau {
        Decision::RejectNull
    } else {
        Decision::AcceptNull
    }
}
