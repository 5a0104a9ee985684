//! Block-parallel Monte Carlo estimators.
//!
//! Trials are split into fixed-size blocks, each with its own derived seed;
//! per-block sums are combined in block order, so estimates depend only on
//! the root seed and trial count.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::digraph::core_set;
use super::mgf::likelihood_ratio_unchecked;
use crate::error::{Error, Result};
use crate::model::{common_vertex_sets, sample_subset, Permutation};
use crate::rng::{self, Rng};

const BLOCK: usize = 10_000;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl McEstimate {
    /// `|mean - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }

    /// Distance to `target` in units of standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

fn block_sums<T, F, R>(trials: usize, seed: u64, label: &str, per_block: F, combine: R) -> T
where
    T: Send,
    F: Fn(&mut Rng, usize) -> T + Sync + Send,
    R: Fn(T, T) -> T,
{
    let blocks = trials.div_ceil(BLOCK).max(1);
    let run = |b: usize| {
        let len = (trials - b * BLOCK).min(BLOCK);
        let mut r = rng::indexed_stream(seed, label, b as u64);
        per_block(&mut r, len)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<T> = (0..blocks).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<T> = (0..blocks).map(run).collect();
    parts.into_iter().reduce(combine).expect("at least one block")
}

/// Mean and standard error of `sample` over `trials` draws.
pub fn mc_mean<F>(trials: usize, seed: u64, label: &str, sample: F) -> McEstimate
where
    F: Fn(&mut Rng) -> f64 + Sync + Send,
{
    let (sum, sumsq) = block_sums(
        trials,
        seed,
        label,
        |r, len| {
            let mut s = 0.0;
            let mut ss = 0.0;
            for _ in 0..len {
                let x = sample(r);
                s += x;
                ss += x * x;
            }
            (s, ss)
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    );
    let n = trials as f64;
    let mean = sum / n;
    let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
    McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        trials,
    }
}

/// Connected component shape of the correlated functional digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentKind {
    /// Open chain with `k` likelihood-ratio factors.
    Path(usize),
    /// Closed chain with `2j` factors, i.e. `j` side-one edges.
    Cycle(usize),
}

impl ComponentKind {
    /// Exact `E_Q` of the component's likelihood-ratio product.
    pub fn expectation(&self, rho: f64) -> f64 {
        match *self {
            ComponentKind::Path(_) => 1.0,
            ComponentKind::Cycle(j) => 1.0 / (1.0 - rho.powi(2 * j as i32)),
        }
    }
}

/// Estimates `E_Q` of the likelihood-ratio product along one component by
/// chaining i.i.d. standard normals.
pub fn mc_component_expectation(
    kind: ComponentKind,
    rho: f64,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(format!("rho must lie in (0,1), got {rho}")));
    }
    if trials < 1000 {
        return Err(Error::invalid(format!("need at least 1000 trials, got {trials}")));
    }
    let est = match kind {
        ComponentKind::Path(k) => {
            if k == 0 {
                return Err(Error::invalid("a path needs at least one factor"));
            }
            mc_mean(trials, seed, "path", move |r| {
                let mut prev: f64 = r.sample(StandardNormal);
                let mut prod = 1.0;
                for _ in 0..k {
                    let next: f64 = r.sample(StandardNormal);
                    prod *= likelihood_ratio_unchecked(prev, next, rho);
                    prev = next;
                }
                prod
            })
        }
        ComponentKind::Cycle(j) => {
            if j == 0 {
                return Err(Error::invalid("a cycle needs at least one edge"));
            }
            let k = 2 * j;
            mc_mean(trials, seed, "cycle", move |r| {
                let first: f64 = r.sample(StandardNormal);
                let mut prev = first;
                let mut prod = 1.0;
                for _ in 1..k {
                    let next: f64 = r.sample(StandardNormal);
                    prod *= likelihood_ratio_unchecked(prev, next, rho);
                    prev = next;
                }
                prod * likelihood_ratio_unchecked(prev, first, rho)
            })
        }
    };
    Ok(est)
}

/// `sqrt(c * max(n log n / log(1/(1 - rho^2)), n))`: the sample size at
/// which detection switches between possible and impossible, up to the
/// unspecified constant `c`.
pub fn sample_complexity_boundary(n: usize, rho: f64, constant: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2, got {n}")));
    }
    if !(rho > 0.0 && rho <= 1.0) || !(constant > 0.0) {
        return Err(Error::invalid(format!(
            "need rho in (0,1] and constant > 0, got rho = {rho}, constant = {constant}"
        )));
    }
    let nf = n as f64;
    let info = -(1.0 - rho * rho).ln();
    let sparse = if info.is_finite() { nf * nf.ln() / info } else { 0.0 };
    Ok((constant * sparse.max(nf)).sqrt())
}

/// Empirical law of the common-vertex count `|S|` for a uniform latent
/// permutation and independent uniform `s`-samples, indexed by count.
pub fn mc_overlap_law(n: usize, s: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    if s == 0 || s > n {
        return Err(Error::invalid(format!("need 1 <= s <= n, got n = {n}, s = {s}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let counts = block_sums(
        trials,
        seed,
        "overlap-law",
        |r, len| {
            let mut c = vec![0usize; s + 1];
            for _ in 0..len {
                let pi = Permutation::random(n, r);
                let idx1 = sample_subset(n, s, r);
                let idx2 = sample_subset(n, s, r);
                c[common_vertex_sets(&idx1, &idx2, &pi).0.len()] += 1;
            }
            c
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    Ok(counts.into_iter().map(|c| c as f64 / trials as f64).collect())
}

/// Total variation distance between two laws on `0..len`; missing entries
/// count as zero.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub frequency: f64,
    pub bound: f64,
    pub std_error: f64,
    pub violated: bool,
}

/// Empirical `P(|I*| = t)` under independent uniform permutations and
/// vertex samples, against the bound `(s/n)^(2t)`.
///
/// A violation is flagged when the frequency exceeds the bound by more than
/// three binomial standard errors (evaluated at the bound).
pub fn core_set_tail_check(n: usize, s: usize, t: usize, trials: usize, seed: u64) -> Result<TailCheck> {
    if s == 0 || s > n {
        return Err(Error::invalid(format!("need 1 <= s <= n, got n = {n}, s = {s}")));
    }
    if t > s {
        return Err(Error::invalid(format!("need t <= s, got t = {t}, s = {s}")));
    }
    if trials < 1000 {
        return Err(Error::invalid(format!("need at least 1000 trials, got {trials}")));
    }
    let hits = block_sums(
        trials,
        seed,
        "core-set-tail",
        |r, len| {
            let mut hits = 0usize;
            for _ in 0..len {
                let pi = Permutation::random(n, r);
                let pit = Permutation::random(n, r);
                let idx1 = sample_subset(n, s, r);
                let idx2 = sample_subset(n, s, r);
                if core_set(&pi, &pit, &idx1, &idx2).vertices.len() == t {
                    hits += 1;
                }
            }
            hits
        },
        |a, b| a + b,
    );
    let frequency = hits as f64 / trials as f64;
    let bound = (s as f64 / n as f64).powi(2 * t as i32);
    let p = bound.min(1.0);
    let std_error = (p * (1.0 - p) / trials as f64).sqrt();
    Ok(TailCheck {
        frequency,
        bound,
        std_error,
        violated: frequency > bound + 3.0 * std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimates_are_reproducible() {
        let a = mc_mean(25_000, 9, "x", |r| r.sample::<f64, _>(StandardNormal));
        let b = mc_mean(25_000, 9, "x", |r| r.sample::<f64, _>(StandardNormal));
        assert_eq!(a, b);
        assert!(a.within(0.0, 4.0));
        assert!((a.std_error - 1.0 / (25_000f64).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn component_targets() {
        assert_eq!(ComponentKind::Path(3).expectation(0.5), 1.0);
        assert!((ComponentKind::Cycle(1).expectation(0.5) - 4.0 / 3.0).abs() < 1e-15);
        assert!((ComponentKind::Cycle(2).expectation(0.5) - 1.0 / (1.0 - 0.0625)).abs() < 1e-15);
    }

    #[test]
    fn component_expectations_match() {
        for rho in [0.3, 0.5, 0.7] {
            for kind in [
                ComponentKind::Path(1),
                ComponentKind::Path(2),
                ComponentKind::Cycle(1),
                ComponentKind::Cycle(2),
                ComponentKind::Cycle(3),
            ] {
                let est = mc_component_expectation(kind, rho, 200_000, 17).unwrap();
                assert!(est.within(kind.expectation(rho), 3.0), "{kind:?} rho={rho}: {est:?}");
            }
        }
        assert!(mc_component_expectation(ComponentKind::Path(2), 0.5, 10, 0).is_err());
        assert!(mc_component_expectation(ComponentKind::Cycle(0), 0.5, 1000, 0).is_err());
    }

    #[test]
    fn boundary_behaviour() {
        let n = 50;
        // log(1/(1 - rho^2)) = log 50 makes the two terms equal
        let rho = (1.0 - 1.0 / 50.0f64).sqrt();
        let b = sample_complexity_boundary(n, rho, 1.0).unwrap();
        assert!((b - 50f64.sqrt()).abs() < 1e-9);
        let b1 = sample_complexity_boundary(n, 1.0, 2.0).unwrap();
        assert!((b1 - 100f64.sqrt()).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for rho in [0.05, 0.2, 0.5, 0.8, 0.95, 0.999] {
            let v = sample_complexity_boundary(1000, rho, 1.0).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn overlap_law_matches_pmf() {
        let law = mc_overlap_law(12, 5, 50_000, 3).unwrap();
        let pmf: Vec<f64> = (0..=5)
            .map(|t| super::super::hypergeom_pmf(12, 5, t).unwrap())
            .collect();
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(total_variation(&law, &pmf) < 0.02);
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0]), 0.5);
    }

    #[test]
    fn tail_check_trivial_cases() {
        let c = core_set_tail_check(10, 4, 0, 2000, 1).unwrap();
        assert_eq!(c.bound, 1.0);
        assert!(!c.violated);
        let c = core_set_tail_check(5, 5, 1, 2000, 1).unwrap();
        assert_eq!(c.bound, 1.0);
        assert!(!c.violated);
    }
}
