//! Bivariate edge kernels and the similarity score of a partial injection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WeightedGraph;

/// The kernel `f` applied to each matched pair of edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKernel {
    /// `f(x, y) = x y`
    Overlap,
    /// `f(x, y) = -(x - y)^2 / 2`
    #[serde(rename = "mse")]
    NegHalfSqDiff,
    /// `f(x, y) = -rho^2 (x^2 + y^2) + 2 rho x y`, with the detector's
    /// assumed correlation.
    Mle { rho: f64 },
}

impl SimilarityKernel {
    pub fn mle(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid(format!("MLE kernel needs rho in (0,1), got {rho}")));
        }
        Ok(SimilarityKernel::Mle { rho })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SimilarityKernel::Mle { rho } => Self::mle(rho).map(|_| ()),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            SimilarityKernel::Overlap => x * y,
            SimilarityKernel::NegHalfSqDiff => {
                let d = x - y;
                -0.5 * d * d
            }
            SimilarityKernel::Mle { rho } => -rho * rho * (x * x + y * y) + 2.0 * rho * (x * y),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimilarityKernel::Overlap => "overlap",
            SimilarityKernel::NegHalfSqDiff => "mse",
            SimilarityKernel::Mle { .. } => "mle",
        }
    }
}

pub fn kernel_eval(f: SimilarityKernel, x: f64, y: f64) -> f64 {
    f.eval(x, y)
}

/// Injective map from a subset of the first graph's vertices into the second
/// graph, paired positionally: `domain[k] -> image[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartialInjection {
    domain: Vec<usize>,
    image: Vec<usize>,
}

fn has_duplicates(xs: &[usize]) -> bool {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.windows(2).any(|w| w[0] == w[1])
}

impl PartialInjection {
    pub fn new(domain: Vec<usize>, image: Vec<usize>) -> Result<Self> {
        if domain.len() != image.len() {
            return Err(Error::InvalidMapping(format!(
                "domain has {} entries, image has {}",
                domain.len(),
                image.len()
            )));
        }
        if has_duplicates(&domain) {
            return Err(Error::InvalidMapping(format!("repeated domain vertex in {domain:?}")));
        }
        if has_duplicates(&image) {
            return Err(Error::InvalidMapping(format!("repeated image vertex in {image:?}")));
        }
        Ok(PartialInjection { domain, image })
    }

    pub(crate) fn new_unchecked(domain: Vec<usize>, image: Vec<usize>) -> Self {
        debug_assert_eq!(domain.len(), image.len());
        PartialInjection { domain, image }
    }

    pub fn identity(m: usize) -> Self {
        PartialInjection {
            domain: (0..m).collect(),
            image: (0..m).collect(),
        }
    }

    pub fn domain(&self) -> &[usize] {
        &self.domain
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.domain.iter().copied().zip(self.image.iter().copied())
    }

    /// Image of `v`, if `v` is in the domain.
    pub fn get(&self, v: usize) -> Option<usize> {
        self.domain.iter().position(|&d| d == v).map(|k| self.image[k])
    }

    pub(crate) fn push(&mut self, v1: usize, v2: usize) {
        self.domain.push(v1);
        self.image.push(v2);
    }

    /// Checks that every index fits the given vertex counts.
    pub fn check_bounds(&self, n1: usize, n2: usize) -> Result<()> {
        if let Some(&v) = self.domain.iter().find(|&&v| v >= n1) {
            return Err(Error::InvalidMapping(format!(
                "domain vertex {v} out of range for {n1} vertices"
            )));
        }
        if let Some(&v) = self.image.iter().find(|&&v| v >= n2) {
            return Err(Error::InvalidMapping(format!(
                "image vertex {v} out of range for {n2} vertices"
            )));
        }
        Ok(())
    }
}

/// Sum over unordered domain pairs without bounds checks. Pairs are visited
/// in positional order `(j, k)` with `j < k`.
#[inline]
pub(crate) fn score_unchecked(
    f: SimilarityKernel,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    domain: &[usize],
    image: &[usize],
) -> f64 {
    let mut total = 0.0;
    for k in 1..domain.len() {
        let r1 = sub1.row(domain[k]);
        let r2 = sub2.row(image[k]);
        for j in 0..k {
            total += f.eval(r1[domain[j]], r2[image[j]]);
        }
    }
    total
}

/// `e(H_pi^f)`: the kernel summed over every unordered pair of domain
/// vertices and their images. Zero when the domain has fewer than two
/// vertices.
pub fn similarity_score(
    f: SimilarityKernel,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    pi: &PartialInjection,
) -> Result<f64> {
    pi.check_bounds(sub1.n(), sub2.n())?;
    Ok(score_unchecked(f, sub1, sub2, &pi.domain, &pi.image))
}

/// Similarity score divided by `binom(s, 2)`.
pub fn normalized_score(
    f: SimilarityKernel,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    pi: &PartialInjection,
    s: usize,
) -> Result<f64> {
    if s < 2 {
        return Err(Error::invalid(format!("normalisation needs s >= 2, got {s}")));
    }
    let pairs = (s * (s - 1) / 2) as f64;
    Ok(similarity_score(f, sub1, sub2, pi)? / pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tri(w01: f64, w02: f64, w12: f64) -> WeightedGraph {
        let mut g = WeightedGraph::zeros(3);
        g.set(0, 1, w01);
        g.set(0, 2, w02);
        g.set(1, 2, w12);
        g
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_eval(SimilarityKernel::Overlap, 2.0, 3.0), 6.0);
        assert_eq!(kernel_eval(SimilarityKernel::NegHalfSqDiff, 1.7, 1.7), 0.0);
        let mle = SimilarityKernel::mle(0.5).unwrap();
        assert!((kernel_eval(mle, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!(SimilarityKernel::mle(1.0).is_err());
    }

    #[test]
    fn three_vertex_overlap_score() {
        let g1 = tri(1.0, 2.0, 3.0);
        let g2 = tri(1.0, -1.0, 2.0);
        let pi = PartialInjection::identity(3);
        let s = similarity_score(SimilarityKernel::Overlap, &g1, &g2, &pi).unwrap();
        assert_eq!(s, 5.0);
    }

    #[test]
    fn singleton_domain_scores_zero() {
        let g = tri(1.0, 2.0, 3.0);
        let pi = PartialInjection::new(vec![2], vec![0]).unwrap();
        for f in [
            SimilarityKernel::Overlap,
            SimilarityKernel::NegHalfSqDiff,
            SimilarityKernel::Mle { rho: 0.3 },
        ] {
            assert_eq!(similarity_score(f, &g, &g, &pi).unwrap(), 0.0);
        }
    }

    #[test]
    fn self_overlap_is_sum_of_squares() {
        let g = tri(1.0, -2.0, 0.5);
        let pi = PartialInjection::identity(3);
        let s = similarity_score(SimilarityKernel::Overlap, &g, &g, &pi).unwrap();
        assert_eq!(s, 1.0 + 4.0 + 0.25);
    }

    #[test]
    fn out_of_range_mapping_is_rejected() {
        let g = tri(1.0, 2.0, 3.0);
        let pi = PartialInjection::new(vec![0, 3], vec![0, 1]).unwrap();
        assert!(matches!(
            similarity_score(SimilarityKernel::Overlap, &g, &g, &pi),
            Err(Error::InvalidMapping(_))
        ));
        assert!(PartialInjection::new(vec![0, 0], vec![1, 2]).is_err());
        assert!(PartialInjection::new(vec![0, 1], vec![2, 2]).is_err());
        assert!(PartialInjection::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn normalized_examples() {
        // five vertices, all ten pairs weight 1 on both sides: overlap score 10
        let g = WeightedGraph::from_fn(5, |_, _| 1.0);
        let pi = PartialInjection::identity(5);
        let v = normalized_score(SimilarityKernel::Overlap, &g, &g, &pi, 5).unwrap();
        assert_eq!(v, 1.0);
        let z = WeightedGraph::zeros(5);
        assert_eq!(normalized_score(SimilarityKernel::Overlap, &z, &g, &pi, 4).unwrap(), 0.0);
        assert!(normalized_score(SimilarityKernel::Overlap, &g, &g, &pi, 1).is_err());
    }

    fn graph_strategy(n: usize) -> impl Strategy<Value = WeightedGraph> {
        proptest::collection::vec(-3.0f64..3.0, n * (n - 1) / 2).prop_map(move |w| {
            let mut it = w.into_iter();
            WeightedGraph::from_fn(n, |_, _| it.next().unwrap())
        })
    }

    fn kernel_strategy() -> impl Strategy<Value = SimilarityKernel> {
        prop_oneof![
            Just(SimilarityKernel::Overlap),
            Just(SimilarityKernel::NegHalfSqDiff),
            (0.05f64..0.95).prop_map(|rho| SimilarityKernel::Mle { rho }),
        ]
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric(x in -5.0f64..5.0, y in -5.0f64..5.0, f in kernel_strategy()) {
            prop_assert_eq!(f.eval(x, y), f.eval(y, x));
        }

        #[test]
        fn mse_score_is_nonpositive(g1 in graph_strategy(5), g2 in graph_strategy(5)) {
            let pi = PartialInjection::new(vec![4, 0, 2], vec![1, 3, 0]).unwrap();
            prop_assert!(similarity_score(SimilarityKernel::NegHalfSqDiff, &g1, &g2, &pi).unwrap() <= 0.0);
        }

        #[test]
        fn relabeling_side_one_preserves_score(
            g1 in graph_strategy(5),
            g2 in graph_strategy(5),
            f in kernel_strategy(),
            perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let p = crate::model::Permutation::new(perm).unwrap();
            let pi = PartialInjection::new(vec![0, 3, 1, 4], vec![2, 0, 4, 1]).unwrap();
            let before = similarity_score(f, &g1, &g2, &pi).unwrap();
            let g1r = g1.relabeled(&p);
            let dom: Vec<usize> = pi.domain().iter().map(|&v| p.apply(v)).collect();
            let pir = PartialInjection::new(dom, pi.image().to_vec()).unwrap();
            let after = similarity_score(f, &g1r, &g2, &pir).unwrap();
            prop_assert!((before - after).abs() <= 1e-9 * (1.0 + before.abs()));
        }

        #[test]
        fn score_splits_over_subdomain(g1 in graph_strategy(5), g2 in graph_strategy(5), f in kernel_strategy(), cut in 0usize..=5) {
            // score(S) = score(S') + score(S \ S') + cross terms, by brute-force expansion
            let pi = PartialInjection::new(vec![3, 1, 4, 0, 2], vec![0, 2, 1, 4, 3]).unwrap();
            let total = similarity_score(f, &g1, &g2, &pi).unwrap();
            let (d, i) = (pi.domain(), pi.image());
            let head = PartialInjection::new(d[..cut].to_vec(), i[..cut].to_vec()).unwrap();
            let tail = PartialInjection::new(d[cut..].to_vec(), i[cut..].to_vec()).unwrap();
            let mut cross = 0.0;
            for a in 0..cut {
                for b in cut..5 {
                    cross += f.eval(g1.weight(d[a], d[b]), g2.weight(i[a], i[b]));
                }
            }
            let parts = similarity_score(f, &g1, &g2, &head).unwrap()
                + similarity_score(f, &g1, &g2, &tail).unwrap()
                + cross;
            prop_assert!((total - parts).abs() <= 1e-9 * (1.0 + total.abs()));
        }
    }
}
