//! Clique-based detection.
//!
//! 1. Sample `n1` distinct `k1`-subsets of the first graph and match each one
//!    exactly into the second graph.
//! 2. Keep the `n2` best-scoring clique matches.
//! 3. Among all `k2`-subsets of those, merge every compatible group into one
//!    injection and keep the merge with the best average edge score (the
//!    seed).
//! 4. Grow the seed greedily, one vertex pair at a time, up to `m` pairs, and
//!    threshold the final similarity score.
//!
//! Every argmax breaks ties toward the lexicographically smallest candidate,
//! so a run is fully determined by its inputs and seed, serial or parallel.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binom_u128, pairs};
use crate::error::{Error, Result};
use crate::exact::{decide, Decision};
use crate::model::{sample_subset, WeightedGraph};
use crate::rng;
use crate::similarity::{score_unchecked, similarity_score, PartialInjection, SimilarityKernel};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    /// Clique size.
    pub k1: usize,
    /// Number of cliques merged into the seed.
    pub k2: usize,
    /// Number of cliques sampled.
    pub n1: usize,
    /// Number of best cliques retained.
    pub n2: usize,
    /// Target mapping size.
    pub m: usize,
    pub kernel: SimilarityKernel,
    pub tau: f64,
    pub seed: u64,
}

impl AlgoParams {
    /// Checks the parameters against subgraphs with `s1` and `s2` vertices.
    pub fn validate(&self, s1: usize, s2: usize) -> Result<()> {
        self.kernel.validate()?;
        let s = s1.min(s2);
        if self.k1 < 2 || self.k1 > s {
            return Err(Error::invalid(format!(
                "clique size k1 = {} must lie in [2, {s}]",
                self.k1
            )));
        }
        if self.n1 == 0 || self.n2 == 0 || self.n2 > self.n1 {
            return Err(Error::invalid(format!(
                "need 1 <= n2 <= n1, got n1 = {}, n2 = {}",
                self.n1, self.n2
            )));
        }
        if self.k2 == 0 || self.k2 > self.n2 {
            return Err(Error::invalid(format!(
                "need 1 <= k2 <= n2, got k2 = {}, n2 = {}",
                self.k2, self.n2
            )));
        }
        if self.m == 0 || self.m > s {
            return Err(Error::invalid(format!(
                "mapping size m = {} must lie in [1, {s}]",
                self.m
            )));
        }
        if self.tau.is_nan() {
            return Err(Error::invalid("threshold is NaN"));
        }
        Ok(())
    }
}

/// A sampled vertex set of the first graph with its best injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueMatch {
    pub vertex_set: Vec<usize>,
    pub mapping: PartialInjection,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMapping {
    /// Merged injection, domain ascending.
    pub pi0: PartialInjection,
    /// Score over the seed domain divided by `binom(|domain|, 2)`.
    pub avg_score: f64,
    /// Positions (into the retained list) of the merged cliques.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub statistic: f64,
    pub decision: Decision,
    pub mapping: PartialInjection,
    pub seed: SeedMapping,
}

/// Upper bound of `f(x, y)` over the finite set of second-graph weights.
///
/// Every kernel is a concave quadratic or linear in `y`, so the maximum over
/// a sorted set sits at an endpoint (linear) or next to the vertex of the
/// parabola.
struct KernelBound {
    f: SimilarityKernel,
    ys: Vec<f64>,
}

impl KernelBound {
    fn new(f: SimilarityKernel, g: &WeightedGraph) -> Self {
        let mut ys: Vec<f64> = g.edges().map(|e| e.2).collect();
        ys.sort_by(f64::total_cmp);
        KernelBound { f, ys }
    }

    fn bound(&self, x: f64) -> f64 {
        let ys = &self.ys;
        if ys.is_empty() {
            return f64::NEG_INFINITY;
        }
        let f = self.f;
        let vertex = match f {
            SimilarityKernel::Overlap => {
                return f.eval(x, ys[0]).max(f.eval(x, ys[ys.len() - 1]));
            }
            SimilarityKernel::NegHalfSqDiff => x,
            SimilarityKernel::Mle { rho } => x / rho,
        };
        let i = ys.partition_point(|&y| y < vertex);
        let mut best = f64::NEG_INFINITY;
        for j in [i.wrapping_sub(1), i] {
            if let Some(&y) = ys.get(j) {
                best = best.max(f.eval(x, y));
            }
        }
        best
    }
}

/// A kernel fixed at compile time, so the inner loops vectorize.
trait EdgeKernel: Copy + Send + Sync {
    fn eval(self, x: f64, y: f64) -> f64;
}

#[derive(Clone, Copy)]
struct OverlapK;
#[derive(Clone, Copy)]
struct MseK;
#[derive(Clone, Copy)]
struct MleK(f64);

impl EdgeKernel for OverlapK {
    #[inline(always)]
    fn eval(self, x: f64, y: f64) -> f64 {
        SimilarityKernel::Overlap.eval(x, y)
    }
}

impl EdgeKernel for MseK {
    #[inline(always)]
    fn eval(self, x: f64, y: f64) -> f64 {
        SimilarityKernel::NegHalfSqDiff.eval(x, y)
    }
}

impl EdgeKernel for MleK {
    #[inline(always)]
    fn eval(self, x: f64, y: f64) -> f64 {
        SimilarityKernel::Mle { rho: self.0 }.eval(x, y)
    }
}

/// Branch-and-bound search for the best injection of `set` into `sub2`.
///
/// Images are assigned position by position in ascending vertex order, so
/// the first optimum reached is the lexicographically smallest image tuple.
/// A branch is cut only when even the per-edge upper bounds cannot reach the
/// incumbent, which leaves the optimum unchanged.
fn best_clique_injection(
    f: SimilarityKernel,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    bounds: &KernelBound,
    set: &[usize],
) -> Vec<usize> {
    match f {
        SimilarityKernel::Overlap => clique_search(OverlapK, sub1, sub2, bounds, set),
        SimilarityKernel::NegHalfSqDiff => clique_search(MseK, sub1, sub2, bounds, set),
        SimilarityKernel::Mle { rho } => clique_search(MleK(rho), sub1, sub2, bounds, set),
    }
}

struct CliqueSearch<'a, K> {
    f: K,
    sub2: &'a WeightedGraph,
    /// `x[q][j]`: first-graph weight between positions `j < q`.
    x: Vec<Vec<f64>>,
    remaining: Vec<f64>,
    used: Vec<bool>,
    current: Vec<usize>,
    /// Child scores, one buffer per depth.
    scratch: Vec<Vec<f64>>,
    best: f64,
    best_images: Vec<usize>,
}

impl<K: EdgeKernel> CliqueSearch<'_, K> {
    fn descend(&mut self, pos: usize, partial: f64) {
        let k = self.x.len();
        let n2 = self.sub2.n();
        let mut acc = std::mem::take(&mut self.scratch[pos]);
        acc.clear();
        acc.resize(n2, partial);
        // column-wise: one pass over the row of each placed image
        for j in 0..pos {
            let xj = self.x[pos][j];
            let row = self.sub2.row(self.current[j]);
            let f = self.f;
            for (a, &y) in acc.iter_mut().zip(row) {
                *a += f.eval(xj, y);
            }
        }
        for img in 0..n2 {
            if self.used[img] {
                continue;
            }
            let sc = acc[img];
            if pos + 1 == k {
                if sc > self.best {
                    self.best = sc;
                    self.best_images.clear();
                    self.best_images.extend_from_slice(&self.current[..pos]);
                    self.best_images.push(img);
                }
                continue;
            }
            let tol = 1e-9 * (1.0 + self.best.abs());
            if sc + self.remaining[pos] + tol < self.best {
                continue;
            }
            self.used[img] = true;
            self.current[pos] = img;
            self.descend(pos + 1, sc);
            self.used[img] = false;
        }
        self.scratch[pos] = acc;
    }
}

fn clique_search<K: EdgeKernel>(
    f: K,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    bounds: &KernelBound,
    set: &[usize],
) -> Vec<usize> {
    let k = set.len();
    let x: Vec<Vec<f64>> = (0..k)
        .map(|q| (0..q).map(|j| sub1.weight(set[j], set[q])).collect())
        .collect();
    // remaining[p]: bound on all pairs whose later endpoint is past position p
    let mut remaining = vec![0.0; k];
    for p in (0..k.saturating_sub(1)).rev() {
        let q = p + 1;
        let edge_bounds: f64 = x[q].iter().map(|&w| bounds.bound(w)).sum();
        remaining[p] = remaining[q] + edge_bounds;
    }
    let mut search = CliqueSearch {
        f,
        sub2,
        x,
        remaining,
        used: vec![false; sub2.n()],
        current: vec![0; k],
        scratch: vec![Vec::new(); k],
        best: f64::NEG_INFINITY,
        best_images: Vec::with_capacity(k),
    };
    search.descend(0, 0.0);
    search.best_images
}

/// Draws `n1` distinct `k1`-subsets of the first graph and matches each one
/// exactly. Output is in generation order.
pub fn match_cliques(
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    k1: usize,
    n1: usize,
    f: SimilarityKernel,
    seed: u64,
) -> Result<Vec<CliqueMatch>> {
    f.validate()?;
    let s1 = sub1.n();
    if k1 < 2 || k1 > s1 || k1 > sub2.n() {
        return Err(Error::invalid(format!(
            "clique size k1 = {k1} must lie in [2, min(s1, s2)]"
        )));
    }
    let available = binom_u128(s1, k1);
    if available < n1 as u128 {
        return Err(Error::NotEnoughCliques {
            requested: n1,
            available,
        });
    }

    let mut r = rng::stream(seed, "cliques");
    let mut seen = HashSet::with_capacity(n1);
    let mut sets = Vec::with_capacity(n1);
    while sets.len() < n1 {
        let set = sample_subset(s1, k1, &mut r);
        if seen.insert(set.clone()) {
            sets.push(set);
        }
    }

    let bounds = KernelBound::new(f, sub2);
    let solve = |set: Vec<usize>| {
        let images = best_clique_injection(f, sub1, sub2, &bounds, &set);
        let score = score_unchecked(f, sub1, sub2, &set, &images);
        CliqueMatch {
            mapping: PartialInjection::new_unchecked(set.clone(), images),
            vertex_set: set,
            score,
        }
    };
    #[cfg(feature = "parallel")]
    let out = sets.into_par_iter().map(solve).collect();
    #[cfg(not(feature = "parallel"))]
    let out = sets.into_iter().map(solve).collect();
    Ok(out)
}

/// The `n2` highest-scoring matches; equal scores keep generation order.
pub fn select_top(matches: &[CliqueMatch], n2: usize) -> Result<Vec<CliqueMatch>> {
    if n2 == 0 || n2 > matches.len() {
        return Err(Error::invalid(format!(
            "cannot keep {n2} of {} clique matches",
            matches.len()
        )));
    }
    let mut sorted = matches.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    sorted.truncate(n2);
    Ok(sorted)
}

/// Two clique matches can be merged when they agree on shared domain
/// vertices and send distinct domain vertices to distinct images.
fn compatible(a: &PartialInjection, b: &PartialInjection) -> bool {
    for (u, x) in a.pairs() {
        for (v, y) in b.pairs() {
            if (u == v) != (x == y) {
                return false;
            }
        }
    }
    true
}

struct Bitset {
    words: Vec<u64>,
}

impl Bitset {
    fn new(len: usize) -> Self {
        Bitset {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
}

struct SeedSearch<'a> {
    f: SimilarityKernel,
    sub1: &'a WeightedGraph,
    sub2: &'a WeightedGraph,
    top: &'a [CliqueMatch],
    compat: &'a [Bitset],
    pairs: &'a CrossScores,
    size: usize,
    chosen: Vec<usize>,
    /// Score of the merge so far, valid while every chosen domain is
    /// disjoint from the others.
    disjoint_score: Vec<f64>,
    merged: Vec<(usize, usize)>,
    domain: Vec<usize>,
    image: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl SeedSearch<'_> {
    fn evaluate(&mut self) {
        let (total, vertices) = match self.disjoint_score.last() {
            Some(&sc) if self.disjoint_score.len() == self.chosen.len() => {
                let v = self.chosen.iter().map(|&c| self.top[c].vertex_set.len()).sum();
                (sc, v)
            }
            _ => {
                self.merged.clear();
                for &c in &self.chosen {
                    self.merged.extend(self.top[c].mapping.pairs());
                }
                self.merged.sort_unstable();
                self.merged.dedup();
                self.domain.clear();
                self.image.clear();
                for &(u, x) in &self.merged {
                    self.domain.push(u);
                    self.image.push(x);
                }
                let sc = score_unchecked(self.f, self.sub1, self.sub2, &self.domain, &self.image);
                (sc, self.domain.len())
            }
        };
        let avg = total / pairs(vertices).max(1) as f64;
        if self.best.as_ref().is_none_or(|(b, _)| avg > *b) {
            self.best = Some((avg, self.chosen.clone()));
        }
    }

    fn push(&mut self, c: usize) {
        if self.disjoint_score.len() == self.chosen.len() {
            let mut sc = self.disjoint_score.last().copied().unwrap_or(0.0) + self.top[c].score;
            let mut ok = true;
            for &p in &self.chosen {
                match self.pairs.get(p, c, self) {
                    Some(x) => sc += x,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                self.disjoint_score.push(sc);
            }
        }
        self.chosen.push(c);
    }

    fn pop(&mut self) {
        if self.disjoint_score.len() == self.chosen.len() {
            self.disjoint_score.pop();
        }
        self.chosen.pop();
    }

    /// Extends `chosen` with compatible indices above the last one.
    fn descend(&mut self) {
        if self.chosen.len() == self.size {
            self.evaluate();
            return;
        }
        let start = self.chosen.last().map_or(0, |&c| c + 1);
        // indices compatible with everything chosen so far
        let mut cand = self.compat[self.chosen[0]].words.clone();
        for &p in &self.chosen[1..] {
            for (w, &o) in cand.iter_mut().zip(&self.compat[p].words) {
                *w &= o;
            }
        }
        for (wi, &word) in cand.iter().enumerate().skip(start / 64) {
            let mut bits = word;
            if wi == start / 64 {
                bits &= !0u64 << (start % 64);
            }
            while bits != 0 {
                let c = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                self.push(c);
                self.descend();
                self.pop();
            }
        }
    }
}

/// Cross scores between clique matches with disjoint domains: the kernel
/// summed over every pair with one endpoint in each clique. A disjoint
/// merge then scores as the clique scores plus all pairwise cross scores.
struct CrossScores {
    n: usize,
    /// Dense `n x n` table, NaN where domains overlap; skipped for large `n`.
    table: Option<Vec<f64>>,
}

const CROSS_TABLE_LIMIT: usize = 4096;

fn domains_disjoint(a: &PartialInjection, b: &PartialInjection) -> bool {
    a.domain().iter().all(|u| !b.domain().contains(u))
}

fn cross_score(
    f: SimilarityKernel,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    a: &PartialInjection,
    b: &PartialInjection,
) -> f64 {
    let mut sc = 0.0;
    for (u, x) in a.pairs() {
        let (r1, r2) = (sub1.row(u), sub2.row(x));
        for (v, y) in b.pairs() {
            sc += f.eval(r1[v], r2[y]);
        }
    }
    sc
}

impl CrossScores {
    fn new(
        f: SimilarityKernel,
        sub1: &WeightedGraph,
        sub2: &WeightedGraph,
        top: &[CliqueMatch],
        compat: &[Bitset],
    ) -> Self {
        let n = top.len();
        if n > CROSS_TABLE_LIMIT {
            return CrossScores { n, table: None };
        }
        let mut table = vec![f64::NAN; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let (ma, mb) = (&top[a].mapping, &top[b].mapping);
                if compat[a].get(b) && domains_disjoint(ma, mb) {
                    let x = cross_score(f, sub1, sub2, ma, mb);
                    table[a * n + b] = x;
                    table[b * n + a] = x;
                }
            }
        }
        CrossScores { n, table: Some(table) }
    }

    /// `None` when the two domains share a vertex.
    fn get(&self, a: usize, b: usize, s: &SeedSearch<'_>) -> Option<f64> {
        match &self.table {
            Some(t) => {
                let x = t[a * self.n + b];
                (!x.is_nan()).then_some(x)
            }
            None => {
                let (ma, mb) = (&s.top[a].mapping, &s.top[b].mapping);
                domains_disjoint(ma, mb).then(|| cross_score(s.f, s.sub1, s.sub2, ma, mb))
            }
        }
    }
}

fn merge_members(top: &[CliqueMatch], members: &[usize]) -> PartialInjection {
    let mut merged: Vec<(usize, usize)> = members.iter().flat_map(|&c| top[c].mapping.pairs()).collect();
    merged.sort_unstable();
    merged.dedup();
    let (d, i) = merged.into_iter().unzip();
    PartialInjection::new_unchecked(d, i)
}

/// Best average-score merge of `k2` mutually compatible clique matches.
///
/// When no compatible group of size `k2` exists the search retries with
/// `k2 - 1`, down to single cliques, which are always compatible.
pub fn find_seed(
    top: &[CliqueMatch],
    k2: usize,
    f: SimilarityKernel,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
) -> Result<SeedMapping> {
    if top.is_empty() {
        return Err(Error::invalid("no clique matches to build a seed from"));
    }
    if k2 == 0 || k2 > top.len() {
        return Err(Error::invalid(format!(
            "need 1 <= k2 <= {}, got {k2}",
            top.len()
        )));
    }
    let n = top.len();
    let mut compat: Vec<Bitset> = (0..n).map(|_| Bitset::new(n)).collect();
    for a in 0..n {
        for b in a + 1..n {
            if compatible(&top[a].mapping, &top[b].mapping) {
                compat[a].set(b);
                compat[b].set(a);
            }
        }
    }

    let cross = CrossScores::new(f, sub1, sub2, top, &compat);

    for size in (1..=k2).rev() {
        let run = |first: usize| {
            let mut search = SeedSearch {
                f,
                sub1,
                sub2,
                top,
                compat: &compat,
                pairs: &cross,
                size,
                chosen: Vec::with_capacity(size),
                disjoint_score: Vec::with_capacity(size),
                merged: Vec::new(),
                domain: Vec::new(),
                image: Vec::new(),
                best: None,
            };
            search.push(first);
            search.descend();
            search.best
        };
        let pick = |a: Option<(f64, Vec<usize>)>, b: Option<(f64, Vec<usize>)>| match (a, b) {
            (Some(x), Some(y)) => {
                if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                    Some(y)
                } else {
                    Some(x)
                }
            }
            (x, None) => x,
            (None, y) => y,
        };
        #[cfg(feature = "parallel")]
        let best = (0..n).into_par_iter().map(run).reduce(|| None, pick);
        #[cfg(not(feature = "parallel"))]
        let best = (0..n).map(run).fold(None, pick);

        if let Some((avg_score, members)) = best {
            let pi0 = merge_members(top, &members);
            return Ok(SeedMapping {
                pi0,
                avg_score,
                members,
            });
        }
    }
    Err(Error::Invariant("singleton seeds are always compatible".into()))
}

/// Greedily appends the vertex pair with the largest total kernel value
/// against the current mapping until it holds `m` pairs.
pub fn extend_mapping(
    seed: &SeedMapping,
    sub1: &WeightedGraph,
    sub2: &WeightedGraph,
    m: usize,
    f: SimilarityKernel,
) -> Result<PartialInjection> {
    let mut pi = seed.pi0.clone();
    pi.check_bounds(sub1.n(), sub2.n())?;
    if pi.len() > m {
        return Err(Error::invalid(format!(
            "seed already has {} pairs, more than m = {m}",
            pi.len()
        )));
    }
    if m > sub1.n() || m > sub2.n() {
        return Err(Error::invalid(format!(
            "m = {m} exceeds the subgraph sizes ({}, {})",
            sub1.n(),
            sub2.n()
        )));
    }
    let (n1, n2) = (sub1.n(), sub2.n());
    let mut used1 = vec![false; n1];
    let mut used2 = vec![false; n2];
    // gain[v1 * n2 + v2] = sum over mapped (v, w) of f(b1(v1, v), b2(v2, w))
    let mut gain = vec![0.0; n1 * n2];
    let add_pair = |gain: &mut [f64], v: usize, w: usize| {
        let r1 = sub1.row(v);
        let r2 = sub2.row(w);
        for v1 in 0..n1 {
            let x = r1[v1];
            let row = &mut gain[v1 * n2..(v1 + 1) * n2];
            for (v2, g) in row.iter_mut().enumerate() {
                *g += f.eval(x, r2[v2]);
            }
        }
    };
    for (v, w) in pi.pairs() {
        used1[v] = true;
        used2[w] = true;
        add_pair(&mut gain, v, w);
    }
    while pi.len() < m {
        let mut best: Option<(f64, usize, usize)> = None;
        for v1 in (0..n1).filter(|&v| !used1[v]) {
            for v2 in (0..n2).filter(|&v| !used2[v]) {
                let g = gain[v1 * n2 + v2];
                if best.is_none_or(|(b, _, _)| g > b) {
                    best = Some((g, v1, v2));
                }
            }
        }
        let (_, v1, v2) = best.ok_or_else(|| Error::Invariant("no free vertex pair".into()))?;
        used1[v1] = true;
        used2[v2] = true;
        pi.push(v1, v2);
        add_pair(&mut gain, v1, v2);
    }
    Ok(pi)
}

/// Runs the full pipeline and thresholds the final similarity score.
///
/// A seed that already holds `m` or more pairs is scored as is, mirroring
/// the `while |S0| < m` guard of the growth loop.
pub fn detect(sub1: &WeightedGraph, sub2: &WeightedGraph, params: &AlgoParams) -> Result<Detection> {
    params.validate(sub1.n(), sub2.n())?;
    let f = params.kernel;
    let matches = match_cliques(sub1, sub2, params.k1, params.n1, f, params.seed)?;
    let top = select_top(&matches, params.n2)?;
    let seed = find_seed(&top, params.k2, f, sub1, sub2)?;
    let mapping = if seed.pi0.len() >= params.m {
        seed.pi0.clone()
    } else {
        extend_mapping(&seed, sub1, sub2, params.m, f)?
    };
    let statistic = similarity_score(f, sub1, sub2, &mapping)?;
    Ok(Detection {
        statistic,
        decision: decide(statistic, params.tau),
        mapping,
        seed,
    })
}
