//! Gaussian Wigner graph pairs, induced-subgraph sampling and edge-list I/O.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::similarity::PartialInjection;

/// Complete weighted graph on `n` labelled vertices with a symmetric weight
/// per unordered pair of distinct vertices. Stored densely; the diagonal is
/// held at zero and never read as an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<f64>,
}

impl WeightedGraph {
    pub fn zeros(n: usize) -> Self {
        WeightedGraph {
            n,
            weights: vec![0.0; n * n],
        }
    }

    /// Builds a graph from `f(u, v)` evaluated once per pair `u < v`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut g = Self::zeros(n);
        for u in 0..n {
            for v in u + 1..n {
                g.set(u, v, f(u, v));
            }
        }
        g
    }

    /// Builds a graph from a full square matrix, checking symmetry.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("weight matrix is not square"));
        }
        for u in 0..n {
            for v in u + 1..n {
                if rows[u][v] != rows[v][u] {
                    return Err(Error::invalid(format!(
                        "weight matrix not symmetric at ({u}, {v})"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |u, v| rows[u][v]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights[u * self.n + v]
    }

    /// Sets the weight of the unordered pair `{u, v}`.
    ///
    /// Panics on `u == v`: self-loops are not edges.
    pub fn set(&mut self, u: usize, v: usize, w: f64) {
        assert_ne!(u, v, "self-loops are not edges");
        self.weights[u * self.n + v] = w;
        self.weights[v * self.n + u] = w;
    }

    /// Row `u` of the dense matrix (entry `u` is the unused diagonal).
    #[inline]
    pub fn row(&self, u: usize) -> &[f64] {
        &self.weights[u * self.n..(u + 1) * self.n]
    }

    /// Iterates `(u, v, weight)` over unordered pairs with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |u| (u + 1..self.n).map(move |v| (u, v, self.weight(u, v))))
    }

    pub fn edge_count(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    /// Subgraph induced by `idx`; local vertex `a` is parent vertex `idx[a]`.
    pub fn induced(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |a, b| self.weight(idx[a], idx[b]))
    }

    /// Relabels vertices: vertex `v` of `self` becomes `perm[v]` in the result.
    pub fn relabeled(&self, perm: &Permutation) -> Self {
        let mut g = Self::zeros(self.n);
        for (u, v, w) in self.edges() {
            g.set(perm.apply(u), perm.apply(v), w);
        }
        g
    }
}

/// A bijection on `[n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &x in &image {
            if x >= n || seen[x] {
                return Err(Error::invalid(format!(
                    "not a permutation of [{n}]: {image:?}"
                )));
            }
            seen[x] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            image: (0..n).collect(),
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut image: Vec<usize> = (0..n).collect();
        image.shuffle(rng);
        Permutation { image }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    #[inline]
    pub fn apply(&self, v: usize) -> usize {
        self.image[v]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (v, &w) in self.image.iter().enumerate() {
            inv[w] = v;
        }
        Permutation { image: inv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Null,
    Alt,
}

impl Hypothesis {
    pub fn as_str(self) -> &'static str {
        match self {
            Hypothesis::Null => "null",
            Hypothesis::Alt => "alt",
        }
    }
}

impl std::str::FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null" => Ok(Hypothesis::Null),
            "alt" => Ok(Hypothesis::Alt),
            other => Err(Error::invalid(format!("unknown hypothesis {other:?}"))),
        }
    }
}

/// Two parent graphs on the same vertex count. Under `Alt` the pair carries
/// the latent permutation and correlation used to build it.
#[derive(Debug, Clone)]
pub struct GraphPairInstance {
    pub g1: WeightedGraph,
    pub g2: WeightedGraph,
    pub hypothesis: Hypothesis,
    pub latent_perm: Option<Permutation>,
    pub rho: Option<f64>,
}

/// Induced subgraphs of the two parents plus the parent indices they came
/// from (ascending).
#[derive(Debug, Clone)]
pub struct SampledSubgraphs {
    pub sub1: WeightedGraph,
    pub sub2: WeightedGraph,
    pub idx1: Vec<usize>,
    pub idx2: Vec<usize>,
}

fn normal_graph(n: usize, rng: &mut rng::Rng) -> WeightedGraph {
    WeightedGraph::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Draws a pair of Gaussian Wigner graphs.
///
/// Under `Alt`, `G2` is built so that the edge `pi(u)pi(v)` of `G2` equals
/// `rho * b + sqrt(1 - rho^2) * z` where `b` is the weight of `uv` in `G1` and
/// `z` is fresh noise; both marginals stay standard normal.
pub fn generate_pair(
    n: usize,
    rho: f64,
    hypothesis: Hypothesis,
    seed: u64,
) -> Result<GraphPairInstance> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2, got {n}")));
    }
    let g1 = normal_graph(n, &mut rng::stream(seed, "weights1"));
    match hypothesis {
        Hypothesis::Null => {
            let g2 = normal_graph(n, &mut rng::stream(seed, "weights2"));
            Ok(GraphPairInstance {
                g1,
                g2,
                hypothesis,
                latent_perm: None,
                rho: None,
            })
        }
        Hypothesis::Alt => {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::invalid(format!("rho must lie in (0,1), got {rho}")));
            }
            let perm = Permutation::random(n, &mut rng::stream(seed, "latent_perm"));
            let mut noise = rng::stream(seed, "noise");
            let scale = (1.0 - rho * rho).sqrt();
            let mut g2 = WeightedGraph::zeros(n);
            for (u, v, b) in g1.edges() {
                let z: f64 = noise.sample(StandardNormal);
                g2.set(perm.apply(u), perm.apply(v), rho * b + scale * z);
            }
            Ok(GraphPairInstance {
                g1,
                g2,
                hypothesis,
                latent_perm: Some(perm),
                rho: Some(rho),
            })
        }
    }
}

/// Uniform `s`-subset of `[n]` by partial Fisher-Yates, returned ascending.
pub fn sample_subset<R: rand::Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(s);
    pool.sort_unstable();
    pool
}

/// Independently samples `s` vertices from each parent and takes the induced
/// subgraphs.
pub fn sample_subgraphs(pair: &GraphPairInstance, s: usize, seed: u64) -> Result<SampledSubgraphs> {
    let n = pair.g1.n();
    if s == 0 || s > n {
        return Err(Error::invalid(format!("need 1 <= s <= n = {n}, got s = {s}")));
    }
    let idx1 = sample_subset(n, s, &mut rng::stream(seed, "idx1"));
    let idx2 = sample_subset(n, s, &mut rng::stream(seed, "idx2"));
    Ok(SampledSubgraphs {
        sub1: pair.g1.induced(&idx1),
        sub2: pair.g2.induced(&idx2),
        idx1,
        idx2,
    })
}

/// Local indices of the common vertices `(S, T)`: `S` holds the side-1
/// vertices whose latent image was also sampled, `T` the side-2 vertices
/// hit by a sampled side-1 vertex. Both ascending, equal length.
pub fn common_vertex_sets(
    idx1: &[usize],
    idx2: &[usize],
    latent_perm: &Permutation,
) -> (Vec<usize>, Vec<usize>) {
    let n = latent_perm.len();
    let mut pos2 = vec![usize::MAX; n];
    for (b, &v) in idx2.iter().enumerate() {
        pos2[v] = b;
    }
    let mut s = Vec::new();
    let mut t = Vec::new();
    for (a, &u) in idx1.iter().enumerate() {
        let b = pos2[latent_perm.apply(u)];
        if b != usize::MAX {
            s.push(a);
            t.push(b);
        }
    }
    t.sort_unstable();
    (s, t)
}

/// The restriction of the latent permutation to the common vertex sets, as a
/// partial injection between the sampled subgraphs.
pub fn latent_injection(sample: &SampledSubgraphs, latent_perm: &Permutation) -> PartialInjection {
    let mut pos2 = HashMap::with_capacity(sample.idx2.len());
    for (b, &v) in sample.idx2.iter().enumerate() {
        pos2.insert(v, b);
    }
    let (domain, image): (Vec<usize>, Vec<usize>) = sample
        .idx1
        .iter()
        .enumerate()
        .filter_map(|(a, &u)| pos2.get(&latent_perm.apply(u)).map(|&b| (a, b)))
        .unzip();
    PartialInjection::new_unchecked(domain, image)
}

/// `m = floor((1 - epsilon) s^2 / n)`, the size of the mappings searched.
pub fn mapping_size_m(n: usize, s: usize, epsilon: f64) -> Result<usize> {
    if n == 0 || s == 0 || s > n {
        return Err(Error::invalid(format!("need 1 <= s <= n, got n = {n}, s = {s}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let m = ((1.0 - epsilon) * (s * s) as f64 / n as f64).floor() as usize;
    if m < 1 {
        return Err(Error::SampleTooSmall(format!(
            "floor((1 - {epsilon}) * {s}^2 / {n}) = 0"
        )));
    }
    Ok(m)
}

/// Reads a `u,v,weight` edge list (header required, 0-based ids).
///
/// Pairs that never appear get weight 0. A repeated pair must repeat the same
/// weight; self-loops are rejected.
pub fn load_graph_from_edge_list(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let data_err = |msg: String| Error::Data {
        path: path.to_path_buf(),
        msg,
    };

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "u,v,weight" => {}
        _ => return Err(parse_err(1, "expected header `u,v,weight`".into())),
    }

    let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
    let mut max_id = None;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(lineno, format!("expected 3 fields, found {}", fields.len())));
        }
        let u: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad vertex id {:?}", fields[0])))?;
        let v: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad vertex id {:?}", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad weight {:?}", fields[2])))?;
        if !w.is_finite() {
            return Err(parse_err(lineno, format!("non-finite weight {w}")));
        }
        if u == v {
            return Err(data_err(format!("line {lineno}: self-loop on vertex {u}")));
        }
        let key = (u.min(v), u.max(v));
        if let Some(&prev) = seen.get(&key) {
            if prev != w {
                return Err(data_err(format!(
                    "line {lineno}: pair ({}, {}) has conflicting weights {prev} and {w}",
                    key.0, key.1
                )));
            }
        }
        seen.insert(key, w);
        max_id = Some(max_id.unwrap_or(0).max(key.1));
    }

    let n = match max_id {
        Some(m) => m + 1,
        None => return Err(data_err("edge list contains no edges".into())),
    };
    let mut g = WeightedGraph::zeros(n);
    for ((u, v), w) in seen {
        g.set(u, v, w);
    }
    Ok(g)
}

/// Dense dump: one `u,v,weight` row per pair with `u < v`.
pub fn graph_to_csv(g: &WeightedGraph) -> String {
    let mut out = String::from("u,v,weight\n");
    for (u, v, w) in g.edges() {
        let _ = writeln!(out, "{u},{v},{w}");
    }
    out
}

pub fn write_graph_csv(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, graph_to_csv(g)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in xs.iter().zip(ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn null_pair_is_deterministic() {
        let a = generate_pair(2, 0.0, Hypothesis::Null, 7).unwrap();
        let b = generate_pair(2, 0.0, Hypothesis::Null, 7).unwrap();
        assert_eq!(a.g1, b.g1);
        assert_eq!(a.g2, b.g2);
        assert_eq!(a.g1.edge_count(), 1);
        assert!(a.latent_perm.is_none());
    }

    #[test]
    fn alt_pair_has_target_correlation() {
        let pair = generate_pair(100, 0.99, Hypothesis::Alt, 3).unwrap();
        let perm = pair.latent_perm.as_ref().unwrap();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pair
            .g1
            .edges()
            .map(|(u, v, w)| (w, pair.g2.weight(perm.apply(u), perm.apply(v))))
            .unzip();
        assert_eq!(xs.len(), 4950);
        let r = pearson(&xs, &ys);
        assert!((r - 0.99).abs() <= 3.0 / (4950f64).sqrt(), "r = {r}");
        assert!((r - 0.99).abs() <= 0.01, "r = {r}");

        for g in [&pair.g1, &pair.g2] {
            let w: Vec<f64> = g.edges().map(|e| e.2).collect();
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
            assert!(mean.abs() <= 0.05, "mean {mean}");
            assert!((var - 1.0).abs() <= 0.1, "var {var}");
        }
    }

    #[test]
    fn generate_rejects_bad_parameters() {
        assert!(matches!(
            generate_pair(1, 0.5, Hypothesis::Null, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(generate_pair(5, 1.0, Hypothesis::Alt, 0).is_err());
        assert!(generate_pair(5, 0.0, Hypothesis::Alt, 0).is_err());
    }

    #[test]
    fn full_and_singleton_samples() {
        let pair = generate_pair(6, 0.9, Hypothesis::Alt, 1).unwrap();
        let full = sample_subgraphs(&pair, 6, 2).unwrap();
        assert_eq!(full.idx1, (0..6).collect::<Vec<_>>());
        assert_eq!(full.idx2, (0..6).collect::<Vec<_>>());
        assert_eq!(full.sub1, pair.g1);
        assert_eq!(full.sub2, pair.g2);

        let one = sample_subgraphs(&pair, 1, 2).unwrap();
        assert_eq!(one.sub1.edge_count(), 0);
        assert_eq!(one.sub2.edge_count(), 0);

        assert!(sample_subgraphs(&pair, 7, 2).is_err());
    }

    #[test]
    fn induced_subgraph_copies_parent_weights() {
        let pair = generate_pair(12, 0.5, Hypothesis::Alt, 9).unwrap();
        let smp = sample_subgraphs(&pair, 5, 10).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                if a != b {
                    assert_eq!(smp.sub1.weight(a, b), pair.g1.weight(smp.idx1[a], smp.idx1[b]));
                    assert_eq!(smp.sub2.weight(a, b), pair.g2.weight(smp.idx2[a], smp.idx2[b]));
                }
            }
        }
    }

    #[test]
    fn changing_s_keeps_weights() {
        let a = generate_pair(10, 0.5, Hypothesis::Alt, 4).unwrap();
        let s1 = sample_subgraphs(&a, 3, 5).unwrap();
        let s2 = sample_subgraphs(&a, 8, 5).unwrap();
        assert_eq!(s1.sub1.weight(0, 1), a.g1.weight(s1.idx1[0], s1.idx1[1]));
        assert_eq!(s2.sub1.weight(0, 1), a.g1.weight(s2.idx1[0], s2.idx1[1]));
    }

    #[test]
    fn common_sets_examples() {
        let id = Permutation::identity(6);
        let (s, t) = common_vertex_sets(&[0, 1, 2], &[2, 3, 4], &id);
        assert_eq!(s, vec![2]);
        assert_eq!(t, vec![0]);

        let (s, t) = common_vertex_sets(&[0, 1, 2], &[3, 4, 5], &id);
        assert!(s.is_empty() && t.is_empty());

        let all: Vec<usize> = (0..6).collect();
        let (s, t) = common_vertex_sets(&all, &all, &id);
        assert_eq!(s, all);
        assert_eq!(t, all);
    }

    #[test]
    fn mapping_size_examples() {
        assert_eq!(mapping_size_m(50, 25, 0.01).unwrap(), 12);
        assert_eq!(mapping_size_m(50, 40, 0.01).unwrap(), 31);
        assert!(matches!(
            mapping_size_m(50, 7, 0.01),
            Err(Error::SampleTooSmall(_))
        ));
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let inv = p.inverse();
        for v in 0..3 {
            assert_eq!(inv.apply(p.apply(v)), v);
        }
    }
}
