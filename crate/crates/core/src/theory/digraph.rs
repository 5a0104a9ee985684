//! Correlated functional digraph of two vertex bijections and its
//! path/cycle decomposition.
//!
//! Nodes are vertex pairs ("edge-nodes") of the sampled subgraphs. Every
//! side-one edge-node `e` in the common set of `pi` gets an arc to `pi(e)`;
//! every side-one edge-node `e` in the common set of `pit` is fused with
//! `pit(e)`. Fusion is a quotient, done with a union-find over node keys.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{common_vertex_sets, Permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKey {
    /// Unordered pair of parent vertices of the first graph, low id first.
    Side1(usize, usize),
    /// Unordered pair of parent vertices of the second graph.
    Side2(usize, usize),
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so node numbering is deterministic
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// A node after fusion: at most one side-one and one side-two key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub side1: Option<(usize, usize)>,
    pub side2: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct FunctionalDigraph {
    pub nodes: Vec<Node>,
    /// `(from, to)` node indices, one per side-one edge in the common set of
    /// `pi`.
    pub arcs: Vec<(usize, usize)>,
}

fn parent_common(idx1: &[usize], idx2: &[usize], perm: &Permutation) -> Vec<usize> {
    let (s, _) = common_vertex_sets(idx1, idx2, perm);
    s.into_iter().map(|a| idx1[a]).collect()
}

fn pair_keys(vs: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..vs.len()).flat_map(move |i| (i + 1..vs.len()).map(move |j| ordered(vs[i], vs[j])))
}

/// Builds the digraph for bijections `pi`, `pit` on the parent vertex set
/// and the sampled parent indices `idx1`, `idx2`.
pub fn build_digraph(
    pi: &Permutation,
    pit: &Permutation,
    idx1: &[usize],
    idx2: &[usize],
) -> FunctionalDigraph {
    let s_pi = parent_common(idx1, idx2, pi);
    let s_pit = parent_common(idx1, idx2, pit);

    let mut ids: HashMap<EdgeKey, usize> = HashMap::new();
    let mut keys: Vec<EdgeKey> = Vec::new();
    let mut intern = |k: EdgeKey| {
        *ids.entry(k).or_insert_with(|| {
            keys.push(k);
            keys.len() - 1
        })
    };

    let mut arcs_raw = Vec::new();
    for (u, v) in pair_keys(&s_pi) {
        let from = intern(EdgeKey::Side1(u, v));
        let (a, b) = ordered(pi.apply(u), pi.apply(v));
        let to = intern(EdgeKey::Side2(a, b));
        arcs_raw.push((from, to));
    }
    let mut merges = Vec::new();
    for (u, v) in pair_keys(&s_pit) {
        let e = intern(EdgeKey::Side1(u, v));
        let (a, b) = ordered(pit.apply(u), pit.apply(v));
        let f = intern(EdgeKey::Side2(a, b));
        merges.push((e, f));
    }

    let mut uf = UnionFind::new(keys.len());
    for &(e, f) in &merges {
        uf.union(e, f);
    }
    let mut class_of = vec![usize::MAX; keys.len()];
    let mut nodes: Vec<Node> = Vec::new();
    for k in 0..keys.len() {
        let root = uf.find(k);
        if class_of[root] == usize::MAX {
            class_of[root] = nodes.len();
            nodes.push(Node {
                side1: None,
                side2: None,
            });
        }
        let node = &mut nodes[class_of[root]];
        match keys[k] {
            EdgeKey::Side1(u, v) => node.side1 = Some((u, v)),
            EdgeKey::Side2(a, b) => node.side2 = Some((a, b)),
        }
    }
    let node_of = |k: usize, uf: &mut UnionFind| class_of[uf.find(k)];
    let arcs = arcs_raw
        .into_iter()
        .map(|(a, b)| (node_of(a, &mut uf), node_of(b, &mut uf)))
        .collect();
    FunctionalDigraph { nodes, arcs }
}

/// Components of the digraph as node-index sequences in walk order.
#[derive(Debug, Clone, Default)]
pub struct Decomposition {
    pub paths: Vec<Vec<usize>>,
    pub cycles: Vec<Vec<usize>>,
}

impl Decomposition {
    /// Number of side-one edge-nodes in cycle `c`.
    pub fn cycle_len(&self, d: &FunctionalDigraph, c: usize) -> usize {
        self.cycles[c]
            .iter()
            .filter(|&&v| d.nodes[v].side1.is_some())
            .count()
    }

    pub fn node_count(&self) -> usize {
        self.paths.iter().chain(&self.cycles).map(Vec::len).sum()
    }
}

/// Splits the digraph into paths and cycles. Fails if some node has total
/// degree above two, which would mean the construction is wrong.
pub fn decompose(d: &FunctionalDigraph) -> Result<Decomposition> {
    let n = d.nodes.len();
    // undirected incidence: (neighbour, arc id)
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (i, &(a, b)) in d.arcs.iter().enumerate() {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    if let Some(v) = (0..n).find(|&v| adj[v].len() > 2) {
        return Err(Error::Invariant(format!(
            "digraph node {v} has degree {}",
            adj[v].len()
        )));
    }

    let mut seen = vec![false; n];
    let mut used_arc = vec![false; d.arcs.len()];
    let mut out = Decomposition::default();
    let walk = |start: usize, seen: &mut [bool], used_arc: &mut [bool]| {
        let mut seq = vec![start];
        seen[start] = true;
        let mut cur = start;
        let mut closed = false;
        loop {
            let next = adj[cur].iter().find(|&&(_, arc)| !used_arc[arc]).copied();
            match next {
                Some((w, arc)) => {
                    used_arc[arc] = true;
                    if seen[w] {
                        closed = true;
                        break;
                    }
                    seen[w] = true;
                    seq.push(w);
                    cur = w;
                }
                None => break,
            }
        }
        (seq, closed)
    };
    // path endpoints first, so that a path is walked end to end
    for v in 0..n {
        if !seen[v] && adj[v].len() < 2 {
            let (seq, _) = walk(v, &mut seen, &mut used_arc);
            out.paths.push(seq);
        }
    }
    for v in 0..n {
        if !seen[v] {
            let (seq, closed) = walk(v, &mut seen, &mut used_arc);
            if !closed {
                return Err(Error::Invariant(format!("component at node {v} is neither path nor cycle")));
            }
            out.cycles.push(seq);
        }
    }
    Ok(out)
}

/// Side-one vertices (local indices into `idx1`) on which the two bijections
/// agree as sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoreSet {
    pub vertices: Vec<usize>,
}

/// Parent vertices covered by the side-one edge-nodes of all cycles.
pub fn cycle_vertices(d: &FunctionalDigraph, dec: &Decomposition) -> Vec<usize> {
    let mut vs: Vec<usize> = dec
        .cycles
        .iter()
        .flatten()
        .filter_map(|&v| d.nodes[v].side1)
        .flat_map(|(a, b)| [a, b])
        .collect();
    vs.sort_unstable();
    vs.dedup();
    vs
}

/// The largest set of sampled side-one vertices that both bijections map
/// onto the same set of sampled side-two vertices.
///
/// This is the vertex cover of the digraph's cycles. Cycles carry edges, so
/// they can never produce a single vertex; when no cycle exists, a lone
/// vertex on which the bijections agree is returned instead.
pub fn core_set(pi: &Permutation, pit: &Permutation, idx1: &[usize], idx2: &[usize]) -> CoreSet {
    let d = build_digraph(pi, pit, idx1, idx2);
    let dec = decompose(&d).expect("functional digraph nodes have degree at most two");
    let mut parents = cycle_vertices(&d, &dec);
    if parents.is_empty() {
        let s_pi = parent_common(idx1, idx2, pi);
        parents = s_pi.into_iter().filter(|&v| pi.apply(v) == pit.apply(v)).collect();
    }
    let vertices = idx1
        .iter()
        .enumerate()
        .filter(|(_, v)| parents.binary_search(v).is_ok())
        .map(|(a, _)| a)
        .collect();
    CoreSet { vertices }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_subset;
    use crate::rng;

    fn components_by_search(d: &FunctionalDigraph) -> usize {
        // plain DFS over the undirected node graph
        let n = d.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &d.arcs {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn identical_permutations_give_unit_cycles() {
        let p = Permutation::new(vec![3, 1, 5, 0, 2, 4]).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let d = build_digraph(&p, &p, &all, &all);
        let dec = decompose(&d).unwrap();
        assert!(dec.paths.is_empty());
        assert_eq!(dec.cycles.len(), 15);
        for c in 0..dec.cycles.len() {
            assert_eq!(dec.cycle_len(&d, c), 1);
        }
        assert_eq!(core_set(&p, &p, &all, &all).vertices, all);
    }

    #[test]
    fn disjoint_common_sets_give_single_arcs() {
        let id = Permutation::identity(6);
        let shift = Permutation::new(vec![3, 4, 5, 0, 1, 2]).unwrap();
        // under id the common set is {0, 1}; under shift it is {2}
        let idx1 = vec![0, 1, 2];
        let idx2 = vec![0, 1, 5];
        let d = build_digraph(&id, &shift, &idx1, &idx2);
        let dec = decompose(&d).unwrap();
        assert!(dec.cycles.is_empty());
        assert_eq!(dec.paths.len(), 1);
        assert_eq!(dec.paths[0].len(), 2);
        assert!(core_set(&id, &shift, &idx1, &idx2).vertices.is_empty());
    }

    #[test]
    fn hand_built_instance_matches_component_search() {
        let pi = Permutation::new(vec![1, 0, 2, 3, 5, 4]).unwrap();
        let pit = Permutation::new(vec![0, 1, 2, 4, 3, 5]).unwrap();
        let idx1 = vec![0, 1, 2, 3];
        let idx2 = vec![0, 1, 2, 4];
        let d = build_digraph(&pi, &pit, &idx1, &idx2);
        let dec = decompose(&d).unwrap();
        assert_eq!(dec.paths.len() + dec.cycles.len(), components_by_search(&d));
        assert_eq!(dec.node_count(), d.nodes.len());
        // {0,1,2} is swapped by pi and fixed by pit: same image set
        assert_eq!(core_set(&pi, &pit, &idx1, &idx2).vertices, vec![0, 1, 2]);
    }

    #[test]
    fn random_instances_partition_and_degree() {
        let mut r = rng::stream(5, "digraph");
        for _ in 0..500 {
            let n = 8;
            let s = 5;
            let pi = Permutation::random(n, &mut r);
            let pit = Permutation::random(n, &mut r);
            let idx1 = sample_subset(n, s, &mut r);
            let idx2 = sample_subset(n, s, &mut r);
            let d = build_digraph(&pi, &pit, &idx1, &idx2);
            let dec = decompose(&d).unwrap();
            assert_eq!(dec.node_count(), d.nodes.len());
            assert_eq!(dec.paths.len() + dec.cycles.len(), components_by_search(&d));
            for (c, cyc) in dec.cycles.iter().enumerate() {
                let side2 = cyc.iter().filter(|&&v| d.nodes[v].side2.is_some()).count();
                assert_eq!(dec.cycle_len(&d, c), side2);
            }
            let core = core_set(&pi, &pit, &idx1, &idx2);
            let mut a: Vec<usize> = core.vertices.iter().map(|&v| pi.apply(idx1[v])).collect();
            let mut b: Vec<usize> = core.vertices.iter().map(|&v| pit.apply(idx1[v])).collect();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
            assert!(a.iter().all(|v| idx2.contains(v)));
        }
    }

    #[test]
    fn degree_violation_is_reported() {
        let d = FunctionalDigraph {
            nodes: vec![
                Node { side1: Some((0, 1)), side2: None },
                Node { side1: None, side2: Some((0, 1)) },
                Node { side1: None, side2: Some((0, 2)) },
                Node { side1: None, side2: Some((1, 2)) },
            ],
            arcs: vec![(0, 1), (0, 2), (0, 3)],
        };
        assert!(matches!(decompose(&d), Err(Error::Invariant(_))));
    }
}
