//! Finite simple graphs and the random-graph samplers.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{CoreError, Result};
use crate::rng::{tag, CounterRng};
use crate::topology::boundary::Adjacency;

/// Simple undirected graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGraph {
    adjacency: Vec<Vec<usize>>,
}

impl FiniteGraph {
    /// Builds a graph from an edge list; self-loops and duplicates are
    /// rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(CoreError::InvalidArgument(format!(
                    "edge ({u},{v}) outside 0..{n}"
                )));
            }
            if u == v {
                return Err(CoreError::InvalidArgument(format!("self-loop at {u}")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(CoreError::InvalidArgument(format!("duplicate edge ({u},{v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(FiniteGraph { adjacency })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors_of(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// One line per vertex: `vertex<TAB>neighbor,neighbor,...` (empty
    /// neighbor list allowed).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, nbrs) in self.adjacency.iter().enumerate() {
            let joined =
                nbrs.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
            let _ = writeln!(out, "{v}\t{joined}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (v, rest) = line.split_once('\t').ok_or_else(|| {
                CoreError::Serialization(format!("line {}: expected vertex<TAB>list", lineno + 1))
            })?;
            let v: usize = v.parse().map_err(|_| {
                CoreError::Serialization(format!("line {}: bad vertex {v:?}", lineno + 1))
            })?;
            let nbrs = if rest.is_empty() {
                Vec::new()
            } else {
                rest.split(',')
                    .map(|s| {
                        s.parse::<usize>().map_err(|_| {
                            CoreError::Serialization(format!(
                                "line {}: bad neighbor {s:?}",
                                lineno + 1
                            ))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()?
            };
            rows.push((v, nbrs));
        }
        let n = rows.len();
        let mut adjacency = vec![Vec::new(); n];
        for (v, nbrs) in rows {
            if v >= n {
                return Err(CoreError::Serialization(format!("vertex {v} out of range")));
            }
            adjacency[v] = nbrs;
        }
        // validate symmetry / simplicity by rebuilding from edges
        let mut edges = Vec::new();
        for (v, nbrs) in adjacency.iter().enumerate() {
            for &u in nbrs {
                if u >= n {
                    return Err(CoreError::Serialization(format!("neighbor {u} out of range")));
                }
                if !adjacency.get(u).is_some_and(|l| l.contains(&v)) {
                    return Err(CoreError::Serialization(format!(
                        "asymmetric edge ({v},{u})"
                    )));
                }
                if v < u {
                    edges.push((v, u));
                }
            }
        }
        FiniteGraph::from_edges(n, &edges)
    }
}

impl Adjacency for FiniteGraph {
    fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }
    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }
}

/// Erdos-Renyi G(n, p): each unordered pair is an edge independently with
/// probability `p`.
pub fn sample_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<FiniteGraph> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CoreError::InvalidArgument(format!("p = {p} must be in (0,1)")));
    }
    let mut rng = CounterRng::new(seed, &[tag::GRAPH, 0x4552, n as u64]);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.uniform() < p {
                edges.push((u, v));
            }
        }
    }
    FiniteGraph::from_edges(n, &edges)
}

const REGULAR_RETRY_BUDGET: usize = 100;

/// Random kappa-regular graph by configuration-model pairing with rejection
/// of self-loops and multi-edges; the whole pairing is redrawn on failure,
/// up to a fixed retry budget.
pub fn sample_regular(n: usize, kappa: usize, seed: u64) -> Result<FiniteGraph> {
    if kappa == 0 || n * kappa % 2 != 0 || n < kappa + 1 {
        return Err(CoreError::InvalidArgument(format!(
            "regular graph needs n*kappa even and n >= kappa+1 (n={n}, kappa={kappa})"
        )));
    }
    let mut rng = CounterRng::new(seed, &[tag::GRAPH, 0x5245, n as u64, kappa as u64]);
    'attempt: for _ in 0..REGULAR_RETRY_BUDGET {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(kappa)).collect();
        rng.shuffle(&mut stubs);
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || !seen.insert((u.min(v), u.max(v))) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        return FiniteGraph::from_edges(n, &edges);
    }
    Err(CoreError::RetryExhausted {
        what: format!("simple {kappa}-regular pairing on {n} vertices"),
        attempts: REGULAR_RETRY_BUDGET,
    })
}

/// Erased configuration model: uniform stub pairing with self-loops and
/// duplicate edges dropped, so realized degrees never exceed the requested
/// ones.
pub fn sample_configuration_model(degrees: &[usize], seed: u64) -> Result<FiniteGraph> {
    let total: usize = degrees.iter().sum();
    if total % 2 != 0 {
        return Err(CoreError::InvalidArgument(format!(
            "degree sum {total} must be even"
        )));
    }
    let n = degrees.len();
    let mut rng = CounterRng::new(seed, &[tag::GRAPH, 0x434d, n as u64]);
    let mut stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat(v).take(d))
        .collect();
    rng.shuffle(&mut stubs);
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for pair in stubs.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if u == v {
            continue;
        }
        if seen.insert((u.min(v), u.max(v))) {
            edges.push((u, v));
        }
    }
    FiniteGraph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_is_deterministic_per_seed() {
        let a = sample_erdos_renyi(100, 0.05, 42).unwrap();
        let b = sample_erdos_renyi(100, 0.05, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_erdos_renyi(100, 0.05, 43).unwrap());
    }

    #[test]
    fn er_two_vertices_edge_iff_draw() {
        // With p close to 1 the single pair is almost surely present; with p
        // close to 0 almost surely absent. Structure check only.
        let g = sample_erdos_renyi(2, 0.999999, 7).unwrap();
        assert_eq!(g.edge_count(), 1);
        let g = sample_erdos_renyi(2, 1e-9, 7).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn er_mean_edge_count_matches_binomial() {
        // n=1000, p=3/1000: mean over 200 seeds within 3 sigma of the
        // binomial mean p*n(n-1)/2.
        let (n, p, reps) = (1000usize, 0.003f64, 200usize);
        let pairs = (n * (n - 1) / 2) as f64;
        let mean = p * pairs;
        let var_single = pairs * p * (1.0 - p);
        let se = (var_single / reps as f64).sqrt();
        let avg: f64 = (0..reps)
            .map(|s| sample_erdos_renyi(n, p, s as u64).unwrap().edge_count() as f64)
            .sum::<f64>()
            / reps as f64;
        assert!(
            (avg - mean).abs() < 3.0 * se,
            "avg {avg}, mean {mean}, se {se}"
        );
    }

    #[test]
    fn regular_4_choose_3_is_k4() {
        let g = sample_regular(4, 3, 12).unwrap();
        assert_eq!(g.edge_count(), 6);
        for v in 0..4 {
            assert_eq!(g.degree(v), 3);
        }
    }

    #[test]
    fn regular_degrees_exact_and_simple() {
        for seed in 0..10 {
            let g = sample_regular(100, 3, seed).unwrap();
            for v in 0..100 {
                assert_eq!(g.degree(v), 3);
                assert!(!g.neighbors_of(v).contains(&v));
                let mut sorted = g.neighbors_of(v).to_vec();
                sorted.dedup();
                assert_eq!(sorted.len(), 3);
            }
        }
    }

    #[test]
    fn regular_rejects_bad_parameters() {
        assert!(sample_regular(3, 3, 0).is_err()); // n < kappa+1
        assert!(sample_regular(5, 3, 0).is_err()); // odd n*kappa
    }

    #[test]
    fn configuration_single_edge() {
        let g = sample_configuration_model(&[1, 1], 3).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn configuration_triangle_frequency_and_degree_cap() {
        let mut triangles = 0;
        for seed in 0..200 {
            let g = sample_configuration_model(&[2, 2, 2], seed).unwrap();
            for v in 0..3 {
                assert!(g.degree(v) <= 2);
            }
            if g.edge_count() == 3 {
                triangles += 1;
            }
        }
        assert!(triangles > 0, "triangle never realized in 200 seeds");
    }

    #[test]
    fn configuration_rejects_odd_sum() {
        assert!(sample_configuration_model(&[1, 1, 1], 0).is_err());
    }

    #[test]
    fn erasure_rate_shrinks_with_n() {
        // Erased-stub fraction for 3-regular degree sequences drops from
        // n=50 to n=200 (averaged over 100 seeds).
        let rate = |n: usize| -> f64 {
            let degrees = vec![3usize; n];
            let requested = (3 * n / 2) as f64;
            let mut lost = 0.0;
            for seed in 0..100 {
                let g = sample_configuration_model(&degrees, seed).unwrap();
                lost += (requested - g.edge_count() as f64) / requested;
            }
            lost / 100.0
        };
        let r50 = rate(50);
        let r200 = rate(200);
        assert!(r200 < r50, "erasure rate did not shrink: {r50} -> {r200}");
    }

    #[test]
    fn graph_text_roundtrip() {
        let g = sample_erdos_renyi(30, 0.1, 5).unwrap();
        let back = FiniteGraph::from_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert!(FiniteGraph::from_text("0\t1\n1\t\n").is_err()); // asymmetric
    }
}
