//! Set boundaries in a fixed topology.

use std::collections::BTreeSet;

use crate::error::{CoreError, Result};

/// Read-only adjacency view shared by trees and finite graphs.
pub trait Adjacency {
    fn vertex_count(&self) -> usize;
    fn neighbors(&self, v: usize) -> &[usize];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryOrder {
    /// Vertices at distance exactly one from the set.
    One,
    /// Vertices at distance one or two from the set.
    Two,
}

/// Boundary of a vertex set: order one is the usual boundary, order two the
/// double boundary (the boundary joined with the boundary of the enlarged
/// set), i.e. vertices at distance one or two.
pub fn boundary<T: Adjacency>(
    vertices: &BTreeSet<usize>,
    topology: &T,
    order: BoundaryOrder,
) -> Result<BTreeSet<usize>> {
    let n = topology.vertex_count();
    if let Some(&v) = vertices.iter().find(|&&v| v >= n) {
        return Err(CoreError::InvalidArgument(format!(
            "vertex {v} outside topology of size {n}"
        )));
    }
    let first = one_step(vertices, vertices, topology);
    match order {
        BoundaryOrder::One => Ok(first),
        BoundaryOrder::Two => {
            let mut enlarged = vertices.clone();
            enlarged.extend(first.iter().copied());
            let second = one_step(&enlarged, &enlarged, topology);
            let mut out = first;
            out.extend(second);
            Ok(out)
        }
    }
}

fn one_step<T: Adjacency>(
    from: &BTreeSet<usize>,
    excluded: &BTreeSet<usize>,
    topology: &T,
) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &v in from {
        for &u in topology.neighbors(v) {
            if !excluded.contains(&u) {
                out.insert(u);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Path(Vec<Vec<usize>>);
    impl Path {
        fn new(n: usize) -> Self {
            let adj = (0..n)
                .map(|v| {
                    let mut nb = Vec::new();
                    if v > 0 {
                        nb.push(v - 1);
                    }
                    if v + 1 < n {
                        nb.push(v + 1);
                    }
                    nb
                })
                .collect();
            Path(adj)
        }
    }
    impl Adjacency for Path {
        fn vertex_count(&self) -> usize {
            self.0.len()
        }
        fn neighbors(&self, v: usize) -> &[usize] {
            &self.0[v]
        }
    }

    struct Star(Vec<Vec<usize>>);
    impl Adjacency for Star {
        fn vertex_count(&self) -> usize {
            self.0.len()
        }
        fn neighbors(&self, v: usize) -> &[usize] {
            &self.0[v]
        }
    }

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn path_boundaries() {
        let p = Path::new(5);
        let a = set(&[0]);
        assert_eq!(boundary(&a, &p, BoundaryOrder::One).unwrap(), set(&[1]));
        assert_eq!(boundary(&a, &p, BoundaryOrder::Two).unwrap(), set(&[1, 2]));
    }

    #[test]
    fn full_set_has_empty_boundary() {
        let p = Path::new(4);
        let a = set(&[0, 1, 2, 3]);
        assert!(boundary(&a, &p, BoundaryOrder::One).unwrap().is_empty());
        assert!(boundary(&a, &p, BoundaryOrder::Two).unwrap().is_empty());
    }

    #[test]
    fn star_boundaries() {
        // center 0, leaves 1..=5; A = {leaf 1}
        let mut adj = vec![vec![1, 2, 3, 4, 5]];
        for _ in 0..5 {
            adj.push(vec![0]);
        }
        let s = Star(adj);
        let a = set(&[1]);
        assert_eq!(boundary(&a, &s, BoundaryOrder::One).unwrap(), set(&[0]));
        assert_eq!(
            boundary(&a, &s, BoundaryOrder::Two).unwrap(),
            set(&[0, 2, 3, 4, 5])
        );
    }

    #[test]
    fn out_of_range_vertex_is_rejected() {
        let p = Path::new(3);
        assert!(boundary(&set(&[7]), &p, BoundaryOrder::One).is_err());
    }
}
