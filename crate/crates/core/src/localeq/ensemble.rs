//! Storage for local-equation ensembles.

use std::io::Write;

use crate::dynamics::{PathView, TimeGrid};
use crate::error::Result;
use crate::scalar::Scalar;

/// M replicas of root-neighborhood trajectories: per replica, the first
/// generation of the tree (root degree `kappa`), the auxiliary size-biased
/// count `chat`, and the paths of the root and its live children. Children
/// outside the tree are frozen at their initial draw and are not
/// materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalEnsemble<S: Scalar> {
    grid: TimeGrid,
    dim: usize,
    kappas: Vec<u32>,
    chats: Vec<u32>,
    /// Coordinate-major per replica: coordinate c (0 = root) occupies
    /// `[c * points * dim, (c+1) * points * dim)`.
    paths: Vec<Vec<S>>,
    provenance: String,
}

impl<S: Scalar> LocalEnsemble<S> {
    pub(crate) fn new(
        grid: TimeGrid,
        dim: usize,
        kappas: Vec<u32>,
        chats: Vec<u32>,
        paths: Vec<Vec<S>>,
        provenance: String,
    ) -> Self {
        debug_assert_eq!(kappas.len(), paths.len());
        debug_assert_eq!(chats.len(), paths.len());
        LocalEnsemble { grid, dim, kappas, chats, paths, provenance }
    }

    /// Assembles an ensemble from externally built trajectories (synthetic
    /// regression tasks, imported data). Replica `m` must hold
    /// `(kappas[m] + 1) * points * dim` scalars in coordinate-major order.
    pub fn from_parts(
        grid: TimeGrid,
        dim: usize,
        kappas: Vec<u32>,
        chats: Vec<u32>,
        paths: Vec<Vec<S>>,
        provenance: String,
    ) -> crate::error::Result<Self> {
        if kappas.len() != paths.len() || chats.len() != paths.len() {
            return Err(crate::error::CoreError::InvalidArgument(
                "kappas/chats/paths length mismatch".into(),
            ));
        }
        let points = grid.points();
        for (m, (path, &kappa)) in paths.iter().zip(&kappas).enumerate() {
            if path.len() != (kappa as usize + 1) * points * dim {
                return Err(crate::error::CoreError::InvalidArgument(format!(
                    "replica {m}: path storage {} != (kappa {kappa} + 1) * {points} * {dim}",
                    path.len()
                )));
            }
        }
        Ok(LocalEnsemble::new(grid, dim, kappas, chats, paths, provenance))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn replica_count(&self) -> usize {
        self.kappas.len()
    }

    /// Root degree of replica `m`.
    pub fn kappa(&self, m: usize) -> usize {
        self.kappas[m] as usize
    }

    /// Auxiliary size-biased count of replica `m`.
    pub fn chat(&self, m: usize) -> usize {
        self.chats[m] as usize
    }

    /// Re-rooting weight `kappa / (1 + chat)` of replica `m`.
    pub fn tilt_weight(&self, m: usize) -> f64 {
        self.kappas[m] as f64 / (1.0 + self.chats[m] as f64)
    }

    /// Path prefix of coordinate `c` (0 = root) of replica `m`.
    pub fn coord_path(&self, m: usize, c: usize, len: usize) -> PathView<'_, S> {
        debug_assert!(c <= self.kappa(m));
        let stride = self.grid.points() * self.dim;
        PathView::new(&self.paths[m], c * stride, self.dim, self.dim, len)
    }

    pub fn root_path(&self, m: usize, len: usize) -> PathView<'_, S> {
        self.coord_path(m, 0, len)
    }

    /// Root states at a grid time across all replicas.
    pub fn root_marginal(&self, t: f64) -> Result<Vec<Vec<S>>> {
        let j = self.grid.index_of(t)?;
        Ok((0..self.replica_count())
            .map(|m| self.coord_path(m, 0, j + 1).value(j).to_vec())
            .collect())
    }

    /// States of child coordinate `child` at a grid time, over replicas
    /// where that child is in the tree.
    pub fn child_marginal(&self, child: usize, t: f64) -> Result<Vec<Vec<S>>> {
        debug_assert!(child >= 1);
        let j = self.grid.index_of(t)?;
        Ok((0..self.replica_count())
            .filter(|&m| self.kappa(m) >= child)
            .map(|m| self.coord_path(m, child, j + 1).value(j).to_vec())
            .collect())
    }

    /// Joint states `(coord a, coord b)` at a grid time over replicas where
    /// both coordinates are live, concatenated into 2*dim points.
    pub fn pair_marginal(&self, a: usize, b: usize, t: f64) -> Result<Vec<Vec<S>>> {
        let j = self.grid.index_of(t)?;
        Ok((0..self.replica_count())
            .filter(|&m| self.kappa(m) >= a.max(b))
            .map(|m| {
                let mut p = self.coord_path(m, a, j + 1).value(j).to_vec();
                p.extend_from_slice(self.coord_path(m, b, j + 1).value(j));
                p
            })
            .collect())
    }

    /// Tilt weights aligned with `pair_marginal(a, b, ..)` rows.
    pub fn pair_weights(&self, a: usize, b: usize) -> Vec<f64> {
        (0..self.replica_count())
            .filter(|&m| self.kappa(m) >= a.max(b))
            .map(|m| self.tilt_weight(m))
            .collect()
    }

    /// Builder-description string recording coefficients, grid, ensemble
    /// size, and seed.
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// True when the two ensembles carry identical structures and
    /// bit-identical trajectories (provenance strings may differ).
    pub fn trajectories_equal(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.dim == other.dim
            && self.kappas == other.kappas
            && self.chats == other.chats
            && self.paths == other.paths
    }

    pub(crate) fn paths_mut(&mut self) -> &mut Vec<Vec<S>> {
        &mut self.paths
    }

    /// CSV export: the path-bundle schema with a leading `replica` column.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "replica,vertex_label,time")?;
        for c in 0..self.dim {
            write!(w, ",coord_{c}")?;
        }
        writeln!(w, ",member")?;
        for m in 0..self.replica_count() {
            for c in 0..=self.kappa(m) {
                let label = if c == 0 { "o".to_string() } else { c.to_string() };
                for j in 0..self.grid.points() {
                    write!(w, "{m},{label},{}", self.grid.time(j))?;
                    for x in self.coord_path(m, c, j + 1).value(j) {
                        write!(w, ",{}", x.as_f64())?;
                    }
                    writeln!(w, ",1")?;
                }
            }
        }
        Ok(())
    }
}
