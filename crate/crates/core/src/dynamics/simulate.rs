//! The Euler-Maruyama engine.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::dynamics::bundle::PathBundle;
use crate::dynamics::coeffs::{Diffusion, Drift, InitialLaw, ZeroDrift};
use crate::dynamics::grid::TimeGrid;
use crate::dynamics::path::PathView;
use crate::error::{CoreError, Result};
use crate::rng::{tag, CounterRng};
use crate::scalar::Scalar;
use crate::topology::{FiniteGraph, SampledTree, UhnLabel};

/// Abort threshold on any simulated coordinate.
pub const DIVERGENCE_GUARD: f64 = 1e10;

/// Simulation domain: vertices with stable stream keys, display labels,
/// membership indicators (non-members stay frozen at their initial state),
/// and adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTopology {
    keys: Vec<u64>,
    labels: Vec<String>,
    member: Vec<bool>,
    adjacency: Vec<Vec<u32>>,
}

impl SimTopology {
    pub fn from_graph(graph: &FiniteGraph) -> Self {
        let n = graph.vertex_count();
        SimTopology {
            keys: (0..n as u64).collect(),
            labels: (0..n).map(|v| v.to_string()).collect(),
            member: vec![true; n],
            adjacency: (0..n)
                .map(|v| graph.neighbors_of(v).iter().map(|&u| u as u32).collect())
                .collect(),
        }
    }

    pub fn from_tree(tree: &SampledTree) -> Self {
        use crate::topology::Adjacency;
        let n = tree.len();
        SimTopology {
            keys: (0..n).map(|v| tree.label(v).stream_key()).collect(),
            labels: (0..n).map(|v| tree.label(v).to_string()).collect(),
            member: vec![true; n],
            adjacency: (0..n)
                .map(|v| tree.neighbors(v).iter().map(|&u| u as u32).collect())
                .collect(),
        }
    }

    /// Tree members plus explicit frozen (off-tree) labels, each isolated.
    pub fn from_tree_with_phantoms(tree: &SampledTree, phantoms: &[UhnLabel]) -> Self {
        let mut topo = SimTopology::from_tree(tree);
        for label in phantoms {
            topo.keys.push(label.stream_key());
            topo.labels.push(label.to_string());
            topo.member.push(false);
            topo.adjacency.push(Vec::new());
        }
        topo
    }

    /// `n` isolated member vertices (i.i.d. diffusions).
    pub fn isolated(n: usize) -> Self {
        SimTopology {
            keys: (0..n as u64).collect(),
            labels: (0..n).map(|v| v.to_string()).collect(),
            member: vec![true; n],
            adjacency: vec![Vec::new(); n],
        }
    }

    /// `n` isolated frozen vertices (the all-frozen, empty-tree domain).
    pub fn frozen(n: usize) -> Self {
        let mut topo = SimTopology::isolated(n);
        topo.member = vec![false; n];
        topo
    }

    /// Relabels vertices: new vertex `i` is old vertex `perm[i]`; keys,
    /// membership, and adjacency travel with the vertices.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(CoreError::InvalidArgument("not a permutation".into()));
            }
            inverse[old] = new;
        }
        Ok(SimTopology {
            keys: perm.iter().map(|&old| self.keys[old]).collect(),
            labels: perm.iter().map(|&old| self.labels[old].clone()).collect(),
            member: perm.iter().map(|&old| self.member[old]).collect(),
            adjacency: perm
                .iter()
                .map(|&old| {
                    self.adjacency[old].iter().map(|&u| inverse[u as usize] as u32).collect()
                })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn is_member(&self, v: usize) -> bool {
        self.member[v]
    }

    pub fn key(&self, v: usize) -> u64 {
        self.keys[v]
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }
}

/// One Euler-Maruyama step for a single coordinate block.
#[inline]
pub(crate) fn em_step<S: Scalar>(
    prev: &[S],
    drift: &[S],
    sigma_diag: &[S],
    noise: &[f64],
    h: S,
    sqrt_h: S,
    out: &mut [S],
) {
    for i in 0..out.len() {
        out[i] = prev[i] + drift[i] * h + sigma_diag[i] * sqrt_h * S::from_f64(noise[i]);
    }
}

pub(crate) fn check_finite<S: Scalar>(xs: &[S]) -> bool {
    xs.iter().all(|x| {
        let v = x.as_f64();
        v.is_finite() && v.abs() <= DIVERGENCE_GUARD
    })
}

/// Simulates the interacting system on `topo`:
/// `X_v(t_{j+1}) = X_v(t_j) + 1{v in T} [ b_v h + sigma_v sqrt(h) xi_{v,j} ]`
/// with per-(vertex, step) standard normal draws from counter-based streams.
/// Deterministic in `(inputs, seed)` for any worker count.
pub fn simulate_system<S: Scalar>(
    topo: &SimTopology,
    drift: &dyn Drift<S>,
    diffusion: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    grid: &TimeGrid,
    seed: u64,
) -> Result<PathBundle<S>> {
    let n = topo.len();
    let d = init.dim();
    if n == 0 {
        return Err(CoreError::InvalidArgument("empty topology".into()));
    }
    let points = grid.points();
    let h = S::from_f64(grid.h());
    let sqrt_h = S::from_f64(grid.h().sqrt());

    let mut frames = vec![S::zero(); points * n * d];

    // initial frame
    frames[..n * d].par_chunks_mut(d).enumerate().for_each(|(v, out)| {
        let mut rng = CounterRng::new(seed, &[tag::INIT, topo.key(v)]);
        init.draw(&mut rng, out);
    });

    // packed (step, vertex) of the first divergence seen, MAX = none
    let diverged = AtomicU64::new(u64::MAX);

    for j in 0..grid.steps() {
        let (prev, rest) = frames.split_at_mut((j + 1) * n * d);
        let next = &mut rest[..n * d];
        let prev: &[S] = prev;
        next.par_chunks_mut(d)
            .enumerate()
            .for_each_init(
                || (Vec::<PathView<S>>::new(), vec![S::zero(); d], vec![S::zero(); d], vec![0.0f64; d]),
                |(nbrs, b, sig, noise), (v, out)| {
                    let own = PathView::new(prev, v * d, n * d, d, j + 1);
                    if !topo.is_member(v) {
                        out.copy_from_slice(own.value(j));
                        return;
                    }
                    nbrs.clear();
                    nbrs.extend(
                        topo.neighbors(v)
                            .iter()
                            .map(|&u| PathView::new(prev, u as usize * d, n * d, d, j + 1)),
                    );
                    drift.eval(j, grid, own, nbrs, b);
                    diffusion.diag(j, grid, own, sig);
                    let mut rng = CounterRng::new(seed, &[tag::NOISE, topo.key(v), j as u64]);
                    rng.fill_standard_normal(noise);
                    em_step(own.value(j), b, sig, noise, h, sqrt_h, out);
                    if !check_finite(out) {
                        let packed = ((j as u64 + 1) << 32) | v as u64;
                        diverged.fetch_min(packed, Ordering::Relaxed);
                    }
                },
            );
        let flag = diverged.load(Ordering::Relaxed);
        if flag != u64::MAX {
            return Err(CoreError::Diverged {
                step: (flag >> 32) as usize,
                vertex: (flag & 0xffff_ffff) as usize,
            });
        }
    }

    PathBundle::from_parts(
        *grid,
        d,
        topo.labels.clone(),
        topo.member.clone(),
        frames,
    )
}

/// The reference system with zero drift; identical code path (and therefore
/// identical draws) as `simulate_system` with `b = 0`.
pub fn simulate_driftless<S: Scalar>(
    topo: &SimTopology,
    diffusion: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    grid: &TimeGrid,
    seed: u64,
) -> Result<PathBundle<S>> {
    simulate_system(topo, &ZeroDrift, diffusion, init, grid, seed)
}

/// States of all vertices at a grid time, as a uniform-weight multiset.
pub fn empirical_measure<S: Scalar>(bundle: &PathBundle<S>, t: f64) -> Result<Vec<Vec<S>>> {
    let j = bundle.grid().index_of(t)?;
    Ok((0..bundle.n_vertices()).map(|v| bundle.state(v, j).to_vec()).collect())
}

/// Path prefixes of all vertices up to a grid time (the path-space
/// empirical measure).
pub fn empirical_paths<S: Scalar>(bundle: &PathBundle<S>, t: f64) -> Result<Vec<Vec<S>>> {
    let j = bundle.grid().index_of(t)?;
    Ok((0..bundle.n_vertices())
        .map(|v| bundle.path_prefix(v, j + 1).to_owned_path())
        .collect())
}

/// Second-moment estimates `sup_v E[ ||X_v||^2_{*,t} ]` per membership
/// class at a ladder of checkpoint times.
#[derive(Debug, Clone)]
pub struct MomentBoundReport {
    pub checkpoints: Vec<f64>,
    /// Profile for tree members; one entry per checkpoint.
    pub member_profile: Vec<f64>,
    /// Profile for frozen vertices; empty when none exist.
    pub frozen_profile: Vec<f64>,
    pub ensemble: usize,
    /// Set when the member profile grows by more than 8x over the second
    /// half of the horizon, a heuristic alarm for unbounded growth.
    pub growth_flagged: bool,
}

impl MomentBoundReport {
    pub fn member_sup(&self) -> f64 {
        self.member_profile.last().copied().unwrap_or(0.0)
    }
    pub fn frozen_sup(&self) -> Option<f64> {
        self.frozen_profile.last().copied()
    }
}

/// Estimates running second moments from an ensemble of bundles over the
/// same topology. Requires at least 100 bundles.
pub fn moment_bound_check<S: Scalar>(bundles: &[PathBundle<S>]) -> Result<MomentBoundReport> {
    if bundles.len() < 100 {
        return Err(CoreError::InsufficientData(format!(
            "moment bound check needs >= 100 bundles, got {}",
            bundles.len()
        )));
    }
    let first = &bundles[0];
    let n = first.n_vertices();
    let points = first.grid().points();
    for b in bundles {
        if b.n_vertices() != n || b.grid() != first.grid() || b.dim() != first.dim() {
            return Err(CoreError::InvalidComparison(
                "bundles must share topology size, grid, and dimension".into(),
            ));
        }
    }
    let steps = first.grid().steps();
    let checkpoints_idx: Vec<usize> = {
        let mut idx: Vec<usize> =
            [steps / 4, steps / 2, (3 * steps) / 4, steps].iter().copied().filter(|&j| j >= 1).collect();
        idx.dedup();
        idx
    };

    // per vertex running sup of |X|^2, averaged over the ensemble
    let mut acc = vec![0.0f64; n * checkpoints_idx.len()];
    for b in bundles {
        for v in 0..n {
            let mut sup = 0.0f64;
            let mut ci = 0;
            for j in 0..points {
                let s = crate::scalar::norm_sq(b.state(v, j)).as_f64();
                sup = sup.max(s);
                if ci < checkpoints_idx.len() && j == checkpoints_idx[ci] {
                    acc[v * checkpoints_idx.len() + ci] += sup;
                    ci += 1;
                }
            }
        }
    }
    let m = bundles.len() as f64;
    let class_profile = |want_member: bool| -> Vec<f64> {
        checkpoints_idx
            .iter()
            .enumerate()
            .map(|(ci, _)| {
                (0..n)
                    .filter(|&v| first.is_member(v) == want_member)
                    .map(|v| acc[v * checkpoints_idx.len() + ci] / m)
                    .fold(0.0, f64::max)
            })
            .collect()
    };
    let member_profile = class_profile(true);
    let has_frozen = (0..n).any(|v| !first.is_member(v));
    let frozen_profile = if has_frozen { class_profile(false) } else { Vec::new() };
    let growth_flagged = member_profile
        .first()
        .zip(member_profile.last())
        .is_some_and(|(&a, &b)| a > 0.0 && b / a > 8.0);
    Ok(MomentBoundReport {
        checkpoints: checkpoints_idx.iter().map(|&j| first.grid().time(j)).collect(),
        member_profile,
        frozen_profile,
        ensemble: bundles.len(),
        growth_flagged,
    })
}
