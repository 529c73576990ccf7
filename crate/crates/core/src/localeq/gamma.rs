//! Cross-replica regression estimation of the conditional-expectation
//! drift.
//!
//! Design points are embedded histories of the conditioning pair
//! (root path, first-child path) over the replicas whose root neighborhood
//! is nonempty; responses are the per-replica drift evaluations. The
//! estimate at a query pair is a ratio of two regressions, numerator
//! `weight * b` and denominator `weight`, with the denominator floored; on
//! the regular tree all weights are one and the ratio collapses to a plain
//! regression.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::dynamics::{Drift, PathView};
use crate::error::{CoreError, Result};
use crate::localeq::embedding::HistoryEmbedding;
use crate::localeq::ensemble::LocalEnsemble;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMethod {
    /// k-nearest-neighbor average; `None` selects `ceil(sqrt(M))`.
    Knn { k: Option<usize> },
    /// Gaussian-kernel Nadaraya-Watson with a fixed bandwidth.
    NadarayaWatson { bandwidth: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimatorConfig {
    pub method: GammaMethod,
    /// Floor for the (mean) regression denominator.
    pub denominator_floor: f64,
    /// Pool only replicas in the same root-degree bucket. This conditions
    /// on information that is not measurable with respect to the two
    /// conditioned paths and therefore changes the estimand; off by
    /// default.
    pub stratify_by_degree: bool,
    pub embedding: HistoryEmbedding,
}

impl Default for GammaEstimatorConfig {
    fn default() -> Self {
        GammaEstimatorConfig {
            method: GammaMethod::Knn { k: None },
            denominator_floor: 1e-8,
            stratify_by_degree: false,
            embedding: HistoryEmbedding::default(),
        }
    }
}

const DEGREE_BUCKET_CAP: u32 = 8;

fn degree_bucket(degree: u32) -> u32 {
    degree.min(DEGREE_BUCKET_CAP + 1)
}

/// One regression query: the path of the coordinate being advanced, the
/// path of the opposite conditioning coordinate, and whether the latter is
/// frozen (off the tree).
#[derive(Debug, Clone, Copy)]
pub struct GammaQuery<'a, S: Scalar> {
    pub own: PathView<'a, S>,
    pub other: PathView<'a, S>,
    pub other_frozen: bool,
}

/// Fitted per-step design set.
///
/// Rows are stored sorted by their first coordinate so the
/// nearest-neighbor scan expands outward from the query through contiguous
/// memory, pruning with the one-dimensional projection bound; `orig` keeps
/// the original row ids for deterministic tie-breaking.
pub struct GammaDesign<S: Scalar> {
    dim: usize,
    query_width: usize,
    points: Vec<S>,
    weighted_resp: Vec<S>,
    weights: Vec<f64>,
    degrees: Vec<u32>,
    orig: Vec<u32>,
    first: Vec<f64>,
    /// default k = ceil(sqrt(ensemble size))
    k_default: usize,
}

fn sorted_design_order<S: Scalar>(points: &[S], query_width: usize) -> Vec<u32> {
    let n = if query_width == 0 { 0 } else { points.len() / query_width };
    let mut rows: Vec<u32> = (0..n as u32).collect();
    rows.sort_by(|&a, &b| {
        let fa = points[a as usize * query_width].as_f64();
        let fb = points[b as usize * query_width].as_f64();
        fa.partial_cmp(&fb).expect("finite design points").then(a.cmp(&b))
    });
    rows
}

fn assemble_design<S: Scalar>(
    dim: usize,
    query_width: usize,
    points: Vec<S>,
    weighted_resp: Vec<S>,
    weights: Vec<f64>,
    degrees: Vec<u32>,
    k_default: usize,
) -> GammaDesign<S> {
    let order = sorted_design_order(&points, query_width);
    let n = order.len();
    let mut sp = Vec::with_capacity(points.len());
    let mut sr = Vec::with_capacity(weighted_resp.len());
    let mut sw = Vec::with_capacity(n);
    let mut sd = Vec::with_capacity(n);
    let mut first = Vec::with_capacity(n);
    for &row in &order {
        let row = row as usize;
        sp.extend_from_slice(&points[row * query_width..(row + 1) * query_width]);
        sr.extend_from_slice(&weighted_resp[row * dim..(row + 1) * dim]);
        sw.push(weights[row]);
        sd.push(degrees[row]);
        first.push(points[row * query_width].as_f64());
    }
    GammaDesign {
        dim,
        query_width,
        points: sp,
        weighted_resp: sr,
        weights: sw,
        degrees: sd,
        orig: order,
        first,
        k_default,
    }
}

impl<S: Scalar> GammaDesign<S> {
    /// Builds the design at `step` from an ensemble: replicas with a
    /// nonempty root neighborhood contribute the embedded pair
    /// (root, child 1), the response `b(t_j, root, children)`, and the
    /// tilt weight (`kappa/(1+chat)` when `tilted`, else one).
    pub fn from_ensemble(
        ensemble: &LocalEnsemble<S>,
        drift: &dyn Drift<S>,
        step: usize,
        cfg: &GammaEstimatorConfig,
        tilted: bool,
    ) -> Result<Self> {
        let d = ensemble.dim();
        let emb_width = cfg.embedding.width(d);
        let live: Vec<u32> = (0..ensemble.replica_count())
            .filter(|&m| ensemble.kappa(m) >= 1)
            .map(|m| m as u32)
            .collect();
        let n = live.len();
        let mut points = vec![S::zero(); n * 2 * emb_width];
        let mut weighted_resp = vec![S::zero(); n * d];
        let mut weights = vec![0.0f64; n];
        let mut degrees = vec![0u32; n];
        let grid = *ensemble.grid();
        points
            .par_chunks_mut(2 * emb_width)
            .zip(weighted_resp.par_chunks_mut(d))
            .zip(weights.par_iter_mut())
            .zip(degrees.par_iter_mut())
            .zip(live.par_iter())
            .for_each(|((((point, resp), weight), degree), &m)| {
                let m = m as usize;
                let root = ensemble.root_path(m, step + 1);
                let child1 = ensemble.coord_path(m, 1, step + 1);
                cfg.embedding.embed(&root, step, &mut point[..emb_width]);
                cfg.embedding.embed(&child1, step, &mut point[emb_width..]);
                let kappa = ensemble.kappa(m);
                let nbrs: Vec<PathView<S>> =
                    (1..=kappa).map(|c| ensemble.coord_path(m, c, step + 1)).collect();
                drift.eval(step, &grid, root, &nbrs, resp);
                let w = if tilted { ensemble.tilt_weight(m) } else { 1.0 };
                let ws = S::from_f64(w);
                for r in resp.iter_mut() {
                    *r = *r * ws;
                }
                *weight = w;
                *degree = kappa as u32;
            });
        Ok(assemble_design(
            d,
            2 * emb_width,
            points,
            weighted_resp,
            weights,
            degrees,
            (ensemble.replica_count() as f64).sqrt().ceil() as usize,
        ))
    }

    /// Assembles a design from raw rows (used by the re-rooting check and
    /// synthetic-regression tests).
    pub fn from_raw_parts(
        dim: usize,
        query_width: usize,
        points: Vec<S>,
        weighted_resp: Vec<S>,
        weights: Vec<f64>,
        degrees: Vec<u32>,
        k_default: usize,
    ) -> Result<Self> {
        let n = weights.len();
        if points.len() != n * query_width
            || weighted_resp.len() != n * dim
            || degrees.len() != n
            || k_default == 0
        {
            return Err(CoreError::InvalidArgument("inconsistent design arrays".into()));
        }
        Ok(assemble_design(dim, query_width, points, weighted_resp, weights, degrees, k_default))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn query_width(&self) -> usize {
        self.query_width
    }

    /// Regression estimate at an embedded query point. `query_degree`
    /// matters only under degree stratification.
    pub fn estimate(
        &self,
        cfg: &GammaEstimatorConfig,
        query: &[S],
        query_degree: Option<u32>,
        out: &mut [S],
    ) -> Result<()> {
        debug_assert_eq!(query.len(), self.query_width);
        debug_assert_eq!(out.len(), self.dim);
        let bucket = match (cfg.stratify_by_degree, query_degree) {
            (true, Some(deg)) => Some(degree_bucket(deg)),
            _ => None,
        };
        match cfg.method {
            GammaMethod::Knn { k } => {
                let k = k.unwrap_or(self.k_default).max(1);
                self.estimate_knn(cfg, query, bucket, k, out)
            }
            GammaMethod::NadarayaWatson { bandwidth } => {
                self.estimate_nw(cfg, query, bucket, bandwidth, out)
            }
        }
    }

    fn eligible(&self, rank: usize, bucket: Option<u32>) -> bool {
        match bucket {
            Some(b) => degree_bucket(self.degrees[rank]) == b,
            None => true,
        }
    }

    #[inline]
    fn consider(&self, heap: &mut BinaryHeap<HeapEntry>, k: usize, query: &[S], rank: usize) {
        let base = rank * self.query_width;
        let point = &self.points[base..base + self.query_width];
        let mut dist = 0.0f64;
        if heap.len() == k {
            let worst = heap.peek().expect("nonempty").dist;
            for (q, p) in query.iter().zip(point) {
                let delta = q.as_f64() - p.as_f64();
                dist += delta * delta;
                if dist > worst {
                    return;
                }
            }
        } else {
            for (q, p) in query.iter().zip(point) {
                let delta = q.as_f64() - p.as_f64();
                dist += delta * delta;
            }
        }
        heap.push(HeapEntry { dist, row: self.orig[rank], rank: rank as u32 });
        if heap.len() > k {
            heap.pop();
        }
    }

    fn estimate_knn(
        &self,
        cfg: &GammaEstimatorConfig,
        query: &[S],
        bucket: Option<u32>,
        k: usize,
        out: &mut [S],
    ) -> Result<()> {
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
        let q0 = query[0].as_f64();
        // expand outward from the query's first coordinate; once the heap is
        // full, a side whose projection gap alone exceeds the current worst
        // distance cannot contain a closer point
        let n = self.first.len();
        let start = self.first.partition_point(|&f| f < q0);
        let (mut lo, mut hi) = (start, start);
        loop {
            let worst = if heap.len() == k {
                heap.peek().expect("nonempty").dist
            } else {
                f64::INFINITY
            };
            let lo_gap = if lo > 0 {
                let g = q0 - self.first[lo - 1];
                g * g
            } else {
                f64::INFINITY
            };
            let hi_gap = if hi < n {
                let g = self.first[hi] - q0;
                g * g
            } else {
                f64::INFINITY
            };
            if lo_gap <= hi_gap {
                if lo == 0 || lo_gap > worst {
                    if hi == n || hi_gap > worst {
                        break;
                    }
                    // fall through to the high side below
                } else {
                    lo -= 1;
                    if self.eligible(lo, bucket) {
                        self.consider(&mut heap, k, query, lo);
                    }
                    continue;
                }
            }
            if hi == n || hi_gap > worst {
                if lo == 0 || lo_gap > worst {
                    break;
                }
                continue;
            }
            if self.eligible(hi, bucket) {
                self.consider(&mut heap, k, query, hi);
            }
            hi += 1;
        }
        if heap.len() < k {
            return Err(CoreError::InsufficientEnsemble { needed: k, have: heap.len() });
        }
        let inv_k = 1.0 / k as f64;
        let mut den = 0.0f64;
        let mut num = vec![S::zero(); self.dim];
        // deterministic accumulation order: ascending original row index
        let mut rows: Vec<(u32, u32)> = heap.into_iter().map(|e| (e.row, e.rank)).collect();
        rows.sort_unstable();
        for &(_, rank) in &rows {
            let rank = rank as usize;
            den += self.weights[rank];
            let resp = &self.weighted_resp[rank * self.dim..(rank + 1) * self.dim];
            for (acc, &r) in num.iter_mut().zip(resp) {
                *acc = *acc + r;
            }
        }
        let mean_den = (den * inv_k).max(cfg.denominator_floor);
        let scale = S::from_f64(inv_k / mean_den);
        for (o, &n) in out.iter_mut().zip(&num) {
            *o = n * scale;
        }
        Ok(())
    }

    fn estimate_nw(
        &self,
        cfg: &GammaEstimatorConfig,
        query: &[S],
        bucket: Option<u32>,
        bandwidth: f64,
        out: &mut [S],
    ) -> Result<()> {
        if bandwidth <= 0.0 {
            return Err(CoreError::InvalidArgument("bandwidth must be positive".into()));
        }
        let mut seen = 0usize;
        let inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
        let mut den = 0.0f64;
        let mut kernel_total = 0.0f64;
        let mut num = vec![0.0f64; self.dim];
        for row in 0..self.len() {
            if !self.eligible(row, bucket) {
                continue;
            }
            seen += 1;
            let base = row * self.query_width;
            let point = &self.points[base..base + self.query_width];
            let mut dist = 0.0f64;
            for (q, p) in query.iter().zip(point) {
                let delta = q.as_f64() - p.as_f64();
                dist += delta * delta;
            }
            let kw = (-dist * inv_two_h2).exp();
            kernel_total += kw;
            den += kw * self.weights[row];
            let resp = &self.weighted_resp[row * self.dim..(row + 1) * self.dim];
            for (acc, &r) in num.iter_mut().zip(resp) {
                *acc += kw * r.as_f64();
            }
        }
        if seen < 2 {
            return Err(CoreError::InsufficientEnsemble { needed: 2, have: seen });
        }
        let norm = kernel_total.max(1e-300);
        let mean_den = (den / norm).max(cfg.denominator_floor);
        for (o, n) in out.iter_mut().zip(&num) {
            *o = S::from_f64(n / norm / mean_den);
        }
        Ok(())
    }
}

struct HeapEntry {
    dist: f64,
    row: u32,
    rank: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.row == other.row
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by replica index: larger (dist, row) is worse
        self.dist
            .partial_cmp(&other.dist)
            .expect("finite distances")
            .then(self.row.cmp(&other.row))
    }
}

fn embed_query<S: Scalar>(
    cfg: &GammaEstimatorConfig,
    query: &GammaQuery<'_, S>,
    step: usize,
    buf: &mut Vec<S>,
) {
    let d = query.own.dim();
    let w = cfg.embedding.width(d);
    buf.resize(2 * w, S::zero());
    cfg.embedding.embed(&query.own, step, &mut buf[..w]);
    cfg.embedding.embed(&query.other, step, &mut buf[w..]);
}

/// Regression estimate of the regular-tree conditional drift
/// `E[b(t, Y_root, Y_children) | Y_root ~ own, Y_1 ~ other]` from the
/// ensemble at `step`. The frozen flag is ignored: the regular-tree
/// equation has no frozen coordinates.
pub fn estimate_gamma_regular<S: Scalar>(
    ensemble: &LocalEnsemble<S>,
    drift: &dyn Drift<S>,
    step: usize,
    cfg: &GammaEstimatorConfig,
    query: &GammaQuery<'_, S>,
) -> Result<Vec<S>> {
    let design = GammaDesign::from_ensemble(ensemble, drift, step, cfg, false)?;
    let mut buf = Vec::new();
    embed_query(cfg, query, step, &mut buf);
    let mut out = vec![S::zero(); ensemble.dim()];
    design.estimate(cfg, &buf, None, &mut out)?;
    Ok(out)
}

/// Tilted-ratio estimate of the UGW conditional drift at `step`; on
/// frozen-other or empty-neighborhood queries this is the isolated-vertex
/// drift `b(t, own, empty)`.
pub fn estimate_gamma_ugw<S: Scalar>(
    ensemble: &LocalEnsemble<S>,
    drift: &dyn Drift<S>,
    step: usize,
    cfg: &GammaEstimatorConfig,
    query: &GammaQuery<'_, S>,
) -> Result<Vec<S>> {
    let mut out = vec![S::zero(); ensemble.dim()];
    if query.other_frozen {
        drift.eval(step, ensemble.grid(), query.own, &[], &mut out);
        return Ok(out);
    }
    let design = GammaDesign::from_ensemble(ensemble, drift, step, cfg, true)?;
    if design.is_empty() {
        drift.eval(step, ensemble.grid(), query.own, &[], &mut out);
        return Ok(out);
    }
    let mut buf = Vec::new();
    embed_query(cfg, query, step, &mut buf);
    design.estimate(cfg, &buf, None, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_design(
        n: usize,
        dim: usize,
        qw: usize,
        f: impl Fn(usize) -> (Vec<f64>, Vec<f64>, f64),
    ) -> GammaDesign<f64> {
        let mut points = Vec::new();
        let mut resp = Vec::new();
        let mut weights = Vec::new();
        for row in 0..n {
            let (p, r, w) = f(row);
            assert_eq!(p.len(), qw);
            assert_eq!(r.len(), dim);
            points.extend(p);
            resp.extend(r.iter().map(|x| x * w));
            weights.push(w);
        }
        GammaDesign::from_raw_parts(
            dim,
            qw,
            points,
            resp,
            weights,
            vec![1; n],
            (n as f64).sqrt().ceil() as usize,
        )
        .unwrap()
    }

    #[test]
    fn constant_response_is_recovered_exactly() {
        let c = 2.5f64;
        let design = synthetic_design(400, 1, 2, |row| {
            (vec![(row as f64).sin(), (row as f64).cos()], vec![c], 1.0)
        });
        let cfg = GammaEstimatorConfig::default();
        let mut out = [0.0f64];
        design.estimate(&cfg, &[0.2, -0.7], None, &mut out).unwrap();
        assert_eq!(out[0], c);
    }

    #[test]
    fn constant_response_survives_weights() {
        let c = -1.25f64;
        let design = synthetic_design(400, 1, 2, |row| {
            let w = 1.0 + (row % 5) as f64;
            (vec![(row as f64 * 0.37).sin(), (row as f64 * 0.11).cos()], vec![c], w)
        });
        let cfg = GammaEstimatorConfig::default();
        let mut out = [0.0f64];
        design.estimate(&cfg, &[0.0, 0.0], None, &mut out).unwrap();
        assert!((out[0] - c).abs() < 1e-12);
    }

    #[test]
    fn knn_selects_nearest_and_breaks_ties_by_row() {
        // two clusters of identical points; only the near cluster counts
        let design = synthetic_design(20, 1, 1, |row| {
            if row < 10 {
                (vec![0.0], vec![1.0], 1.0)
            } else {
                (vec![10.0], vec![100.0], 1.0)
            }
        });
        let cfg = GammaEstimatorConfig {
            method: GammaMethod::Knn { k: Some(5) },
            ..Default::default()
        };
        let mut out = [0.0f64];
        design.estimate(&cfg, &[0.1], None, &mut out).unwrap();
        assert_eq!(out[0], 1.0);
    }

    #[test]
    fn insufficient_design_is_an_error() {
        let design = synthetic_design(3, 1, 1, |_| (vec![0.0], vec![1.0], 1.0));
        let cfg = GammaEstimatorConfig {
            method: GammaMethod::Knn { k: Some(10) },
            ..Default::default()
        };
        let mut out = [0.0f64];
        let err = design.estimate(&cfg, &[0.0], None, &mut out).unwrap_err();
        assert!(matches!(err, CoreError::InsufficientEnsemble { .. }));
    }

    #[test]
    fn nadaraya_watson_recovers_smooth_trend() {
        // y = 3x on a line of design points
        let design = synthetic_design(200, 1, 1, |row| {
            let x = row as f64 / 100.0 - 1.0;
            (vec![x], vec![3.0 * x], 1.0)
        });
        let cfg = GammaEstimatorConfig {
            method: GammaMethod::NadarayaWatson { bandwidth: 0.05 },
            ..Default::default()
        };
        let mut out = [0.0f64];
        design.estimate(&cfg, &[0.4], None, &mut out).unwrap();
        assert!((out[0] - 1.2).abs() < 0.05, "got {}", out[0]);
    }

    #[test]
    fn pruned_scan_matches_brute_force() {
        // the projection-pruned scan must select exactly the brute-force
        // k nearest under the (distance, row) order
        use crate::rng::{tag, CounterRng};
        let mut rng = CounterRng::new(404, &[tag::CHECK, 0x6b6e6e]);
        let (n, qw, k) = (500usize, 6usize, 23usize);
        let points: Vec<f64> = (0..n * qw).map(|_| rng.standard_normal()).collect();
        let resp: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let weights: Vec<f64> = (0..n).map(|_| 0.5 + rng.uniform()).collect();
        let weighted: Vec<f64> =
            resp.iter().zip(&weights).map(|(r, w)| r * w).collect();
        let design = GammaDesign::from_raw_parts(
            1,
            qw,
            points.clone(),
            weighted.clone(),
            weights.clone(),
            vec![1; n],
            k,
        )
        .unwrap();
        let cfg = GammaEstimatorConfig {
            method: GammaMethod::Knn { k: Some(k) },
            ..Default::default()
        };
        for trial in 0..50 {
            let query: Vec<f64> = (0..qw).map(|_| rng.standard_normal()).collect();
            let mut out = [0.0f64];
            design.estimate(&cfg, &query, None, &mut out).unwrap();
            // brute force
            let mut dists: Vec<(f64, u32)> = (0..n)
                .map(|row| {
                    let d: f64 = (0..qw)
                        .map(|c| (query[c] - points[row * qw + c]).powi(2))
                        .sum();
                    (d, row as u32)
                })
                .collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut num = 0.0;
            let mut den = 0.0;
            let mut rows: Vec<u32> = dists[..k].iter().map(|&(_, r)| r).collect();
            rows.sort_unstable();
            for &row in &rows {
                num += weighted[row as usize];
                den += weights[row as usize];
            }
            let inv_k = 1.0 / k as f64;
            let mean_den = (den * inv_k).max(cfg.denominator_floor);
            let expect = num * (inv_k / mean_den);
            assert_eq!(out[0], expect, "trial {trial}");
        }
    }

    #[test]
    fn degree_stratification_filters_rows() {
        let design = GammaDesign::from_raw_parts(
            1,
            1,
            vec![0.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0, 5.0, 5.0],
            vec![1.0; 4],
            vec![2, 2, 3, 3],
            2,
        )
        .unwrap();
        let cfg = GammaEstimatorConfig {
            method: GammaMethod::Knn { k: Some(2) },
            stratify_by_degree: true,
            ..Default::default()
        };
        let mut out = [0.0f64];
        design.estimate(&cfg, &[0.0], Some(3), &mut out).unwrap();
        assert_eq!(out[0], 5.0);
        design.estimate(&cfg, &[0.0], Some(2), &mut out).unwrap();
        assert_eq!(out[0], 1.0);
    }
}
