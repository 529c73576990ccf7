//! Wasserstein-1 distances between empirical samples: exact quantile
//! coupling in one dimension, sliced with 64 fixed unit projections above.

use crate::error::{CoreError, Result};
use crate::rng::CounterRng;
use crate::scalar::Scalar;

/// Number of fixed projection directions for the sliced distance.
pub const SLICED_DIRECTIONS: usize = 64;

/// Seed of the fixed direction set; published so reports are reproducible.
const DIRECTION_SEED: u64 = 0x5eed_d12e_c710_4a11;

/// Exact W1 between two one-dimensional empirical measures (possibly of
/// different sizes) via the quantile coupling; segment boundaries are
/// handled in integer arithmetic.
pub fn wasserstein1_1d<S: Scalar>(a: &[S], b: &[S]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::InvalidArgument("empty sample".into()));
    }
    let mut xs: Vec<f64> = a.iter().map(|x| x.as_f64()).collect();
    let mut ys: Vec<f64> = b.iter().map(|x| x.as_f64()).collect();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite sample"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite sample"));
    let (na, nb) = (xs.len() as u64, ys.len() as u64);
    let total = na * nb; // common denominator of all quantile breakpoints
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u64;
    let mut acc = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let ta = (i as u64 + 1) * nb;
        let tb = (j as u64 + 1) * na;
        let next = ta.min(tb);
        acc += (xs[i] - ys[j]).abs() * ((next - prev) as f64 / total as f64);
        prev = next;
        if ta == next {
            i += 1;
        }
        if tb == next {
            j += 1;
        }
    }
    Ok(acc)
}

/// The fixed unit directions used by the sliced distance in dimension `dim`.
pub fn sliced_directions(dim: usize) -> Vec<Vec<f64>> {
    (0..SLICED_DIRECTIONS)
        .map(|k| {
            let mut rng = CounterRng::new(DIRECTION_SEED, &[k as u64]);
            loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    return v.into_iter().map(|x| x / norm).collect();
                }
            }
        })
        .collect()
}

/// W1 between empirical samples of equal dimension: exact in one dimension,
/// sliced (averaged over the fixed directions) otherwise. Symmetric and
/// nonnegative.
pub fn wasserstein1<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::InvalidArgument("empty sample".into()));
    }
    let dim = a[0].len();
    if dim == 0 || a.iter().chain(b).any(|p| p.len() != dim) {
        return Err(CoreError::InvalidArgument("inconsistent point dimensions".into()));
    }
    if dim == 1 {
        let xs: Vec<S> = a.iter().map(|p| p[0]).collect();
        let ys: Vec<S> = b.iter().map(|p| p[0]).collect();
        return wasserstein1_1d(&xs, &ys);
    }
    let dirs = sliced_directions(dim);
    let mut acc = 0.0;
    for dir in &dirs {
        let project = |pts: &[Vec<S>]| -> Vec<f64> {
            pts.iter()
                .map(|p| p.iter().zip(dir).map(|(&x, &u)| x.as_f64() * u).sum())
                .collect()
        };
        let xs = project(a);
        let ys = project(b);
        acc += wasserstein1_1d(&xs, &ys)?;
    }
    Ok(acc / dirs.len() as f64)
}
