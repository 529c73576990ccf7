//! Finite embeddings of path histories.

use crate::dynamics::PathView;
use crate::scalar::Scalar;

/// Finite surrogate for conditioning on a full path history: the current
/// value plus values at a fixed set of lookback strides (in grid steps,
/// clamped at time zero). Uses only grid points at or before the current
/// step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEmbedding {
    lags: Vec<usize>,
}

impl Default for HistoryEmbedding {
    /// Current value plus four dyadic lookbacks.
    fn default() -> Self {
        HistoryEmbedding { lags: vec![1, 2, 4, 8] }
    }
}

impl HistoryEmbedding {
    pub fn new(mut lags: Vec<usize>) -> Self {
        lags.retain(|&l| l > 0);
        lags.sort_unstable();
        lags.dedup();
        HistoryEmbedding { lags }
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    /// Output dimension per conditioned path.
    pub fn width(&self, dim: usize) -> usize {
        dim * (1 + self.lags.len())
    }

    /// Writes the embedding of the prefix ending at `step` into `out`.
    pub fn embed<S: Scalar>(&self, path: &PathView<'_, S>, step: usize, out: &mut [S]) {
        debug_assert!(step < path.len());
        debug_assert_eq!(out.len(), self.width(path.dim()));
        let d = path.dim();
        out[..d].copy_from_slice(path.value(step));
        for (i, &lag) in self.lags.iter().enumerate() {
            let j = step.saturating_sub(lag);
            out[(i + 1) * d..(i + 2) * d].copy_from_slice(path.value(j));
        }
    }
}
