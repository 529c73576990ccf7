//! Borrowed views of discretized paths.

use crate::scalar::Scalar;

/// Read-only view of one vertex's path prefix on the grid: `len` stored
/// points of dimension `dim`, point `j` starting at `offset + j * stride`.
///
/// Frame-major simulation storage and coordinate-major ensemble storage both
/// expose their paths through this one type.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a, S: Scalar> {
    data: &'a [S],
    offset: usize,
    stride: usize,
    dim: usize,
    len: usize,
}

impl<'a, S: Scalar> PathView<'a, S> {
    pub fn new(data: &'a [S], offset: usize, stride: usize, dim: usize, len: usize) -> Self {
        debug_assert!(len > 0);
        debug_assert!(offset + (len - 1) * stride + dim <= data.len());
        PathView { data, offset, stride, dim, len }
    }

    /// View of a contiguous `[step][dim]` path.
    pub fn contiguous(data: &'a [S], dim: usize) -> Self {
        debug_assert!(dim > 0 && data.len() % dim == 0);
        PathView { data, offset: 0, stride: dim, dim, len: data.len() / dim }
    }

    /// Number of stored grid points (prefix length).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// State at grid point `j`.
    #[inline]
    pub fn value(&self, j: usize) -> &[S] {
        debug_assert!(j < self.len);
        let start = self.offset + j * self.stride;
        &self.data[start..start + self.dim]
    }

    /// Latest stored state.
    #[inline]
    pub fn last(&self) -> &[S] {
        self.value(self.len - 1)
    }

    /// Running supremum of the Euclidean norm over the stored prefix.
    pub fn sup_norm(&self) -> f64 {
        (0..self.len)
            .map(|j| crate::scalar::norm_sq(self.value(j)).as_f64().sqrt())
            .fold(0.0, f64::max)
    }

    /// Copies the prefix into an owned `[step][dim]` vector.
    pub fn to_owned_path(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.len * self.dim);
        for j in 0..self.len {
            out.extend_from_slice(self.value(j));
        }
        out
    }

    /// Shortened view of the first `len` points.
    pub fn prefix(&self, len: usize) -> PathView<'a, S> {
        debug_assert!(len >= 1 && len <= self.len);
        PathView { len, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strided_and_contiguous_agree() {
        // two vertices, dim 2, three steps, frame-major
        let data: Vec<f64> = (0..12).map(|x| x as f64).collect();
        let v1 = PathView::new(&data, 2, 4, 2, 3);
        assert_eq!(v1.value(0), &[2.0, 3.0]);
        assert_eq!(v1.value(2), &[10.0, 11.0]);
        let own = v1.to_owned_path();
        let c = PathView::contiguous(&own, 2);
        assert_eq!(c.len(), 3);
        assert_eq!(c.value(2), v1.value(2));
    }

    #[test]
    fn sup_norm_is_running_max() {
        let data = vec![3.0f64, 4.0, 0.0, 1.0];
        let v = PathView::contiguous(&data, 2);
        assert!((v.sup_norm() - 5.0).abs() < 1e-12);
    }
}
