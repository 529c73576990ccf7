//! Uniform time grids on [0, T].

use crate::error::{CoreError, Result};

/// Uniform grid with `steps` intervals on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "horizon {horizon} must be positive and finite"
            )));
        }
        if steps == 0 {
            return Err(CoreError::InvalidArgument("steps must be >= 1".into()));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points, `steps + 1`.
    pub fn points(&self) -> usize {
        self.steps + 1
    }

    pub fn h(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        debug_assert!(j <= self.steps);
        if j == self.steps {
            self.horizon
        } else {
            j as f64 * self.h()
        }
    }

    /// Index of a grid time, within absolute tolerance 1e-12.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let j = (t / self.h()).round();
        let idx = j as usize;
        if j >= 0.0 && idx <= self.steps && (self.time(idx) - t).abs() <= 1e-12 {
            Ok(idx)
        } else {
            Err(CoreError::OffGrid { t, horizon: self.horizon, steps: self.steps })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let g = TimeGrid::new(1.0, 7).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(7), 1.0);
        assert!((g.time(3) - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn index_of_grid_times() {
        let g = TimeGrid::new(2.0, 10).unwrap();
        for j in 0..=10 {
            assert_eq!(g.index_of(g.time(j)).unwrap(), j);
        }
        assert!(g.index_of(0.123).is_err());
        assert!(g.index_of(2.2).is_err());
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TimeGrid::new(0.0, 5).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(f64::NAN, 5).is_err());
    }
}
