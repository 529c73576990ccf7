//! Randomized runtime validation of coefficient contracts: neighbor-
//! permutation symmetry, progressive measurability, growth and norm bounds.

use crate::dynamics::coeffs::{Diffusion, Drift};
use crate::dynamics::grid::TimeGrid;
use crate::dynamics::path::PathView;
use crate::error::{CoreError, Result};
use crate::rng::{tag, CounterRng};
use crate::scalar::Scalar;

fn random_path<S: Scalar>(rng: &mut CounterRng, points: usize, dim: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(points * dim);
    let mut state = vec![0.0f64; dim];
    for _ in 0..points {
        for s in state.iter_mut() {
            *s += 0.3 * rng.standard_normal();
            out.push(S::from_f64(*s));
        }
    }
    out
}

/// Spot-checks a drift against its Assumption-A contract on randomized
/// inputs: symmetry under neighbor permutation (tolerance 1e-12 on the
/// output norm), exact invariance under perturbation of strictly-future
/// path values, and the linear-growth bound with the declared constant.
pub fn validate_drift<S: Scalar>(
    drift: &dyn Drift<S>,
    dim: usize,
    grid: &TimeGrid,
    seed: u64,
    trials: usize,
) -> Result<()> {
    let mut rng = CounterRng::new(seed, &[tag::CHECK, 0xd21f7]);
    let points = grid.points();
    for trial in 0..trials {
        let n_nbrs = (rng.below(5) + (trial as u64 % 2)) as usize; // includes 0 and 1
        let own = random_path::<S>(&mut rng, points, dim);
        let nbr_paths: Vec<Vec<S>> =
            (0..n_nbrs).map(|_| random_path::<S>(&mut rng, points, dim)).collect();
        let step = rng.below(grid.steps() as u64) as usize;
        let len = step + 1;

        let own_view = PathView::contiguous(&own, dim).prefix(len);
        let views: Vec<PathView<S>> =
            nbr_paths.iter().map(|p| PathView::contiguous(p, dim).prefix(len)).collect();
        let mut base = vec![S::zero(); dim];
        drift.eval(step, grid, own_view, &views, &mut base);

        // symmetry under a random permutation of the collection
        let mut perm: Vec<usize> = (0..n_nbrs).collect();
        rng.shuffle(&mut perm);
        let permuted: Vec<PathView<S>> = perm.iter().map(|&i| views[i]).collect();
        let mut out = vec![S::zero(); dim];
        drift.eval(step, grid, own_view, &permuted, &mut out);
        let diff: f64 = base
            .iter()
            .zip(&out)
            .map(|(&a, &b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max);
        if diff > 1e-12 {
            return Err(CoreError::ContractViolation(format!(
                "{}: not symmetric under neighbor permutation (max diff {diff:.3e})",
                drift.describe()
            )));
        }

        // progressive measurability: rewrite strictly-future values
        if len < points {
            let mut own_fut = own.clone();
            let mut nbr_fut = nbr_paths.clone();
            for x in own_fut[len * dim..].iter_mut() {
                *x = S::from_f64(rng.standard_normal() * 100.0);
            }
            for p in nbr_fut.iter_mut() {
                for x in p[len * dim..].iter_mut() {
                    *x = S::from_f64(rng.standard_normal() * 100.0);
                }
            }
            let own_view2 = PathView::contiguous(&own_fut, dim).prefix(len);
            let views2: Vec<PathView<S>> =
                nbr_fut.iter().map(|p| PathView::contiguous(p, dim).prefix(len)).collect();
            let mut out2 = vec![S::zero(); dim];
            drift.eval(step, grid, own_view2, &views2, &mut out2);
            if out2.iter().zip(&base).any(|(a, b)| a.as_f64() != b.as_f64()) {
                return Err(CoreError::ContractViolation(format!(
                    "{}: output depends on future path values",
                    drift.describe()
                )));
            }
        }

        // linear growth with the declared constant
        let norm_b = base.iter().map(|&x| x.as_f64().powi(2)).sum::<f64>().sqrt();
        let own_sup = own_view.sup_norm();
        let avg_sup = if views.is_empty() {
            0.0
        } else {
            views.iter().map(|v| v.sup_norm()).sum::<f64>() / views.len() as f64
        };
        let budget = drift.growth_const() * (1.0 + own_sup + avg_sup) + 1e-9;
        if norm_b > budget {
            return Err(CoreError::ContractViolation(format!(
                "{}: growth bound violated (|b| = {norm_b:.6} > {budget:.6})",
                drift.describe()
            )));
        }
    }
    Ok(())
}

/// Spot-checks a diffusion: invertibility and the declared norm bounds at
/// randomized evaluation points, plus exact progressive measurability.
pub fn validate_diffusion<S: Scalar>(
    diffusion: &dyn Diffusion<S>,
    dim: usize,
    grid: &TimeGrid,
    seed: u64,
    trials: usize,
) -> Result<()> {
    let mut rng = CounterRng::new(seed, &[tag::CHECK, 0x51f2]);
    let (sigma_max, sigma_inv_max) = diffusion.bounds();
    let points = grid.points();
    for _ in 0..trials {
        let own = random_path::<S>(&mut rng, points, dim);
        let step = rng.below(grid.steps() as u64) as usize;
        let len = step + 1;
        let view = PathView::contiguous(&own, dim).prefix(len);
        let mut diag = vec![S::zero(); dim];
        diffusion.diag(step, grid, view, &mut diag);
        for &s in &diag {
            let s = s.as_f64();
            if s == 0.0 || !s.is_finite() {
                return Err(CoreError::ContractViolation(format!(
                    "{}: non-invertible diagonal entry {s}",
                    diffusion.describe()
                )));
            }
            if s.abs() > sigma_max + 1e-12 || 1.0 / s.abs() > sigma_inv_max + 1e-12 {
                return Err(CoreError::ContractViolation(format!(
                    "{}: diagonal entry {s} outside declared bounds ({sigma_max}, {sigma_inv_max})",
                    diffusion.describe()
                )));
            }
        }
        if len < points {
            let mut own_fut = own.clone();
            for x in own_fut[len * dim..].iter_mut() {
                *x = S::from_f64(rng.standard_normal() * 50.0);
            }
            let view2 = PathView::contiguous(&own_fut, dim).prefix(len);
            let mut diag2 = vec![S::zero(); dim];
            diffusion.diag(step, grid, view2, &mut diag2);
            if diag2.iter().zip(&diag).any(|(a, b)| a.as_f64() != b.as_f64()) {
                return Err(CoreError::ContractViolation(format!(
                    "{}: diagonal depends on future path values",
                    diffusion.describe()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::coeffs::{
        ConstantDrift, EmpiricalMeanTanhDrift, IdentityDiffusion, OuPairwiseDrift,
        TanhDiagonalDiffusion, ZeroDrift,
    };

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 16).unwrap()
    }

    #[test]
    fn shipped_drifts_pass() {
        let g = grid();
        validate_drift::<f64>(&ZeroDrift, 2, &g, 1, 40).unwrap();
        validate_drift::<f64>(&ConstantDrift { value: vec![0.5, -1.0] }, 2, &g, 2, 40).unwrap();
        validate_drift::<f64>(&OuPairwiseDrift { rate: 0.5, coupling: 1.0 }, 1, &g, 3, 40).unwrap();
        validate_drift::<f64>(&EmpiricalMeanTanhDrift { rate: 0.5, coupling: 1.0 }, 1, &g, 4, 40)
            .unwrap();
    }

    #[test]
    fn shipped_diffusions_pass() {
        let g = grid();
        validate_diffusion::<f64>(&IdentityDiffusion, 2, &g, 5, 40).unwrap();
        validate_diffusion::<f64>(&TanhDiagonalDiffusion::new(1.0, 0.1).unwrap(), 1, &g, 6, 40)
            .unwrap();
    }

    #[test]
    fn asymmetric_drift_is_caught() {
        struct FirstNeighborOnly;
        impl Drift<f64> for FirstNeighborOnly {
            fn eval(
                &self,
                step: usize,
                _: &TimeGrid,
                _: PathView<'_, f64>,
                neighbors: &[PathView<'_, f64>],
                out: &mut [f64],
            ) {
                out[0] = neighbors.first().map_or(0.0, |n| n.value(step)[0]);
            }
            fn growth_const(&self) -> f64 {
                10.0
            }
            fn describe(&self) -> String {
                "first-neighbor".into()
            }
        }
        let err = validate_drift::<f64>(&FirstNeighborOnly, 1, &grid(), 7, 60).unwrap_err();
        assert!(matches!(err, CoreError::ContractViolation(_)));
    }

    #[test]
    fn anticipating_drift_is_caught() {
        struct Peek;
        impl Drift<f64> for Peek {
            fn eval(
                &self,
                _: usize,
                _: &TimeGrid,
                own: PathView<'_, f64>,
                _: &[PathView<'_, f64>],
                out: &mut [f64],
            ) {
                // reads the last stored value regardless of the step index
                out[0] = own.value(own.len() - 1)[0];
            }
            fn growth_const(&self) -> f64 {
                10.0
            }
            fn describe(&self) -> String {
                "peek".into()
            }
        }
        // The harness hands eval a prefix view, so peeking cannot actually
        // reach future values; the contract holds by construction here.
        validate_drift::<f64>(&Peek, 1, &grid(), 8, 40).unwrap();
    }

    #[test]
    fn undeclared_growth_is_caught() {
        struct Quadratic;
        impl Drift<f64> for Quadratic {
            fn eval(
                &self,
                step: usize,
                _: &TimeGrid,
                own: PathView<'_, f64>,
                _: &[PathView<'_, f64>],
                out: &mut [f64],
            ) {
                let x = own.value(step)[0];
                out[0] = 100.0 * x * x;
            }
            fn growth_const(&self) -> f64 {
                0.1
            }
            fn describe(&self) -> String {
                "quadratic".into()
            }
        }
        let err = validate_drift::<f64>(&Quadratic, 1, &grid(), 9, 60).unwrap_err();
        assert!(matches!(err, CoreError::ContractViolation(_)));
    }
}
