//! Girsanov path weights on driftless bundles and the relative-entropy
//! identity between two drifted single-particle laws.

use rayon::prelude::*;

use crate::dynamics::{Diffusion, Drift, InitialLaw, PathBundle, PathView, SimTopology, TimeGrid};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::verify::report::{TestReport, Verdict};
use crate::verify::stats::{mean_and_se, DEFAULT_SIGMA_MULTIPLE};

/// Log likelihood ratio of the drifted against the driftless path law,
/// evaluated along one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathWeight {
    pub log_weight: f64,
}

/// Per-vertex discretized Girsanov log-weights on a (driftless) bundle:
/// `sum_j b_j . (sigma sigma^T)^{-1} dX_j - (1/2) sum_j |sigma^{-1} b_j|^2 h`,
/// with each vertex's drift evaluated against its own neighborhood prefixes.
/// Frozen vertices carry zero log-weight.
pub fn girsanov_weight<S: Scalar>(
    bundle: &PathBundle<S>,
    topo: &SimTopology,
    drift: &dyn Drift<S>,
    diffusion: &dyn Diffusion<S>,
) -> Result<Vec<PathWeight>> {
    let n = bundle.n_vertices();
    if topo.len() != n {
        return Err(CoreError::InvalidComparison(format!(
            "topology has {} vertices, bundle {}",
            topo.len(),
            n
        )));
    }
    let d = bundle.dim();
    let grid = *bundle.grid();
    let h = grid.h();
    let weights: Vec<Result<PathWeight>> = (0..n)
        .into_par_iter()
        .map(|v| {
            if !topo.is_member(v) {
                return Ok(PathWeight { log_weight: 0.0 });
            }
            let mut log_w = 0.0f64;
            let mut b = vec![S::zero(); d];
            let mut sig = vec![S::zero(); d];
            let mut nbrs: Vec<PathView<S>> = Vec::new();
            for j in 0..grid.steps() {
                let own = bundle.path_prefix(v, j + 1);
                nbrs.clear();
                nbrs.extend(
                    topo.neighbors(v).iter().map(|&u| bundle.path_prefix(u as usize, j + 1)),
                );
                drift.eval(j, &grid, own, &nbrs, &mut b);
                diffusion.diag(j, &grid, own, &mut sig);
                let x_now = bundle.state(v, j);
                let x_next = bundle.state(v, j + 1);
                for i in 0..d {
                    let s = sig[i].as_f64();
                    if s.abs() < 1e-12 {
                        return Err(CoreError::SingularDiffusion { step: j });
                    }
                    let bi = b[i].as_f64();
                    let dx = x_next[i].as_f64() - x_now[i].as_f64();
                    log_w += bi * dx / (s * s) - 0.5 * (bi / s).powi(2) * h;
                }
            }
            if !log_w.is_finite() {
                return Err(CoreError::InvalidArgument(
                    "non-finite Girsanov log-weight".into(),
                ));
            }
            Ok(PathWeight { log_weight: log_w })
        })
        .collect();
    weights.into_iter().collect()
}

/// Checks the relative-entropy identity between the laws of two
/// single-particle drifts sharing a diffusion: the mean log likelihood
/// ratio under the first system must match
/// `(1/2) E int |sigma^{-1}(b1 - b2)|^2 dt` within the pooled 3-sigma band.
#[allow(clippy::too_many_arguments)]
pub fn relative_entropy_check<S: Scalar>(
    b1: &dyn Drift<S>,
    b2: &dyn Drift<S>,
    sigma: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    grid: &TimeGrid,
    paths: usize,
    seed: u64,
) -> Result<TestReport> {
    let topo = SimTopology::isolated(paths);
    let bundle = crate::dynamics::simulate_system(&topo, b1, sigma, init, grid, seed)?;
    let w1 = girsanov_weight(&bundle, &topo, b1, sigma)?;
    let w2 = girsanov_weight(&bundle, &topo, b2, sigma)?;
    // pathwise log(dP1/dP2) = logw_{b1} - logw_{b2} on the same path
    let log_ratio: Vec<f64> =
        w1.iter().zip(&w2).map(|(a, b)| a.log_weight - b.log_weight).collect();
    let (lhs, lhs_se) = mean_and_se(&log_ratio);

    let d = bundle.dim();
    let h = grid.h();
    let rhs_samples: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|v| {
            let mut acc = 0.0;
            let mut d1 = vec![S::zero(); d];
            let mut d2 = vec![S::zero(); d];
            let mut sig = vec![S::zero(); d];
            for j in 0..grid.steps() {
                let own = bundle.path_prefix(v, j + 1);
                b1.eval(j, grid, own, &[], &mut d1);
                b2.eval(j, grid, own, &[], &mut d2);
                sigma.diag(j, grid, own, &mut sig);
                for i in 0..d {
                    let diff = (d1[i].as_f64() - d2[i].as_f64()) / sig[i].as_f64();
                    acc += diff * diff * h;
                }
            }
            0.5 * acc
        })
        .collect();
    let (rhs, rhs_se) = mean_and_se(&rhs_samples);

    let pooled = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
    let z = if pooled > 0.0 {
        (lhs - rhs).abs() / pooled
    } else if (lhs - rhs).abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(
        TestReport::new("relative-entropy", z, Verdict::from_bool(z <= DEFAULT_SIGMA_MULTIPLE))
            .with_threshold(DEFAULT_SIGMA_MULTIPLE)
            .with_se(pooled)
            .with_seed(seed)
            .with_size("paths", paths as u64)
            .with_detail("lhs_mean_log_ratio", lhs)
            .with_detail("rhs_energy", rhs),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        simulate_driftless, ConstantDrift, IdentityDiffusion, TanhDiagonalDiffusion, ZeroDrift,
    };

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 100).unwrap()
    }

    #[test]
    fn zero_drift_gives_exactly_zero_weights() {
        let topo = SimTopology::isolated(50);
        let init = InitialLaw::<f64>::gaussian(2, 0.0, 1.0);
        let b = simulate_driftless(&topo, &IdentityDiffusion, &init, &grid(), 3).unwrap();
        let w = girsanov_weight(&b, &topo, &ZeroDrift, &IdentityDiffusion).unwrap();
        assert!(w.iter().all(|x| x.log_weight == 0.0));
    }

    #[test]
    fn exp_weight_mean_is_one_for_constant_drift() {
        // martingale-mean oracle: E[exp(log w)] = 1 exactly in the
        // discretized model with constant b and sigma = I
        let n = 10_000;
        let topo = SimTopology::isolated(n);
        let init = InitialLaw::<f64>::point(vec![0.0]);
        let b = simulate_driftless(&topo, &IdentityDiffusion, &init, &grid(), 11).unwrap();
        let drift = ConstantDrift { value: vec![0.8] };
        let w = girsanov_weight(&b, &topo, &drift, &IdentityDiffusion).unwrap();
        let ew: Vec<f64> = w.iter().map(|x| x.log_weight.exp()).collect();
        let (mean, se) = mean_and_se(&ew);
        assert!(
            (mean - 1.0).abs() <= 3.0 * se,
            "mean {mean}, se {se}"
        );
    }

    #[test]
    fn frozen_vertices_have_zero_weight() {
        let topo = SimTopology::frozen(4);
        let init = InitialLaw::<f64>::gaussian(1, 0.0, 1.0);
        let b = simulate_driftless(&topo, &IdentityDiffusion, &init, &grid(), 5).unwrap();
        let drift = ConstantDrift { value: vec![1.0] };
        let w = girsanov_weight(&b, &topo, &drift, &IdentityDiffusion).unwrap();
        assert!(w.iter().all(|x| x.log_weight == 0.0));
    }

    #[test]
    fn relative_entropy_equal_drifts_is_zero() {
        let d = ConstantDrift { value: vec![0.7] };
        let init = InitialLaw::<f64>::gaussian(1, 0.0, 1.0);
        let r =
            relative_entropy_check::<f64>(&d, &d, &IdentityDiffusion, &init, &grid(), 200, 1)
                .unwrap();
        assert!(r.passed());
        assert_eq!(r.details["lhs_mean_log_ratio"], 0.0);
        assert_eq!(r.details["rhs_energy"], 0.0);
    }

    #[test]
    fn relative_entropy_constant_vs_zero_matches_half_c_squared() {
        let c = 0.9;
        let b1 = ConstantDrift { value: vec![c] };
        let init = InitialLaw::<f64>::gaussian(1, 0.0, 1.0);
        let r = relative_entropy_check::<f64>(
            &b1,
            &ZeroDrift,
            &IdentityDiffusion,
            &init,
            &grid(),
            10_000,
            2,
        )
        .unwrap();
        assert!(r.passed(), "z = {}", r.statistic);
        let want = 0.5 * c * c;
        assert!((r.details["rhs_energy"] - want).abs() < 1e-12);
        assert!(
            (r.details["lhs_mean_log_ratio"] - want).abs() / want < 0.05,
            "lhs {} vs {want}",
            r.details["lhs_mean_log_ratio"]
        );
    }

    #[test]
    fn relative_entropy_state_dependent_cross_check() {
        // bounded state-dependent drift against zero with non-identity sigma
        struct TanhDrift;
        impl Drift<f64> for TanhDrift {
            fn eval(
                &self,
                step: usize,
                _: &TimeGrid,
                own: PathView<'_, f64>,
                _: &[PathView<'_, f64>],
                out: &mut [f64],
            ) {
                for (o, &x) in out.iter_mut().zip(own.value(step)) {
                    *o = 0.8 * x.tanh();
                }
            }
            fn growth_const(&self) -> f64 {
                0.8
            }
            fn describe(&self) -> String {
                "tanh-drift".into()
            }
        }
        let sigma = TanhDiagonalDiffusion::new(1.0, 0.1).unwrap();
        let init = InitialLaw::<f64>::gaussian(1, 0.0, 1.0);
        let r = relative_entropy_check::<f64>(
            &TanhDrift,
            &ZeroDrift,
            &sigma,
            &init,
            &grid(),
            8_000,
            4,
        )
        .unwrap();
        assert!(r.passed(), "z = {}", r.statistic);
    }
}
