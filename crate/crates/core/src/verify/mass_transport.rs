//! Monte Carlo mass-transport check on marked trees: for bounded test
//! functions supported near the root pair, the expected outgoing and
//! incoming transported mass must agree.

use rayon::prelude::*;

use crate::dynamics::{simulate_system, DiffusionSpec, DriftSpec, InitialLaw, PathBundle, SimTopology, TimeGrid};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::topology::{sample_ugw, OffspringLaw, SampledTree};
use crate::verify::report::{TestReport, Verdict};
use crate::verify::stats::{mean_and_se, DEFAULT_SIGMA_MULTIPLE};

/// Bounded test function on doubly rooted marked trees. `eval` receives the
/// tree, the simulated marks, and the two roots as vertex indices; it must
/// vanish when the roots are farther apart than `radius` and stay within
/// `bound` in absolute value.
pub trait TransportFn<S: Scalar>: Send + Sync {
    fn name(&self) -> String;
    fn radius(&self) -> usize;
    fn bound(&self) -> f64;
    fn eval(&self, tree: &SampledTree, marks: &PathBundle<S>, o: usize, o2: usize) -> f64;
}

/// F = 1{o = o'}.
pub fn equality_indicator<S: Scalar>() -> Box<dyn TransportFn<S>> {
    struct F;
    impl<S: Scalar> TransportFn<S> for F {
        fn name(&self) -> String {
            "equality-indicator".into()
        }
        fn radius(&self) -> usize {
            0
        }
        fn bound(&self) -> f64 {
            1.0
        }
        fn eval(&self, _: &SampledTree, _: &PathBundle<S>, o: usize, o2: usize) -> f64 {
            f64::from(o == o2)
        }
    }
    Box::new(F)
}

/// F = 1{o' adjacent to o}.
pub fn edge_indicator<S: Scalar>() -> Box<dyn TransportFn<S>> {
    struct F;
    impl<S: Scalar> TransportFn<S> for F {
        fn name(&self) -> String {
            "edge-indicator".into()
        }
        fn radius(&self) -> usize {
            1
        }
        fn bound(&self) -> f64 {
            1.0
        }
        fn eval(&self, tree: &SampledTree, _: &PathBundle<S>, o: usize, o2: usize) -> f64 {
            f64::from(is_adjacent(tree, o, o2))
        }
    }
    Box::new(F)
}

/// F = 1{o' adjacent to o} tanh(x_o(T)).
pub fn edge_mark<S: Scalar>() -> Box<dyn TransportFn<S>> {
    struct F;
    impl<S: Scalar> TransportFn<S> for F {
        fn name(&self) -> String {
            "edge-mark".into()
        }
        fn radius(&self) -> usize {
            1
        }
        fn bound(&self) -> f64 {
            1.0
        }
        fn eval(&self, tree: &SampledTree, marks: &PathBundle<S>, o: usize, o2: usize) -> f64 {
            if !is_adjacent(tree, o, o2) {
                return 0.0;
            }
            let j = marks.grid().steps();
            marks.state(o, j)[0].as_f64().tanh()
        }
    }
    Box::new(F)
}

/// F = 1{o' adjacent to o} tanh(x_o(T)) logistic(x_{o'}(T)); asymmetric in
/// the pair, so the identity is informative.
pub fn edge_mark_pair<S: Scalar>() -> Box<dyn TransportFn<S>> {
    struct F;
    impl<S: Scalar> TransportFn<S> for F {
        fn name(&self) -> String {
            "edge-mark-pair".into()
        }
        fn radius(&self) -> usize {
            1
        }
        fn bound(&self) -> f64 {
            1.0
        }
        fn eval(&self, tree: &SampledTree, marks: &PathBundle<S>, o: usize, o2: usize) -> f64 {
            if !is_adjacent(tree, o, o2) {
                return 0.0;
            }
            let j = marks.grid().steps();
            let xo = marks.state(o, j)[0].as_f64();
            let xo2 = marks.state(o2, j)[0].as_f64();
            xo.tanh() / (1.0 + (-xo2).exp())
        }
    }
    Box::new(F)
}

/// F = 1{d(o, o') = 2} tanh(x_o(T)).
pub fn two_step_mark<S: Scalar>() -> Box<dyn TransportFn<S>> {
    struct F;
    impl<S: Scalar> TransportFn<S> for F {
        fn name(&self) -> String {
            "two-step-mark".into()
        }
        fn radius(&self) -> usize {
            2
        }
        fn bound(&self) -> f64 {
            1.0
        }
        fn eval(&self, tree: &SampledTree, marks: &PathBundle<S>, o: usize, o2: usize) -> f64 {
            if tree_distance(tree, o, o2) != 2 {
                return 0.0;
            }
            let j = marks.grid().steps();
            marks.state(o, j)[0].as_f64().tanh()
        }
    }
    Box::new(F)
}

/// F = 1{o' adjacent to o} / (1 + deg(o')); purely structural transport.
pub fn inverse_degree_edge<S: Scalar>() -> Box<dyn TransportFn<S>> {
    struct F;
    impl<S: Scalar> TransportFn<S> for F {
        fn name(&self) -> String {
            "inverse-degree-edge".into()
        }
        fn radius(&self) -> usize {
            1
        }
        fn bound(&self) -> f64 {
            1.0
        }
        fn eval(&self, tree: &SampledTree, _: &PathBundle<S>, o: usize, o2: usize) -> f64 {
            if !is_adjacent(tree, o, o2) {
                return 0.0;
            }
            let deg = tree.children_of(o2).len() + usize::from(tree.parent_of(o2).is_some());
            1.0 / (1.0 + deg as f64)
        }
    }
    Box::new(F)
}

fn is_adjacent(tree: &SampledTree, a: usize, b: usize) -> bool {
    tree.parent_of(a) == Some(b) || tree.parent_of(b) == Some(a)
}

fn tree_distance(tree: &SampledTree, a: usize, b: usize) -> usize {
    // distance via the lowest common ancestor of the labels
    let la = tree.label(a);
    let lb = tree.label(b);
    let common = la
        .digits()
        .iter()
        .zip(lb.digits())
        .take_while(|(x, y)| x == y)
        .count();
    la.depth() + lb.depth() - 2 * common
}

/// Per test function: samples `reps` marked UGW trees (dynamics simulated
/// with the given coefficients), computes the outgoing and incoming
/// transported-mass sums restricted to the support radius, and passes when
/// the paired mean difference sits within 3 pooled MC sigma.
#[allow(clippy::too_many_arguments)]
pub fn mass_transport_check<S: Scalar>(
    rho: &OffspringLaw,
    test_fns: &[Box<dyn TransportFn<S>>],
    reps: usize,
    drift: &DriftSpec<S>,
    diffusion: &DiffusionSpec<S>,
    init: &InitialLaw<S>,
    grid: &TimeGrid,
    width_cap: usize,
    seed: u64,
) -> Result<Vec<TestReport>> {
    if test_fns.is_empty() || reps < 100 {
        return Err(CoreError::InvalidArgument(
            "need at least one test function and 100 reps".into(),
        ));
    }
    let max_radius = test_fns.iter().map(|f| f.radius()).max().unwrap_or(0);
    // keep every evaluation window far from the truncation boundary
    let depth_cap = 2 * max_radius + 4;

    // paired sums per replication, per test function
    let per_rep: Vec<Result<Vec<(f64, f64)>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let tree = sample_ugw(rho, depth_cap, width_cap, seed.wrapping_add(rep as u64))?;
            let topo = SimTopology::from_tree(&tree);
            let marks = simulate_system(
                &topo,
                drift.as_ref(),
                diffusion.as_ref(),
                init,
                grid,
                seed ^ 0x6d61_726b_0000_0000 ^ rep as u64,
            )?;
            let dist = tree.distances_from(0);
            let mut sums = vec![(0.0, 0.0); test_fns.len()];
            for (fi, f) in test_fns.iter().enumerate() {
                let r = f.radius();
                let bound = f.bound();
                for o2 in 0..tree.len() {
                    if dist[o2] > r {
                        continue;
                    }
                    let out = f.eval(&tree, &marks, 0, o2);
                    let inc = f.eval(&tree, &marks, o2, 0);
                    if out.abs() > bound + 1e-12 || inc.abs() > bound + 1e-12 {
                        return Err(CoreError::InvalidTestFunction(format!(
                            "{} exceeded bound {bound} on a sample",
                            f.name()
                        )));
                    }
                    sums[fi].0 += out;
                    sums[fi].1 += inc;
                }
            }
            Ok(sums)
        })
        .collect();
    let per_rep: Vec<Vec<(f64, f64)>> = per_rep.into_iter().collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(test_fns.len());
    for (fi, f) in test_fns.iter().enumerate() {
        let diffs: Vec<f64> = per_rep.iter().map(|r| r[fi].0 - r[fi].1).collect();
        let outs: Vec<f64> = per_rep.iter().map(|r| r[fi].0).collect();
        let incs: Vec<f64> = per_rep.iter().map(|r| r[fi].1).collect();
        let (mean_diff, se) = mean_and_se(&diffs);
        let (mean_out, _) = mean_and_se(&outs);
        let (mean_in, _) = mean_and_se(&incs);
        let (stat, verdict) = if se < 1e-15 {
            (mean_diff.abs(), Verdict::from_bool(mean_diff.abs() <= 1e-12))
        } else {
            let z = mean_diff.abs() / se;
            (z, Verdict::from_bool(z <= DEFAULT_SIGMA_MULTIPLE))
        };
        reports.push(
            TestReport::new(format!("mass-transport/{}", f.name()), stat, verdict)
                .with_threshold(DEFAULT_SIGMA_MULTIPLE)
                .with_se(se)
                .with_seed(seed)
                .with_size("trees", reps as u64)
                .with_detail("outgoing_mean", mean_out)
                .with_detail("incoming_mean", mean_in)
                .with_detail("mean_difference", mean_diff),
        );
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::dynamics::{IdentityDiffusion, OuPairwiseDrift};

    fn setup() -> (OffspringLaw, DriftSpec<f64>, DiffusionSpec<f64>, InitialLaw<f64>, TimeGrid) {
        let rho = OffspringLaw::poisson(2.0, 20).unwrap();
        let drift: DriftSpec<f64> = Arc::new(OuPairwiseDrift { rate: 0.5, coupling: 0.8 });
        let diffusion: DiffusionSpec<f64> = Arc::new(IdentityDiffusion);
        let init = InitialLaw::uniform(1, -1.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.5, 20).unwrap();
        (rho, drift, diffusion, init, grid)
    }

    #[test]
    fn equality_indicator_is_exact_one() {
        let (rho, drift, diffusion, init, grid) = setup();
        let fns = vec![equality_indicator::<f64>()];
        let r =
            mass_transport_check(&rho, &fns, 150, &drift, &diffusion, &init, &grid, 12, 3)
                .unwrap();
        assert!(r[0].passed());
        assert_eq!(r[0].details["outgoing_mean"], 1.0);
        assert_eq!(r[0].details["incoming_mean"], 1.0);
    }

    #[test]
    fn edge_indicator_estimates_mean_degree() {
        let (rho, drift, diffusion, init, grid) = setup();
        let fns = vec![edge_indicator::<f64>()];
        let r =
            mass_transport_check(&rho, &fns, 400, &drift, &diffusion, &init, &grid, 12, 5)
                .unwrap();
        assert!(r[0].passed());
        // both sides are the same per-tree sum here, and estimate E deg(root)
        assert_eq!(r[0].details["mean_difference"], 0.0);
        let mean_deg = r[0].details["outgoing_mean"];
        assert!(
            (mean_deg - rho.mean()).abs() < 0.25,
            "mean degree {mean_deg} vs {}",
            rho.mean()
        );
    }

    #[test]
    fn marked_transport_balances_within_band() {
        let (rho, drift, diffusion, init, grid) = setup();
        let fns = vec![edge_mark_pair::<f64>(), inverse_degree_edge::<f64>()];
        let r =
            mass_transport_check(&rho, &fns, 600, &drift, &diffusion, &init, &grid, 12, 7)
                .unwrap();
        for rep in &r {
            assert!(rep.passed(), "{}: z = {}", rep.name, rep.statistic);
        }
    }

    #[test]
    fn unbounded_function_is_rejected() {
        struct Bad;
        impl TransportFn<f64> for Bad {
            fn name(&self) -> String {
                "bad".into()
            }
            fn radius(&self) -> usize {
                1
            }
            fn bound(&self) -> f64 {
                0.1
            }
            fn eval(&self, t: &SampledTree, _: &PathBundle<f64>, o: usize, o2: usize) -> f64 {
                f64::from(is_adjacent(t, o, o2))
            }
        }
        let (rho, drift, diffusion, init, grid) = setup();
        let fns: Vec<Box<dyn TransportFn<f64>>> = vec![Box::new(Bad)];
        let err = mass_transport_check(&rho, &fns, 150, &drift, &diffusion, &init, &grid, 12, 9)
            .unwrap_err();
        assert!(matches!(err, CoreError::InvalidTestFunction(_)));
    }
}
