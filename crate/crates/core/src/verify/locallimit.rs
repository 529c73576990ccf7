//! Local weak limit experiments: the empirical measure of a finite-graph
//! system against the root marginal of the matching local equation.

use crate::dynamics::{
    empirical_measure, simulate_system, DiffusionSpec, DriftSpec, InitialLaw, SimTopology,
    TimeGrid,
};
use crate::error::{CoreError, Result};
use crate::localeq::{coeff_fingerprint, LocalEnsemble};
use crate::scalar::Scalar;
use crate::topology::{
    sample_configuration_model, sample_erdos_renyi, sample_regular, FiniteGraph,
};
use crate::verify::report::{TestReport, Verdict};
use crate::verify::stats::sign_test;
use crate::verify::wasserstein::wasserstein1;

/// Finite random-graph models used in the limit experiments.
#[derive(Debug, Clone)]
pub enum GraphModel {
    ErdosRenyi { n: usize, p: f64 },
    Regular { n: usize, kappa: usize },
    Configuration { degrees: Vec<usize> },
}

impl GraphModel {
    pub fn sample(&self, seed: u64) -> Result<FiniteGraph> {
        match self {
            GraphModel::ErdosRenyi { n, p } => sample_erdos_renyi(*n, *p, seed),
            GraphModel::Regular { n, kappa } => sample_regular(*n, *kappa, seed),
            GraphModel::Configuration { degrees } => sample_configuration_model(degrees, seed),
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            GraphModel::ErdosRenyi { n, .. } => *n,
            GraphModel::Regular { n, .. } => *n,
            GraphModel::Configuration { degrees } => degrees.len(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GraphModel::ErdosRenyi { n, p } => format!("er(n={n},p={p})"),
            GraphModel::Regular { n, kappa } => format!("regular(n={n},kappa={kappa})"),
            GraphModel::Configuration { degrees } => {
                format!("configuration(n={})", degrees.len())
            }
        }
    }
}

/// Simulates the finite system once and returns the W1 distance between its
/// empirical measure at `t` and the local-equation root marginal. The
/// coefficients of the ensemble are fingerprint-checked against the ones
/// supplied here; a mismatch is an invalid comparison.
#[allow(clippy::too_many_arguments)]
pub fn local_limit_experiment<S: Scalar>(
    model: &GraphModel,
    drift: &DriftSpec<S>,
    diffusion: &DiffusionSpec<S>,
    init: &InitialLaw<S>,
    grid: &TimeGrid,
    local: &LocalEnsemble<S>,
    t: f64,
    threshold: f64,
    seed: u64,
) -> Result<TestReport> {
    let fp = coeff_fingerprint(&drift.describe(), &diffusion.describe(), &init.describe(), grid);
    if !local.provenance().contains(&fp) {
        return Err(CoreError::InvalidComparison(format!(
            "local ensemble was solved with different coefficients: {} vs {fp}",
            local.provenance()
        )));
    }
    let graph = model.sample(seed)?;
    let topo = SimTopology::from_graph(&graph);
    let bundle = simulate_system(&topo, drift.as_ref(), diffusion.as_ref(), init, grid, seed)?;
    let finite = empirical_measure(&bundle, t)?;
    let root = local.root_marginal(t)?;
    let w1 = wasserstein1(&finite, &root)?;
    Ok(
        TestReport::new(format!("local-limit/{}", model.describe()), w1, Verdict::from_bool(w1 < threshold))
            .with_threshold(threshold)
            .with_seed(seed)
            .with_size("graph_vertices", graph.vertex_count() as u64)
            .with_size("local_replicas", local.replica_count() as u64)
            .with_detail("w1", w1),
    )
}

/// Paired-seed decrease experiment: over `seeds`, the small-model distance
/// is compared with the large-model distance on the same seed; a one-sided
/// sign test summarizes the wins.
#[allow(clippy::too_many_arguments)]
pub fn paired_decrease<S: Scalar>(
    small: &GraphModel,
    large: &GraphModel,
    drift: &DriftSpec<S>,
    diffusion: &DiffusionSpec<S>,
    init: &InitialLaw<S>,
    grid: &TimeGrid,
    local: &LocalEnsemble<S>,
    t: f64,
    threshold: f64,
    seeds: &[u64],
) -> Result<TestReport> {
    if seeds.len() < 5 {
        return Err(CoreError::InvalidArgument("need at least 5 paired seeds".into()));
    }
    let mut wins = 0usize;
    let mut small_sum = 0.0;
    let mut large_sum = 0.0;
    for &seed in seeds {
        let rs = local_limit_experiment(
            small, drift, diffusion, init, grid, local, t, threshold, seed,
        )?;
        let rl = local_limit_experiment(
            large, drift, diffusion, init, grid, local, t, threshold, seed,
        )?;
        if rl.statistic < rs.statistic {
            wins += 1;
        }
        small_sum += rs.statistic;
        large_sum += rl.statistic;
    }
    let p = sign_test(wins, seeds.len());
    Ok(TestReport::new(
        format!("local-limit-decrease/{}->{}", small.describe(), large.describe()),
        wins as f64,
        Verdict::from_bool(p < 0.05),
    )
    .with_p_value(p)
    .with_size("paired_seeds", seeds.len() as u64)
    .with_detail("mean_w1_small", small_sum / seeds.len() as f64)
    .with_detail("mean_w1_large", large_sum / seeds.len() as f64))
}
