//! Conditional-independence test for the second-order Markov property of
//! trajectories: given the (binned) histories of the root and one child,
//! summaries of the child's subtree must decorrelate from summaries of the
//! rest of the first generation.
//!
//! Conditioning on exact paths is infeasible, so replicas are binned by
//! empirical quantiles of the pair's values at a few history times; the
//! within-bin correlations are aggregated into a chi-square-style statistic
//! whose null distribution is calibrated by permuting the subtree summaries
//! within bins.

use crate::dynamics::PathBundle;
use crate::error::{CoreError, Result};
use crate::rng::{tag, CounterRng};
use crate::scalar::Scalar;
use crate::topology::{SampledTree, UhnLabel};
use crate::verify::report::{TestReport, Verdict};
use crate::verify::stats::DEFAULT_ALPHA;

#[derive(Debug, Clone)]
pub struct Mrf2Config {
    /// Quantile bins per conditioning feature.
    pub bins_per_axis: usize,
    /// Bin on the child's history only (the first-order control) instead
    /// of the (root, child) pair.
    pub first_order: bool,
    /// Minimum occupancy per usable bin.
    pub min_bin: usize,
    /// Permutation resamples for the null calibration.
    pub permutations: usize,
}

impl Default for Mrf2Config {
    fn default() -> Self {
        Mrf2Config { bins_per_axis: 2, first_order: false, min_bin: 20, permutations: 200 }
    }
}

struct Extracted {
    features: Vec<f64>,
    subtree: f64,    // f: summary of the child's offspring values
    complement: f64, // g: summary of the other first-generation vertices
}

fn extract<S: Scalar>(
    tree: &SampledTree,
    bundle: &PathBundle<S>,
    k: u32,
    step: usize,
    first_order: bool,
) -> Option<Extracted> {
    let child_label = UhnLabel::new(vec![k]).ok()?;
    let child = tree.index_of(&child_label)?;
    // subtree summary needs at least one offspring of k
    let offspring = tree.children_of(child);
    if offspring.is_empty() {
        return None;
    }
    // complement summary needs at least one other first-generation vertex
    let others: Vec<usize> = tree
        .children_of(0)
        .iter()
        .copied()
        .filter(|&v| v != child)
        .collect();
    if others.is_empty() {
        return None;
    }
    let history = [0, step / 2, step];
    let mut features = Vec::with_capacity(6);
    if !first_order {
        for &j in &history {
            features.push(bundle.state(0, j)[0].as_f64());
        }
    }
    for &j in &history {
        features.push(bundle.state(child, j)[0].as_f64());
    }
    let mean_tanh = |vs: &[usize]| -> f64 {
        vs.iter().map(|&v| bundle.state(v, step)[0].as_f64().tanh()).sum::<f64>()
            / vs.len() as f64
    };
    Some(Extracted {
        features,
        subtree: mean_tanh(offspring),
        complement: mean_tanh(&others),
    })
}

fn quantile_bin(values: &[f64], thresholds: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|&v| thresholds.iter().take_while(|&&t| v > t).count())
        .collect()
}

fn correlation_chi2(bins: &[usize], f: &[f64], g: &[f64], min_bin: usize) -> (f64, usize) {
    let n_bins = bins.iter().max().map_or(0, |&b| b + 1);
    let mut stat = 0.0;
    let mut used = 0;
    for b in 0..n_bins {
        let idx: Vec<usize> = (0..f.len()).filter(|&i| bins[i] == b).collect();
        if idx.len() < min_bin {
            continue;
        }
        let n = idx.len() as f64;
        let mf = idx.iter().map(|&i| f[i]).sum::<f64>() / n;
        let mg = idx.iter().map(|&i| g[i]).sum::<f64>() / n;
        let mut sfg = 0.0;
        let mut sff = 0.0;
        let mut sgg = 0.0;
        for &i in &idx {
            let df = f[i] - mf;
            let dg = g[i] - mg;
            sfg += df * dg;
            sff += df * df;
            sgg += dg * dg;
        }
        if sff <= 0.0 || sgg <= 0.0 {
            continue;
        }
        let r = (sfg / (sff * sgg).sqrt()).clamp(-0.999_999, 0.999_999);
        let z = r.atanh() * (n - 3.0).max(1.0).sqrt();
        stat += z * z;
        used += 1;
    }
    (stat, used)
}

/// Tests conditional independence of the child-`k` subtree from the rest of
/// the first generation given the binned (root, child) histories at grid
/// time `t`. The verdict is inconclusive when bin occupancy is too thin.
pub fn mrf2_test<S: Scalar>(
    replicas: &[(SampledTree, PathBundle<S>)],
    k: u32,
    t: f64,
    cfg: &Mrf2Config,
    seed: u64,
) -> Result<TestReport> {
    if replicas.is_empty() {
        return Err(CoreError::InsufficientData("no replicas".into()));
    }
    let step = replicas[0].1.grid().index_of(t)?;
    let rows: Vec<Extracted> = replicas
        .iter()
        .filter_map(|(tree, bundle)| extract(tree, bundle, k, step, cfg.first_order))
        .collect();
    let mut report = TestReport::new(
        if cfg.first_order { "mrf2-first-order-control" } else { "mrf2" },
        0.0,
        Verdict::Inconclusive,
    )
    .with_seed(seed)
    .with_size("replicas", replicas.len() as u64)
    .with_size("usable_replicas", rows.len() as u64)
    .with_threshold(DEFAULT_ALPHA);
    if rows.len() < cfg.min_bin * 4 {
        return Ok(report);
    }

    // quantile thresholds per feature
    let n_features = rows[0].features.len();
    let mut bins = vec![0usize; rows.len()];
    for fi in 0..n_features {
        let mut vals: Vec<f64> = rows.iter().map(|r| r.features[fi]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
        let thresholds: Vec<f64> = (1..cfg.bins_per_axis)
            .map(|q| vals[q * vals.len() / cfg.bins_per_axis])
            .collect();
        let feature: Vec<f64> = rows.iter().map(|r| r.features[fi]).collect();
        for (b, fb) in bins.iter_mut().zip(quantile_bin(&feature, &thresholds)) {
            *b = *b * cfg.bins_per_axis + fb;
        }
    }

    let f: Vec<f64> = rows.iter().map(|r| r.subtree).collect();
    let g: Vec<f64> = rows.iter().map(|r| r.complement).collect();
    let (observed, used_bins) = correlation_chi2(&bins, &f, &g, cfg.min_bin);
    report.sizes.insert("used_bins".into(), used_bins as u64);
    if used_bins < 2 {
        return Ok(report);
    }

    // permutation null: shuffle the subtree summaries within each bin
    let mut rng = CounterRng::new(seed, &[tag::CHECK, 0x6d72_6632]);
    let max_bin = bins.iter().max().copied().unwrap_or(0);
    let mut by_bin: Vec<Vec<usize>> = vec![Vec::new(); max_bin + 1];
    for (i, &b) in bins.iter().enumerate() {
        by_bin[b].push(i);
    }
    let mut null_stats = Vec::with_capacity(cfg.permutations);
    let mut f_perm = f.clone();
    for _ in 0..cfg.permutations {
        for members in &by_bin {
            let mut order: Vec<usize> = members.clone();
            rng.shuffle(&mut order);
            for (&dst, &src) in members.iter().zip(&order) {
                f_perm[dst] = f[src];
            }
        }
        let (s, _) = correlation_chi2(&bins, &f_perm, &g, cfg.min_bin);
        null_stats.push(s);
    }
    let exceed = null_stats.iter().filter(|&&s| s >= observed).count();
    let p = (1 + exceed) as f64 / (1 + cfg.permutations) as f64;
    let null_mean = null_stats.iter().sum::<f64>() / null_stats.len() as f64;
    let null_sd = (null_stats.iter().map(|s| (s - null_mean).powi(2)).sum::<f64>()
        / (null_stats.len() as f64 - 1.0))
        .sqrt();

    report.statistic = observed;
    report.p_value = Some(p);
    report.verdict = Verdict::from_bool(p > DEFAULT_ALPHA);
    report.details.insert("null_mean".into(), null_mean);
    report.details.insert("null_sd".into(), null_sd);
    report.details.insert(
        "permutation_z".into(),
        if null_sd > 0.0 { (observed - null_mean) / null_sd } else { 0.0 },
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        simulate_system, IdentityDiffusion, InitialLaw, OuPairwiseDrift, SimTopology, TimeGrid,
        ZeroDrift,
    };
    use crate::topology::{sample_ugw, OffspringLaw};

    fn replicas(
        n: usize,
        coupling: f64,
        seed: u64,
    ) -> Vec<(SampledTree, PathBundle<f64>)> {
        let rho = OffspringLaw::poisson(2.0, 8).unwrap();
        let grid = TimeGrid::new(0.5, 16).unwrap();
        let init = InitialLaw::uniform(1, -1.0, 1.0).unwrap();
        (0..n)
            .map(|r| {
                let tree = sample_ugw(&rho, 4, 4, seed * 100_000 + r as u64).unwrap();
                let topo = SimTopology::from_tree(&tree);
                let bundle = if coupling == 0.0 {
                    simulate_system(
                        &topo,
                        &ZeroDrift,
                        &IdentityDiffusion,
                        &init,
                        &grid,
                        seed ^ ((r as u64) << 18),
                    )
                } else {
                    simulate_system(
                        &topo,
                        &OuPairwiseDrift { rate: 0.4, coupling },
                        &IdentityDiffusion,
                        &init,
                        &grid,
                        seed ^ ((r as u64) << 18),
                    )
                }
                .unwrap();
                (tree, bundle)
            })
            .collect()
    }

    #[test]
    fn independent_drift_passes() {
        // no neighbor dependence: everything is independent, any binning
        // passes the null calibration
        let reps = replicas(2500, 0.0, 3);
        let cfg = Mrf2Config::default();
        let r = mrf2_test(&reps, 1, 0.5, &cfg, 7).unwrap();
        assert!(r.passed(), "p = {:?}", r.p_value);
    }

    #[test]
    fn interacting_drift_passes_second_order_binning() {
        let reps = replicas(4000, 0.8, 5);
        let cfg = Mrf2Config::default();
        let r = mrf2_test(&reps, 1, 0.5, &cfg, 9).unwrap();
        assert!(
            r.verdict != Verdict::Inconclusive,
            "inconclusive: {:?}",
            r.sizes
        );
        assert!(r.passed(), "p = {:?}, z = {:?}", r.p_value, r.details.get("permutation_z"));
    }

    #[test]
    fn first_order_binning_shows_more_dependence() {
        // paired-trial comparison: the first-order control statistic should
        // exceed the second-order one in most trials
        let mut wins = 0;
        let trials = 10;
        for trial in 0..trials {
            let reps = replicas(1500, 0.9, 100 + trial);
            let second = mrf2_test(&reps, 1, 0.5, &Mrf2Config::default(), trial).unwrap();
            let first = mrf2_test(
                &reps,
                1,
                0.5,
                &Mrf2Config { first_order: true, ..Default::default() },
                trial,
            )
            .unwrap();
            let z2 = second.details["permutation_z"];
            let z1 = first.details["permutation_z"];
            if z1 > z2 {
                wins += 1;
            }
        }
        assert!(wins * 2 > trials, "first-order exceeded in only {wins}/{trials}");
    }

    #[test]
    fn thin_ensembles_are_inconclusive() {
        let reps = replicas(30, 0.5, 11);
        let r = mrf2_test(&reps, 1, 0.5, &Mrf2Config::default(), 13).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }
}
