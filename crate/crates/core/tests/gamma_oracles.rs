//! Oracles for the conditional-drift regression: synthetic Gaussian tasks
//! with closed-form conditional means, the consistency-rate two-point
//! check, the tilted weighted task, and exact invariants (constant fixed
//! point, progressive measurability).

use ugwsim_core::dynamics::{Drift, InitialLaw, PathView, TimeGrid};
use ugwsim_core::localeq::{
    estimate_gamma_regular, estimate_gamma_ugw, GammaEstimatorConfig, GammaQuery, LocalEnsemble,
};
use ugwsim_core::rng::{tag, CounterRng};
use ugwsim_core::topology::{size_biased, OffspringLaw};

/// Constant-in-time ensemble over (root, child1, child2) triples with a
/// prescribed joint Gaussian law: Z2 = a*Z0 + b*Z1 + resid * xi.
fn gaussian_ensemble(
    m: usize,
    steps: usize,
    coeff: (f64, f64, f64),
    seed: u64,
) -> LocalEnsemble<f64> {
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let points = grid.points();
    let (a, b, resid) = coeff;
    let mut rng = CounterRng::new(seed, &[tag::CHECK, 0x9a55]);
    let paths: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let z0 = rng.standard_normal();
            let z1 = rng.standard_normal();
            let z2 = a * z0 + b * z1 + resid * rng.standard_normal();
            let mut path = Vec::with_capacity(3 * points);
            for z in [z0, z1, z2] {
                path.extend(std::iter::repeat(z).take(points));
            }
            path
        })
        .collect();
    LocalEnsemble::from_parts(
        grid,
        1,
        vec![2; m],
        vec![1; m],
        paths,
        "synthetic-gaussian".into(),
    )
    .unwrap()
}

/// Symmetric drift b = sum(neighbors at t) - own(t): on the synthetic
/// triples its conditional mean given (Z0, Z1) is
/// (a - 1) Z0 + (b + 1) Z1 with the oracle coefficients.
struct SumMinusOwn;
impl Drift<f64> for SumMinusOwn {
    fn eval(
        &self,
        step: usize,
        _: &TimeGrid,
        own: PathView<'_, f64>,
        neighbors: &[PathView<'_, f64>],
        out: &mut [f64],
    ) {
        let mut acc = -own.value(step)[0];
        for nb in neighbors {
            acc += nb.value(step)[0];
        }
        out[0] = acc;
    }
    fn growth_const(&self) -> f64 {
        3.0
    }
    fn describe(&self) -> String {
        "sum-minus-own".into()
    }
}

fn query_panel(limit: f64, side: usize) -> Vec<(f64, f64)> {
    let mut panel = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let x = -limit + 2.0 * limit * i as f64 / (side - 1) as f64;
            let y = -limit + 2.0 * limit * j as f64 / (side - 1) as f64;
            panel.push((x, y));
        }
    }
    panel
}

fn rmse_on_panel(
    ens: &LocalEnsemble<f64>,
    cfg: &GammaEstimatorConfig,
    panel: &[(f64, f64)],
    truth: impl Fn(f64, f64) -> f64,
) -> f64 {
    let step = ens.grid().steps();
    let points = ens.grid().points();
    let mut sq = 0.0;
    for &(x, y) in panel {
        let own: Vec<f64> = std::iter::repeat(x).take(points).collect();
        let other: Vec<f64> = std::iter::repeat(y).take(points).collect();
        let q = GammaQuery {
            own: PathView::contiguous(&own, 1),
            other: PathView::contiguous(&other, 1),
            other_frozen: false,
        };
        let est = estimate_gamma_regular(ens, &SumMinusOwn, step, cfg, &q).unwrap();
        sq += (est[0] - truth(x, y)).powi(2);
    }
    (sq / panel.len() as f64).sqrt()
}

#[test]
fn gaussian_conditional_mean_is_recovered() {
    // E[b | Z0 = x, Z1 = y] = (a - 1) x + (b + 1) y with b = Z1 + Z2 - Z0
    let (a, b, resid) = (0.6, 0.3, 0.3);
    let ens = gaussian_ensemble(10_000, 4, (a, b, resid), 2024);
    let cfg = GammaEstimatorConfig::default();
    let panel = query_panel(1.0, 5);
    let rmse = rmse_on_panel(&ens, &cfg, &panel, |x, y| (a - 1.0) * x + (b + 1.0) * y);
    assert!(rmse < 0.05, "RMSE {rmse}");
}

#[test]
fn consistency_rate_improves_with_ensemble_size() {
    // two-point consistency check: quadrupling M must cut the panel RMSE
    // to at most 0.7 of its value
    let (a, b, resid) = (0.6, 0.3, 0.3);
    let cfg = GammaEstimatorConfig::default();
    let panel = query_panel(2.0, 5);
    let truth = |x: f64, y: f64| (a - 1.0) * x + (b + 1.0) * y;
    let small = gaussian_ensemble(10_000, 4, (a, b, resid), 77);
    let large = gaussian_ensemble(40_000, 4, (a, b, resid), 78);
    let rmse_small = rmse_on_panel(&small, &cfg, &panel, truth);
    let rmse_large = rmse_on_panel(&large, &cfg, &panel, truth);
    assert!(
        rmse_large <= 0.7 * rmse_small,
        "RMSE {rmse_small} -> {rmse_large} (ratio {})",
        rmse_large / rmse_small
    );
}

#[test]
fn constant_drift_is_a_fixed_point() {
    struct ConstDrift;
    impl Drift<f64> for ConstDrift {
        fn eval(
            &self,
            _: usize,
            _: &TimeGrid,
            _: PathView<'_, f64>,
            _: &[PathView<'_, f64>],
            out: &mut [f64],
        ) {
            out[0] = 1.75;
        }
        fn growth_const(&self) -> f64 {
            1.75
        }
        fn describe(&self) -> String {
            "const".into()
        }
    }
    let ens = gaussian_ensemble(500, 4, (0.5, 0.2, 0.4), 5);
    let cfg = GammaEstimatorConfig::default();
    let points = ens.grid().points();
    for &(x, y) in &query_panel(2.0, 3) {
        let own: Vec<f64> = std::iter::repeat(x).take(points).collect();
        let other: Vec<f64> = std::iter::repeat(y).take(points).collect();
        let q = GammaQuery {
            own: PathView::contiguous(&own, 1),
            other: PathView::contiguous(&other, 1),
            other_frozen: false,
        };
        // regular estimate: exact recovery of the constant
        let est = estimate_gamma_regular(&ens, &ConstDrift, 2, &cfg, &q).unwrap();
        assert_eq!(est[0], 1.75);
        // tilted estimate: ratio of c E[w] to E[w], within rounding
        let est = estimate_gamma_ugw(&ens, &ConstDrift, 2, &cfg, &q).unwrap();
        assert!((est[0] - 1.75).abs() < 1e-12);
    }
}

#[test]
fn estimates_ignore_future_path_values() {
    // progressive measurability: perturbing ensemble paths strictly after
    // the queried step leaves the estimate unchanged, exactly
    let steps = 8;
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let points = grid.points();
    let m = 600;
    let mut rng = CounterRng::new(9, &[tag::CHECK, 0x70726f67]);
    let build = |perturb: bool, rng: &mut CounterRng| -> LocalEnsemble<f64> {
        let paths: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let mut path = Vec::with_capacity(3 * points);
                for _ in 0..3 {
                    let mut x = rng.standard_normal();
                    for j in 0..points {
                        x += 0.2 * rng.standard_normal();
                        // values strictly after step 4 differ between builds
                        path.push(if perturb && j > 4 { x + 100.0 } else { x });
                    }
                }
                path
            })
            .collect();
        LocalEnsemble::from_parts(grid, 1, vec![2; m], vec![1; m], paths, "prog".into())
            .unwrap()
    };
    let base = build(false, &mut rng.clone());
    let perturbed = build(true, &mut rng);
    let cfg = GammaEstimatorConfig::default();
    let own: Vec<f64> = (0..points).map(|j| 0.1 * j as f64).collect();
    let other: Vec<f64> = (0..points).map(|j| -0.05 * j as f64).collect();
    let q = GammaQuery {
        own: PathView::contiguous(&own, 1),
        other: PathView::contiguous(&other, 1),
        other_frozen: false,
    };
    let a = estimate_gamma_regular(&base, &SumMinusOwn, 4, &cfg, &q).unwrap();
    let b = estimate_gamma_regular(&perturbed, &SumMinusOwn, 4, &cfg, &q).unwrap();
    assert_eq!(a, b);
    let a = estimate_gamma_ugw(&base, &SumMinusOwn, 4, &cfg, &q).unwrap();
    let b = estimate_gamma_ugw(&perturbed, &SumMinusOwn, 4, &cfg, &q).unwrap();
    assert_eq!(a, b);
}

/// Weighted synthetic task: responses carry a degree-dependent shift, so
/// the tilted conditional mean differs from the plain one by a closed-form
/// constant computed by exact summation over the truncated laws.
#[test]
fn tilted_conditional_mean_matches_weighted_oracle() {
    let rho = OffspringLaw::poisson(2.0, 16).unwrap();
    let hat = size_biased(&rho).unwrap();
    let delta = 0.3;
    let (a, b, resid) = (0.6, 0.3, 0.3);

    // drift adds delta * (live-neighbor count): symmetric, and its tilted
    // conditional mean gets the weighted mean of kappa instead of the
    // plain one
    struct ShiftedDrift {
        delta: f64,
    }
    impl Drift<f64> for ShiftedDrift {
        fn eval(
            &self,
            step: usize,
            _: &TimeGrid,
            own: PathView<'_, f64>,
            neighbors: &[PathView<'_, f64>],
            out: &mut [f64],
        ) {
            let mut acc = -own.value(step)[0] + self.delta * neighbors.len() as f64;
            for nb in neighbors {
                acc += nb.value(step)[0];
            }
            out[0] = acc;
        }
        fn growth_const(&self) -> f64 {
            64.0
        }
        fn describe(&self) -> String {
            "shifted".into()
        }
    }

    // replicas with random degree >= 1 (degree-0 replicas never join the
    // design); children beyond the second are frozen at 0 so the response
    // stays (Z1 + Z2 + 0 + ... - Z0) + delta * kappa
    let m = 20_000;
    let steps = 4;
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let points = grid.points();
    let mut rng = CounterRng::new(31, &[tag::CHECK, 0x7769]);
    let mut kappas = Vec::with_capacity(m);
    let mut chats = Vec::with_capacity(m);
    let mut paths = Vec::with_capacity(m);
    for _ in 0..m {
        let mut kappa = 0;
        while kappa == 0 {
            kappa = rho.sample(&mut rng);
        }
        let chat = hat.sample(&mut rng);
        let z0 = rng.standard_normal();
        let z1 = rng.standard_normal();
        let z2 = a * z0 + b * z1 + resid * rng.standard_normal();
        let mut path = Vec::with_capacity((kappa + 1) * points);
        path.extend(std::iter::repeat(z0).take(points));
        path.extend(std::iter::repeat(z1).take(points));
        if kappa >= 2 {
            path.extend(std::iter::repeat(z2).take(points));
        }
        for _ in 3..=kappa {
            path.extend(std::iter::repeat(0.0).take(points));
        }
        kappas.push(kappa as u32);
        chats.push(chat as u32);
        paths.push(path);
    }
    let ens =
        LocalEnsemble::from_parts(grid, 1, kappas, chats, paths, "tilted-synthetic".into())
            .unwrap();

    // exact tilted mean of kappa: E[w kappa | kappa >= 1] / E[w | kappa >= 1]
    // with w = kappa / (1 + chat), chat independent
    let mut num = 0.0;
    let mut den = 0.0;
    let p_pos: f64 = (1..=rho.truncation_cap()).map(|k| rho.pmf(k)).sum();
    for kappa in 1..=rho.truncation_cap() {
        for chat in 0..=hat.truncation_cap() {
            let p = rho.pmf(kappa) / p_pos * hat.pmf(chat);
            let w = kappa as f64 / (1.0 + chat as f64);
            num += p * w * kappa as f64;
            den += p * w;
        }
    }
    let tilted_kappa_mean = num / den;
    let plain_kappa_mean: f64 = (1..=rho.truncation_cap())
        .map(|k| rho.pmf(k) / p_pos * k as f64)
        .sum();
    assert!((tilted_kappa_mean - plain_kappa_mean).abs() > 0.2, "task not discriminative");

    // conditional mean of the path part given (x, y): the z2 term enters
    // only for kappa >= 2, frozen children contribute 0
    let mut z_num = 0.0;
    for kappa in 1..=rho.truncation_cap() {
        for chat in 0..=hat.truncation_cap() {
            let p = rho.pmf(kappa) / p_pos * hat.pmf(chat);
            let w = kappa as f64 / (1.0 + chat as f64);
            z_num += p * w * f64::from(kappa >= 2);
        }
    }
    let z2_share = z_num / den;

    let drift = ShiftedDrift { delta };
    // larger k: the degree-dependent response variance needs more averaging
    let cfg = GammaEstimatorConfig {
        method: ugwsim_core::localeq::GammaMethod::Knn { k: Some(500) },
        ..Default::default()
    };
    let truth = |x: f64, y: f64| {
        (y - x) + z2_share * (a * x + b * y) + delta * tilted_kappa_mean
    };
    let mut sq = 0.0;
    let panel = query_panel(1.0, 5);
    for &(x, y) in &panel {
        let own: Vec<f64> = std::iter::repeat(x).take(points).collect();
        let other: Vec<f64> = std::iter::repeat(y).take(points).collect();
        let q = GammaQuery {
            own: PathView::contiguous(&own, 1),
            other: PathView::contiguous(&other, 1),
            other_frozen: false,
        };
        let est = estimate_gamma_ugw(&ens, &drift, steps, &cfg, &q).unwrap();
        sq += (est[0] - truth(x, y)).powi(2);
    }
    let rmse = (sq / panel.len() as f64).sqrt();
    assert!(rmse < 0.05, "tilted RMSE {rmse}");
    // the plain (untilted) mean would sit a visible distance away
    assert!(
        delta * (tilted_kappa_mean - plain_kappa_mean).abs() > 3.0 * 0.05,
        "tilt shift too small to verify"
    );
}

#[test]
fn frozen_queries_fall_back_to_isolated_drift() {
    let ens = gaussian_ensemble(300, 4, (0.5, 0.2, 0.4), 6);
    let cfg = GammaEstimatorConfig::default();
    let points = ens.grid().points();
    let own: Vec<f64> = std::iter::repeat(0.7).take(points).collect();
    let other: Vec<f64> = std::iter::repeat(0.0).take(points).collect();
    let q = GammaQuery {
        own: PathView::contiguous(&own, 1),
        other: PathView::contiguous(&other, 1),
        other_frozen: true,
    };
    let est = estimate_gamma_ugw(&ens, &SumMinusOwn, 2, &cfg, &q).unwrap();
    // isolated branch: b(t, own, empty) = -own(t)
    assert_eq!(est[0], -0.7);
}
