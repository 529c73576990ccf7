//! Small statistical helpers shared by the checkers.

use crate::error::{CoreError, Result};
use crate::verify::report::{TestReport, Verdict};
use crate::verify::special::normal_cdf;

/// Default p-value floor.
pub const DEFAULT_ALPHA: f64 = 0.01;
/// Default pass band in Monte Carlo standard errors.
pub const DEFAULT_SIGMA_MULTIPLE: f64 = 3.0;

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Weighted mean `sum(w x)/sum(w)` and a delta-method standard error.
pub fn weighted_mean_and_se(xs: &[f64], ws: &[f64]) -> (f64, f64) {
    debug_assert_eq!(xs.len(), ws.len());
    let n = xs.len() as f64;
    let wsum: f64 = ws.iter().sum();
    let mean = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / wsum;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    // variance of the ratio estimator via the residuals w (x - mean)
    let resid_var = xs
        .iter()
        .zip(ws)
        .map(|(x, w)| (w * (x - mean)).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let se = (n * resid_var).sqrt() / wsum;
    (mean, se)
}

/// One-sided sign test: probability of at least `wins` successes in
/// `trials` fair coin flips.
pub fn sign_test(wins: usize, trials: usize) -> f64 {
    assert!(wins <= trials && trials > 0 && trials < 1024);
    // exact binomial tail at p = 1/2
    let mut coef = 1.0f64; // C(trials, 0)
    let mut tail = 0.0;
    let scale = 0.5f64.powi(trials as i32);
    for k in 0..=trials {
        if k >= wins {
            tail += coef * scale;
        }
        coef = coef * (trials - k) as f64 / (k + 1) as f64;
    }
    tail.min(1.0)
}

/// Tests the exchange symmetry `law(X, Y) = law(Y, X)` on a (possibly
/// tilted) pair sample: for a battery of odd statistics `psi`, the weighted
/// mean of `psi((x - y)/sqrt(2))` must vanish. Reports the worst |z| with a
/// Bonferroni-adjusted p-value.
pub fn swap_symmetry_test(pairs: &[(f64, f64)], weights: Option<&[f64]>) -> Result<TestReport> {
    if pairs.len() < 16 {
        return Err(CoreError::InsufficientData(format!(
            "swap symmetry test needs >= 16 pairs, got {}",
            pairs.len()
        )));
    }
    let unit = vec![1.0; pairs.len()];
    let ws = weights.unwrap_or(&unit);
    if ws.len() != pairs.len() {
        return Err(CoreError::InvalidArgument("weights/pairs length mismatch".into()));
    }
    let s: Vec<f64> = pairs
        .iter()
        .map(|&(x, y)| (x - y) * std::f64::consts::FRAC_1_SQRT_2)
        .collect();
    let battery: [(&str, fn(f64) -> f64); 4] = [
        ("identity", |v| v),
        ("cube", |v| v * v * v),
        ("tanh", f64::tanh),
        ("sign", |v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        }),
    ];
    let mut worst_z = 0.0f64;
    let mut report = TestReport::new("swap-symmetry", 0.0, Verdict::Pass)
        .with_size("pairs", pairs.len() as u64);
    for (name, psi) in battery {
        let vals: Vec<f64> = s.iter().map(|&v| psi(v)).collect();
        let (mean, se) = weighted_mean_and_se(&vals, ws);
        let z = if se > 0.0 { mean / se } else { 0.0 };
        report.details.insert(format!("z_{name}"), z);
        if z.abs() > worst_z.abs() {
            worst_z = z;
        }
    }
    let p_single = 2.0 * (1.0 - normal_cdf(worst_z.abs()));
    let p = (p_single * battery.len() as f64).min(1.0); // Bonferroni
    report.statistic = worst_z.abs();
    report.p_value = Some(p);
    report.threshold = Some(DEFAULT_ALPHA);
    report.verdict = Verdict::from_bool(p > DEFAULT_ALPHA);
    Ok(report)
}
