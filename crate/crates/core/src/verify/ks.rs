//! Kolmogorov-Smirnov two-sample test and a chi-square goodness-of-fit
//! test for finitely supported laws.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::verify::report::{TestReport, Verdict};
use crate::verify::special::{chi_square_sf, kolmogorov_sf};
use crate::verify::stats::DEFAULT_ALPHA;

/// Two-sample KS test on one-dimensional samples with the asymptotic
/// p-value; passes when p exceeds the 0.01 floor.
pub fn two_sample_ks<S: Scalar>(a: &[S], b: &[S]) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::InvalidArgument("empty sample".into()));
    }
    let mut xs: Vec<f64> = a.iter().map(|x| x.as_f64()).collect();
    let mut ys: Vec<f64> = b.iter().map(|x| x.as_f64()).collect();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite sample"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite sample"));
    let (na, nb) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = xs[i];
        let y = ys[j];
        let step = x.min(y);
        while i < na && xs[i] <= step {
            i += 1;
        }
        while j < nb && ys[j] <= step {
            j += 1;
        }
        let gap = (i as f64 / na as f64 - j as f64 / nb as f64).abs();
        d = d.max(gap);
    }
    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let p = kolmogorov_sf(lambda);
    Ok(TestReport::new("two-sample-ks", d, Verdict::from_bool(p > DEFAULT_ALPHA))
        .with_p_value(p)
        .with_threshold(DEFAULT_ALPHA)
        .with_size("sample_a", na as u64)
        .with_size("sample_b", nb as u64))
}

/// Chi-square goodness of fit of observed counts against a finitely
/// supported pmf; bins with expected count below 5 are pooled into the
/// tail.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<TestReport> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(CoreError::InvalidArgument(
            "counts and probabilities must have equal nonzero length".into(),
        ));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(CoreError::InvalidArgument("no observations".into()));
    }
    let total_p: f64 = probs.iter().sum();
    if probs.iter().any(|&p| p < 0.0) || total_p <= 0.0 {
        return Err(CoreError::InvalidArgument("bad probability vector".into()));
    }
    // pool from the right until every kept bin has expected >= 5
    let mut pooled: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut tail_obs = 0.0;
    let mut tail_exp = 0.0;
    for idx in (0..counts.len()).rev() {
        tail_obs += counts[idx] as f64;
        tail_exp += n as f64 * probs[idx] / total_p;
        if tail_exp >= 5.0 {
            pooled.push((tail_obs, tail_exp));
            tail_obs = 0.0;
            tail_exp = 0.0;
        }
    }
    if tail_exp > 0.0 || tail_obs > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += tail_obs;
            last.1 += tail_exp;
        } else {
            return Err(CoreError::InsufficientData(
                "all bins have expected count below 5".into(),
            ));
        }
    }
    if pooled.len() < 2 {
        return Err(CoreError::InsufficientData(
            "fewer than two bins after pooling".into(),
        ));
    }
    let stat: f64 = pooled.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (pooled.len() - 1) as f64;
    let p = chi_square_sf(stat, dof);
    Ok(TestReport::new("chi-square-gof", stat, Verdict::from_bool(p > DEFAULT_ALPHA))
        .with_p_value(p)
        .with_threshold(DEFAULT_ALPHA)
        .with_size("observations", n)
        .with_size("bins", pooled.len() as u64)
        .with_detail("dof", dof))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{tag, CounterRng};

    #[test]
    fn identical_samples_have_zero_statistic() {
        let a = vec![1.0f64, 2.0, 3.0, 4.0];
        let r = two_sample_ks(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn shifted_normals_are_rejected_hard() {
        // N(0,1) vs N(1,1) at n = 1e4: the population KS distance is
        // 2*Phi(1/2) - 1 ~ 0.3829, so p is far below 1e-6.
        let mut rng = CounterRng::new(5, &[tag::CHECK, 0x4b53]);
        let n = 10_000;
        let a: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let b: Vec<f64> = (0..n).map(|_| 1.0 + rng.standard_normal()).collect();
        let r = two_sample_ks(&a, &b).unwrap();
        let phi_gap = 2.0 * crate::verify::special::normal_cdf(0.5) - 1.0;
        assert!((r.statistic - phi_gap).abs() < 0.03, "D = {}", r.statistic);
        assert!(r.p_value.unwrap() < 1e-6);
        assert!(!r.passed());
    }

    #[test]
    fn null_p_values_are_roughly_uniform() {
        // Meta-test: 200 independent null trials; the p-values should look
        // uniform (checked with a KS distance against the uniform CDF).
        let mut ps = Vec::new();
        for trial in 0..200u64 {
            let mut rng = CounterRng::new(trial, &[tag::CHECK, 0x6d65]);
            let a: Vec<f64> = (0..600).map(|_| rng.standard_normal()).collect();
            let b: Vec<f64> = (0..600).map(|_| rng.standard_normal()).collect();
            ps.push(two_sample_ks(&a, &b).unwrap().p_value.unwrap());
        }
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = ps.len() as f64;
        let d = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let hi = (i as f64 + 1.0) / n;
                let lo = i as f64 / n;
                (p - lo).abs().max((hi - p).abs())
            })
            .fold(0.0, f64::max);
        // Kolmogorov one-sample: reject uniformity only below the 1% level.
        let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
        assert!(
            kolmogorov_sf(lambda) > 0.01,
            "null p-values not uniform: D = {d}, Q = {}",
            kolmogorov_sf(lambda)
        );
    }

    #[test]
    fn chi_square_accepts_true_pmf_and_rejects_wrong_one() {
        let probs = [0.5, 0.3, 0.15, 0.05];
        let mut rng = CounterRng::new(3, &[tag::CHECK, 0xc5]);
        let mut counts = [0u64; 4];
        for _ in 0..20_000 {
            let u = rng.uniform();
            let mut acc = 0.0;
            for (k, &p) in probs.iter().enumerate() {
                acc += p;
                if u <= acc {
                    counts[k] += 1;
                    break;
                }
            }
        }
        assert!(chi_square_gof(&counts, &probs).unwrap().passed());
        let wrong = [0.25, 0.25, 0.25, 0.25];
        assert!(!chi_square_gof(&counts, &wrong).unwrap().passed());
    }

    #[test]
    fn chi_square_pools_thin_tails() {
        // long tail of tiny expectations must be pooled, not rejected
        let mut probs = vec![0.9];
        probs.extend(std::iter::repeat(0.002).take(20));
        let mut counts = vec![898u64];
        counts.extend(std::iter::repeat(2u64).take(20));
        let r = chi_square_gof(&counts, &probs).unwrap();
        assert!(*r.sizes.get("bins").unwrap() < 21);
        assert!(r.passed());
    }
}
