//! The size-bias reweighting identity and the tilt normalization constant.
//!
//! For an offspring law rho with size-biased law rho_hat, both
//! `E[h(1 + C_hat) 1{root degree > 0}]` and
//! `E[(deg / (1 + C_hat)) h(deg) 1{root degree > 0}]` equal
//! `(1 - rho(0)) * sum_k h(k+1) rho_hat(k)`; the expectation of the bare
//! tilt weight is `1 - rho(0)`.

use crate::error::Result;
use crate::rng::{tag, CounterRng};
use crate::topology::{size_biased, OffspringLaw};
use crate::verify::report::{TestReport, Verdict};
use crate::verify::stats::{mean_and_se, DEFAULT_SIGMA_MULTIPLE};

/// Exact-summation values of the two expectations and the closed form,
/// in that order.
pub fn reweight_identity_values(
    rho: &OffspringLaw,
    h: &dyn Fn(usize) -> f64,
) -> Result<(f64, f64, f64)> {
    let hat = size_biased(rho)?;
    // E[h(1 + C) ; deg > 0] with C ~ rho_hat independent of the degree
    let p_nonempty: f64 = (1..=rho.truncation_cap()).map(|k| rho.pmf(k)).sum();
    let lhs = p_nonempty * hat.expect(|j| h(1 + j));
    // E[(deg / (1 + C)) h(deg) ; deg > 0], literal double sum
    let mut rhs = 0.0;
    for kappa in 1..=rho.truncation_cap() {
        for j in 0..=hat.truncation_cap() {
            rhs += rho.pmf(kappa) * hat.pmf(j) * (kappa as f64 / (1.0 + j as f64)) * h(kappa);
        }
    }
    let closed = (1.0 - rho.mass_at_zero()) * hat.expect(|k| h(k + 1));
    Ok((lhs, rhs, closed))
}

/// Exact-arithmetic check (tolerance 1e-12) that both expectations match
/// the closed form.
pub fn reweight_identity_check(rho: &OffspringLaw, h: &dyn Fn(usize) -> f64) -> Result<TestReport> {
    let (lhs, rhs, closed) = reweight_identity_values(rho, h)?;
    let err = (lhs - closed).abs().max((rhs - closed).abs());
    Ok(TestReport::new("reweight-identity", err, Verdict::from_bool(err <= 1e-12))
        .with_threshold(1e-12)
        .with_detail("lhs", lhs)
        .with_detail("rhs", rhs)
        .with_detail("closed_form", closed))
}

/// Monte Carlo check that `E[1{deg > 0} deg / (1 + C_hat)] = 1 - rho(0)`
/// within the 3-sigma band.
pub fn tilt_normalization_check(
    rho: &OffspringLaw,
    samples: usize,
    seed: u64,
) -> Result<TestReport> {
    let hat = size_biased(rho)?;
    let mut rng = CounterRng::new(seed, &[tag::CHECK, 0x7111]);
    let draws: Vec<f64> = (0..samples)
        .map(|_| {
            let kappa = rho.sample(&mut rng);
            let chat = hat.sample(&mut rng);
            if kappa > 0 {
                kappa as f64 / (1.0 + chat as f64)
            } else {
                0.0
            }
        })
        .collect();
    let (mean, se) = mean_and_se(&draws);
    let target = 1.0 - rho.mass_at_zero();
    let z = if se > 0.0 { (mean - target).abs() / se } else { 0.0 };
    Ok(
        TestReport::new("tilt-normalization", z, Verdict::from_bool(z <= DEFAULT_SIGMA_MULTIPLE))
            .with_threshold(DEFAULT_SIGMA_MULTIPLE)
            .with_se(se)
            .with_seed(seed)
            .with_size("samples", samples as u64)
            .with_detail("mean", mean)
            .with_detail("target", target),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_h_gives_one_minus_rho0() {
        let rho = OffspringLaw::poisson(2.0, 40).unwrap();
        let (lhs, rhs, closed) = reweight_identity_values(&rho, &|_| 1.0).unwrap();
        let expect = 1.0 - rho.mass_at_zero();
        for v in [lhs, rhs, closed] {
            assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        }
    }

    #[test]
    fn delta_kappa_gives_h_of_kappa() {
        for kappa in 2..=5usize {
            let rho = OffspringLaw::delta(kappa);
            let h = |k: usize| (k as f64).sqrt() + 0.25;
            let (lhs, rhs, closed) = reweight_identity_values(&rho, &h).unwrap();
            for v in [lhs, rhs, closed] {
                assert!((v - h(kappa)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_poisson_min_h_agrees() {
        let rho = OffspringLaw::poisson(2.0, 40).unwrap();
        let r = reweight_identity_check(&rho, &|k| (k.min(5)) as f64).unwrap();
        assert!(r.passed(), "error {}", r.statistic);
    }

    #[test]
    fn tilt_normalization_poisson() {
        let rho = OffspringLaw::poisson(2.0, 40).unwrap();
        let r = tilt_normalization_check(&rho, 100_000, 7).unwrap();
        assert!(r.passed(), "z = {}", r.statistic);
        assert!((r.details["target"] - (1.0 - (-2.0f64).exp())).abs() < 1e-6);
    }
}
