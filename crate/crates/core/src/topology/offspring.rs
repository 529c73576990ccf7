//! Offspring distributions on the nonnegative integers, truncated to finite
//! support, and the size-biased transform.

use crate::error::{CoreError, Result};
use crate::rng::CounterRng;

/// Default truncation cap for offspring laws.
pub const DEFAULT_TRUNCATION_CAP: usize = 64;

#[cfg(test)]
const MASS_TOL: f64 = 1e-12;

/// A probability mass function on {0, 1, ..., cap}, renormalized after
/// truncation. The first moment must be finite (automatic) and strictly
/// positive for the size-biased transform and UGW sampling beyond the root.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    truncation_cap: usize,
    /// Total mass discarded or rescaled away by truncation/renormalization.
    renormalized_by: f64,
    name: String,
}

impl OffspringLaw {
    /// Builds a law from raw masses (index k = mass at k). Masses must be
    /// nonnegative with positive sum; they are renormalized to sum to one and
    /// the deviation is recorded in [`OffspringLaw::renormalized_by`].
    pub fn from_pmf(masses: impl Into<Vec<f64>>) -> Result<Self> {
        let mut pmf = masses.into();
        if pmf.is_empty() {
            return Err(CoreError::InvalidLaw("empty pmf".into()));
        }
        if pmf.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(CoreError::InvalidLaw("masses must be finite and >= 0".into()));
        }
        let total: f64 = pmf.iter().sum();
        if total <= 0.0 {
            return Err(CoreError::InvalidLaw("total mass is zero".into()));
        }
        for p in &mut pmf {
            *p /= total;
        }
        while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
            pmf.pop();
        }
        let cap = pmf.len() - 1;
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        *cdf.last_mut().unwrap() = 1.0;
        let name = format!(
            "pmf[{}]",
            pmf.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(",")
        );
        Ok(OffspringLaw {
            pmf,
            cdf,
            truncation_cap: cap,
            renormalized_by: (total - 1.0).abs(),
            name,
        })
    }

    /// Point mass at `k`.
    pub fn delta(k: usize) -> Self {
        let mut masses = vec![0.0; k + 1];
        masses[k] = 1.0;
        let mut law = OffspringLaw::from_pmf(masses).expect("delta law is valid");
        law.name = format!("delta({k})");
        law
    }

    /// Poisson(theta) truncated at `cap` and renormalized.
    pub fn poisson(theta: f64, cap: usize) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(CoreError::InvalidLaw(format!("poisson rate {theta} must be > 0")));
        }
        let mut masses = Vec::with_capacity(cap + 1);
        let mut p = (-theta).exp();
        for k in 0..=cap {
            masses.push(p);
            p *= theta / (k as f64 + 1.0);
        }
        let mut law = OffspringLaw::from_pmf(masses)?;
        law.name = format!("poisson({theta},cap={cap})");
        Ok(law)
    }

    /// Stable description used in provenance strings.
    pub fn describe(&self) -> String {
        self.name.clone()
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.pmf
    }

    pub fn truncation_cap(&self) -> usize {
        self.truncation_cap
    }

    pub fn renormalized_by(&self) -> f64 {
        self.renormalized_by
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, &p)| k as f64 * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, &p)| (k as f64).powi(2) * p).sum()
    }

    /// Mass at zero, i.e. the probability of an empty neighborhood.
    pub fn mass_at_zero(&self) -> f64 {
        self.pmf[0]
    }

    /// Inverse-CDF sample.
    pub fn sample(&self, rng: &mut CounterRng) -> usize {
        let u = rng.uniform();
        match self.cdf.iter().position(|&c| u <= c) {
            Some(k) => k,
            None => self.cdf.len() - 1,
        }
    }

    /// Expectation of `h(K)` under the law, by exact summation.
    pub fn expect(&self, h: impl Fn(usize) -> f64) -> f64 {
        self.pmf.iter().enumerate().map(|(k, &p)| h(k) * p).sum()
    }
}

/// Size-biased transform: `rho_hat(k) = (k+1) rho(k+1) / mean(rho)`,
/// renormalized on the truncated support. Fails when the first moment is
/// zero.
pub fn size_biased(rho: &OffspringLaw) -> Result<OffspringLaw> {
    let mean = rho.mean();
    if mean <= 0.0 {
        return Err(CoreError::InvalidLaw(
            "size-biased transform needs a nonzero first moment".into(),
        ));
    }
    let masses: Vec<f64> = (0..rho.pmf.len().saturating_sub(1))
        .map(|k| ((k + 1) as f64) * rho.pmf(k + 1) / mean)
        .collect();
    OffspringLaw::from_pmf(masses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_sums_to_one_within_tolerance() {
        let law = OffspringLaw::from_pmf(vec![0.2, 0.3, 0.48]).unwrap();
        let total: f64 = law.masses().iter().sum();
        assert!((total - 1.0).abs() <= MASS_TOL);
        assert!((law.renormalized_by() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn delta_3_size_biases_to_delta_2() {
        let hat = size_biased(&OffspringLaw::delta(3)).unwrap();
        assert_eq!(hat.pmf(2), 1.0);
        assert_eq!(hat.truncation_cap(), 2);
    }

    #[test]
    fn delta_1_size_biases_to_delta_0() {
        let hat = size_biased(&OffspringLaw::delta(1)).unwrap();
        assert_eq!(hat.pmf(0), 1.0);
    }

    #[test]
    fn poisson_is_a_size_bias_fixed_point() {
        // Termwise oracle: (k+1) rho(k+1) / mean against the Poisson pmf.
        let theta = 2.0;
        let rho = OffspringLaw::poisson(theta, 40).unwrap();
        let hat = size_biased(&rho).unwrap();
        let mut p = (-theta).exp();
        for k in 0..=38 {
            assert!(
                (hat.pmf(k) - p).abs() < 1e-10,
                "k={k}: {} vs {p}",
                hat.pmf(k)
            );
            p *= theta / (k as f64 + 1.0);
        }
    }

    #[test]
    fn size_biased_mean_identity() {
        // mean(rho_hat) = (E[K^2] - E[K]) / E[K].
        for law in [
            OffspringLaw::poisson(1.7, 48).unwrap(),
            OffspringLaw::from_pmf(vec![0.1, 0.2, 0.3, 0.25, 0.15]).unwrap(),
        ] {
            let hat = size_biased(&law).unwrap();
            let expected = (law.second_moment() - law.mean()) / law.mean();
            assert!((hat.mean() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_first_moment_is_rejected() {
        assert!(matches!(
            size_biased(&OffspringLaw::delta(0)),
            Err(CoreError::InvalidLaw(_))
        ));
    }

    #[test]
    fn sampling_matches_pmf_roughly() {
        let law = OffspringLaw::from_pmf(vec![0.5, 0.25, 0.25]).unwrap();
        let mut rng = CounterRng::new(11, &[crate::rng::tag::CHECK, 7]);
        let mut counts = [0usize; 3];
        let n = 60_000;
        for _ in 0..n {
            counts[law.sample(&mut rng)] += 1;
        }
        assert!((counts[0] as f64 / n as f64 - 0.5).abs() < 0.01);
        assert!((counts[1] as f64 / n as f64 - 0.25).abs() < 0.01);
    }
}
