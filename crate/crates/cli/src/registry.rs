//! Fixed registry of coefficient, law, and estimator builders.

use std::sync::Arc;

use ugwsim_core::dynamics::{
    ConstDiagDiffusion, ConstantDrift, EmpiricalMeanTanhDrift, IdentityDiffusion, InitialLaw,
    OuPairwiseDrift, TanhDiagonalDiffusion, TimeGrid, ZeroDrift,
};
use ugwsim_core::localeq::{GammaEstimatorConfig, GammaMethod, HistoryEmbedding};
use ugwsim_core::topology::{OffspringLaw, DEFAULT_TRUNCATION_CAP};
use ugwsim_core::{Real, RealDiffusionSpec, RealDriftSpec};

use crate::config::{ConfigError, Result, RunConfig};

pub fn build_drift(cfg: &RunConfig) -> Result<RealDriftSpec> {
    match cfg.require("drift")? {
        "zero" => Ok(Arc::new(ZeroDrift)),
        "constant" => {
            let value = cfg
                .get_f64_list("drift.value")?
                .ok_or_else(|| ConfigError("drift.value required for constant drift".into()))?;
            if value.len() != cfg.dim()? {
                return Err(ConfigError("drift.value: length must equal dim".into()));
            }
            Ok(Arc::new(ConstantDrift { value }))
        }
        "ou-pairwise" => Ok(Arc::new(OuPairwiseDrift {
            rate: cfg.get_f64("drift.rate")?.unwrap_or(0.5),
            coupling: cfg.get_f64("drift.coupling")?.unwrap_or(1.0),
        })),
        "mean-tanh" => Ok(Arc::new(EmpiricalMeanTanhDrift {
            rate: cfg.get_f64("drift.rate")?.unwrap_or(0.5),
            coupling: cfg.get_f64("drift.coupling")?.unwrap_or(1.0),
        })),
        other => Err(ConfigError(format!("drift: unknown builder {other:?}"))),
    }
}

pub fn build_sigma(cfg: &RunConfig) -> Result<RealDiffusionSpec> {
    match cfg.require("sigma")? {
        "identity" => Ok(Arc::new(IdentityDiffusion)),
        "const-diag" => {
            let value = cfg
                .get_f64_list("sigma.value")?
                .ok_or_else(|| ConfigError("sigma.value required for const-diag".into()))?;
            if value.len() != cfg.dim()? {
                return Err(ConfigError("sigma.value: length must equal dim".into()));
            }
            ConstDiagDiffusion::new(value)
                .map(|d| Arc::new(d) as RealDiffusionSpec)
                .map_err(|e| ConfigError(format!("sigma.value: {e}")))
        }
        "tanh-diag" => {
            let base = cfg.get_f64("sigma.base")?.unwrap_or(1.0);
            let amplitude = cfg.get_f64("sigma.amplitude")?.unwrap_or(0.1);
            TanhDiagonalDiffusion::new(base, amplitude)
                .map(|d| Arc::new(d) as RealDiffusionSpec)
                .map_err(|e| ConfigError(format!("sigma: {e}")))
        }
        other => Err(ConfigError(format!("sigma: unknown builder {other:?}"))),
    }
}

pub fn build_init(cfg: &RunConfig) -> Result<InitialLaw<Real>> {
    let dim = cfg.dim()?;
    match cfg.get("init").unwrap_or("gaussian") {
        "point" => {
            let value = cfg
                .get_f64_list("init.value")?
                .ok_or_else(|| ConfigError("init.value required for point init".into()))?;
            if value.len() != dim {
                return Err(ConfigError("init.value: length must equal dim".into()));
            }
            Ok(InitialLaw::point(value))
        }
        "gaussian" => Ok(InitialLaw::gaussian(
            dim,
            cfg.get_f64("init.mean")?.unwrap_or(0.0),
            cfg.get_f64("init.sd")?.unwrap_or(1.0),
        )),
        "uniform" => InitialLaw::uniform(
            dim,
            cfg.get_f64("init.lo")?.unwrap_or(-1.0),
            cfg.get_f64("init.hi")?.unwrap_or(1.0),
        )
        .map_err(|e| ConfigError(format!("init: {e}"))),
        other => Err(ConfigError(format!("init: unknown builder {other:?}"))),
    }
}

/// Builds the offspring law; the second element reports a renormalization
/// warning when an explicit pmf did not sum to one.
pub fn build_rho(cfg: &RunConfig) -> Result<(OffspringLaw, Option<String>)> {
    let spec = cfg.require("rho")?;
    let cap = cfg.get_usize("rho.cap")?.unwrap_or(DEFAULT_TRUNCATION_CAP);
    if let Some(k) = spec.strip_prefix("delta:") {
        let k: usize =
            k.parse().map_err(|_| ConfigError(format!("rho: bad delta parameter {k:?}")))?;
        return Ok((OffspringLaw::delta(k), None));
    }
    if let Some(theta) = spec.strip_prefix("poisson:") {
        let theta: f64 = theta
            .parse()
            .map_err(|_| ConfigError(format!("rho: bad poisson parameter {theta:?}")))?;
        let law = OffspringLaw::poisson(theta, cap)
            .map_err(|e| ConfigError(format!("rho: {e}")))?;
        return Ok((law, None));
    }
    if let Some(list) = spec.strip_prefix("pmf:") {
        let masses: Vec<f64> = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError(format!("rho: bad pmf entry {s:?}")))
            })
            .collect::<Result<_>>()?;
        let total: f64 = masses.iter().sum();
        let law =
            OffspringLaw::from_pmf(masses).map_err(|e| ConfigError(format!("rho: {e}")))?;
        let warning = (law.renormalized_by() > 1e-9).then(|| {
            format!("rho pmf summed to {total}; renormalized to total mass one")
        });
        return Ok((law, warning));
    }
    Err(ConfigError(format!(
        "rho: expected delta:<k>, poisson:<theta>, or pmf:<p0,p1,...>, got {spec:?}"
    )))
}

pub fn build_grid(cfg: &RunConfig) -> Result<TimeGrid> {
    TimeGrid::new(cfg.require_f64("grid.t")?, cfg.require_usize("grid.k")?)
        .map_err(|e| ConfigError(format!("grid: {e}")))
}

pub fn build_estimator(cfg: &RunConfig) -> Result<GammaEstimatorConfig> {
    let method = match cfg.get("estimator.method").unwrap_or("knn") {
        "knn" => GammaMethod::Knn { k: cfg.get_usize("estimator.k")? },
        "nw" => GammaMethod::NadarayaWatson {
            bandwidth: cfg
                .get_f64("estimator.bandwidth")?
                .ok_or_else(|| ConfigError("estimator.bandwidth required for nw".into()))?,
        },
        other => return Err(ConfigError(format!("estimator.method: unknown {other:?}"))),
    };
    let embedding = match cfg.get_usize_list("estimator.lags")? {
        Some(lags) => HistoryEmbedding::new(lags),
        None => HistoryEmbedding::default(),
    };
    Ok(GammaEstimatorConfig {
        method,
        denominator_floor: cfg.get_f64("estimator.floor")?.unwrap_or(1e-8),
        stratify_by_degree: cfg.get_bool("estimator.stratify")?.unwrap_or(false),
        embedding,
    })
}

pub fn list_builders() -> String {
    let mut out = String::new();
    out.push_str("drift builders:\n");
    out.push_str("  zero\n");
    out.push_str("  constant            drift.value=<v0,..,v_{dim-1}>\n");
    out.push_str("  ou-pairwise         drift.rate=<a> drift.coupling=<c>\n");
    out.push_str("  mean-tanh           drift.rate=<a> drift.coupling=<c>\n");
    out.push_str("sigma builders:\n");
    out.push_str("  identity\n");
    out.push_str("  const-diag          sigma.value=<s0,..>\n");
    out.push_str("  tanh-diag           sigma.base=<b> sigma.amplitude=<a>, band within [0.5,2]\n");
    out.push_str("init builders:\n");
    out.push_str("  point               init.value=<x0,..>\n");
    out.push_str("  gaussian            init.mean=<m> init.sd=<s>\n");
    out.push_str("  uniform             init.lo=<a> init.hi=<b>\n");
    out.push_str("offspring laws (rho=):\n");
    out.push_str("  delta:<k> | poisson:<theta> | pmf:<p0,p1,...>   (rho.cap=<n> truncates)\n");
    out.push_str("estimator methods:\n");
    out.push_str("  knn                 estimator.k=<k> (default ceil(sqrt(M)))\n");
    out.push_str("  nw                  estimator.bandwidth=<h>\n");
    out.push_str("verify checks:\n");
    out.push_str("  reweight-identity | tilt-normalization | mass-transport | girsanov-mean |\n");
    out.push_str("  relative-entropy | local-limit\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn rho_renormalization_warns() {
        let cfg = parse_config("kind = verify\nseed = 1\nrho = pmf:0.49,0.49\n").unwrap();
        let (law, warning) = build_rho(&cfg).unwrap();
        assert!((law.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(warning.unwrap().contains("renormalized"));
    }

    #[test]
    fn unknown_builder_is_reported() {
        let cfg = parse_config("kind = verify\nseed = 1\ndrift = warp\n").unwrap();
        assert!(build_drift(&cfg).is_err());
    }

    #[test]
    fn default_estimator_is_knn_sqrt() {
        let cfg = parse_config("kind = verify\nseed = 1\n").unwrap();
        let est = build_estimator(&cfg).unwrap();
        assert!(matches!(est.method, GammaMethod::Knn { k: None }));
    }
}
