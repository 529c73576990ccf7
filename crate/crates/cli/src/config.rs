//! Flat key=value run configurations with dotted namespaces.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    SimulateGraph,
    SimulateTree,
    SolveLocal,
    Verify,
}

impl RunKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "simulate-graph" => Ok(RunKind::SimulateGraph),
            "simulate-tree" => Ok(RunKind::SimulateTree),
            "solve-local" => Ok(RunKind::SolveLocal),
            "verify" => Ok(RunKind::Verify),
            other => Err(ConfigError(format!("unknown kind {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RunKind::SimulateGraph => "simulate-graph",
            RunKind::SimulateTree => "simulate-tree",
            RunKind::SolveLocal => "solve-local",
            RunKind::Verify => "verify",
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "kind",
    "check",
    "seed",
    "out",
    "dim",
    "model.type",
    "model.n",
    "model.p",
    "model.kappa",
    "model.degrees",
    "model.degree_file",
    "rho",
    "rho.cap",
    "tree.depth",
    "tree.width",
    "drift",
    "drift.value",
    "drift.rate",
    "drift.coupling",
    "sigma",
    "sigma.value",
    "sigma.base",
    "sigma.amplitude",
    "init",
    "init.value",
    "init.mean",
    "init.sd",
    "init.lo",
    "init.hi",
    "grid.t",
    "grid.k",
    "solve.structure",
    "solve.kappa",
    "solve.m",
    "estimator.method",
    "estimator.k",
    "estimator.bandwidth",
    "estimator.floor",
    "estimator.stratify",
    "estimator.lags",
    "check.h",
    "check.samples",
    "check.trees",
    "check.paths",
    "check.threshold",
    "check.t",
    "check.n_small",
    "check.pair_seeds",
];

/// A validated run configuration: the experiment kind, the mandatory seed,
/// and the raw resolved key-value map.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: RunKind,
    pub seed: u64,
    values: BTreeMap<String, String>,
}

/// Parses the documented `key = value` format: one assignment per line,
/// `#` starts a comment, blank lines ignored. Every key must be known, the
/// seed is mandatory and explicit.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut values = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError(format!("line {}: expected key = value, got {raw:?}", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError(format!("line {}: unknown key {key:?}", lineno + 1)));
        }
        if values.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError(format!("line {}: duplicate key {key:?}", lineno + 1)));
        }
    }
    RunConfig::from_values(values)
}

impl RunConfig {
    pub fn from_values(values: BTreeMap<String, String>) -> Result<Self> {
        for key in values.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError(format!("unknown key {key:?}")));
            }
        }
        let kind = RunKind::parse(
            values.get("kind").ok_or_else(|| ConfigError("kind required".into()))?,
        )?;
        let seed = values
            .get("seed")
            .ok_or_else(|| ConfigError("seed required".into()))?
            .parse::<u64>()
            .map_err(|_| ConfigError("seed: expected an unsigned integer".into()))?;
        Ok(RunConfig { kind, seed, values })
    }

    /// Effective key-value view (for manifests).
    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Canonical one-line rendering used for fingerprints.
    pub fn canonical(&self) -> String {
        self.values
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| ConfigError(format!("{key} required")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| ConfigError(format!("{key}: expected a number, got {v:?}")))
            })
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?.ok_or_else(|| ConfigError(format!("{key} required")))
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| ConfigError(format!("{key}: expected an integer, got {v:?}")))
            })
            .transpose()
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.get_usize(key)?.ok_or_else(|| ConfigError(format!("{key} required")))
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                other => Err(ConfigError(format!("{key}: expected a boolean, got {other:?}"))),
            })
            .transpose()
    }

    /// Comma-separated f64 list.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim().parse::<f64>().map_err(|_| {
                            ConfigError(format!("{key}: bad list entry {s:?}"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim().parse::<usize>().map_err(|_| {
                            ConfigError(format!("{key}: bad list entry {s:?}"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.get_usize("dim")?.unwrap_or(1).max(1))
    }
}
