//! Pipeline execution: dispatch a validated config, write data files and
//! the manifest, and report the overall verdict.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use ugwsim_core::dynamics::{empirical_measure, simulate_system, SimTopology};
use ugwsim_core::localeq::{solve_local_regular, solve_local_ugw};
use ugwsim_core::topology::sample_ugw;
use ugwsim_core::verify::{
    edge_indicator, edge_mark, edge_mark_pair, equality_indicator, girsanov_weight,
    inverse_degree_edge, local_limit_experiment, mass_transport_check, mean_and_se,
    paired_decrease, relative_entropy_check, reweight_identity_check, tilt_normalization_check,
    two_step_mark, GraphModel, TestReport, TransportFn, Verdict,
};
use ugwsim_core::{Real, RealLocalEnsemble};

use crate::config::{ConfigError, Result, RunConfig, RunKind};
use crate::registry;

#[derive(Debug, Serialize)]
struct OutputRecord {
    file: String,
    sha256: String,
}

/// Execution record: resolved config, tool version, wall-clock bounds, and
/// digests of every emitted file. Timestamps live only here, so the data
/// files stay byte-reproducible.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    tool_version: String,
    kind: String,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    config: BTreeMap<String, String>,
    config_sha256: String,
    warnings: Vec<String>,
    outputs: Vec<OutputRecord>,
    verdict: String,
}

struct OutDir {
    dir: PathBuf,
    lock: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl OutDir {
    fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| ConfigError(format!("cannot create out dir {dir:?}: {e}")))?;
        let lock = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => Ok(OutDir { dir: dir.to_path_buf(), lock, outputs: Vec::new() }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(ConfigError(
                format!("output directory {dir:?} is locked by another run (.lock exists)"),
            )),
            Err(e) => Err(ConfigError(format!("cannot lock {dir:?}: {e}"))),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| ConfigError(format!("cannot write {path:?}: {e}")))?;
        let digest = Sha256::digest(bytes);
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            sha256: format!("{digest:x}"),
        });
        Ok(())
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn core_err(e: ugwsim_core::CoreError) -> ConfigError {
    ConfigError(e.to_string())
}

fn graph_model(cfg: &RunConfig) -> Result<GraphModel> {
    match cfg.require("model.type")? {
        "er" => Ok(GraphModel::ErdosRenyi {
            n: cfg.require_usize("model.n")?,
            p: cfg.require_f64("model.p")?,
        }),
        "regular" => Ok(GraphModel::Regular {
            n: cfg.require_usize("model.n")?,
            kappa: cfg.require_usize("model.kappa")?,
        }),
        "cm" => {
            let degrees = match cfg.get("model.degree_file") {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| {
                        ConfigError(format!("model.degree_file: cannot read {path:?}: {e}"))
                    })?;
                    text.split_whitespace()
                        .map(|s| {
                            s.parse::<usize>().map_err(|_| {
                                ConfigError(format!("model.degree_file: bad degree {s:?}"))
                            })
                        })
                        .collect::<Result<Vec<usize>>>()?
                }
                None => cfg
                    .get_usize_list("model.degrees")?
                    .ok_or_else(|| ConfigError("model.degrees or model.degree_file required".into()))?,
            };
            Ok(GraphModel::Configuration { degrees })
        }
        other => Err(ConfigError(format!("model.type: unknown model {other:?}"))),
    }
}

fn marginal_csv(points: &[Vec<Real>], label: &str) -> String {
    let dim = points.first().map_or(0, Vec::len);
    let mut out = String::from(label);
    for c in 0..dim {
        out.push_str(&format!(",coord_{c}"));
    }
    out.push('\n');
    for (i, p) in points.iter().enumerate() {
        out.push_str(&i.to_string());
        for x in p {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    out
}

fn summary_report(name: &str, points: &[Vec<Real>], seed: u64) -> TestReport {
    let dim = points.first().map_or(0, Vec::len);
    let mut report = TestReport::new(name, points.len() as f64, Verdict::Pass)
        .with_seed(seed)
        .with_size("sample", points.len() as u64);
    for c in 0..dim {
        let xs: Vec<f64> = points.iter().map(|p| p[c]).collect();
        let (mean, se) = mean_and_se(&xs);
        report.details.insert(format!("terminal_mean_{c}"), mean);
        report.details.insert(format!("terminal_se_{c}"), se);
    }
    report
}

fn run_simulation(cfg: &RunConfig, out: &mut OutDir, warnings: &mut Vec<String>) -> Result<Verdict> {
    let grid = registry::build_grid(cfg)?;
    let drift = registry::build_drift(cfg)?;
    let sigma = registry::build_sigma(cfg)?;
    let init = registry::build_init(cfg)?;
    let (topo, topo_text) = match cfg.kind {
        RunKind::SimulateGraph => {
            let graph = graph_model(cfg)?.sample(cfg.seed).map_err(core_err)?;
            (SimTopology::from_graph(&graph), graph.to_text())
        }
        RunKind::SimulateTree => {
            let (rho, warn) = registry::build_rho(cfg)?;
            warnings.extend(warn);
            let depth = cfg.get_usize("tree.depth")?.unwrap_or(6);
            let width = cfg.get_usize("tree.width")?.unwrap_or(16);
            let tree = sample_ugw(&rho, depth, width, cfg.seed).map_err(core_err)?;
            (SimTopology::from_tree(&tree), tree.to_text())
        }
        _ => unreachable!("run_simulation only handles simulate kinds"),
    };
    let bundle =
        simulate_system(&topo, drift.as_ref(), sigma.as_ref(), &init, &grid, cfg.seed)
            .map_err(core_err)?;
    out.write("topology.txt", topo_text.as_bytes())?;
    let mut csv = Vec::new();
    bundle.write_csv(&mut csv).map_err(core_err)?;
    out.write("paths.csv", &csv)?;
    let terminal = empirical_measure(&bundle, grid.horizon()).map_err(core_err)?;
    out.write("marginals.csv", marginal_csv(&terminal, "vertex").as_bytes())?;
    let report = summary_report(cfg.kind.as_str(), &terminal, cfg.seed);
    out.write("report.json", report.to_json().as_bytes())?;
    Ok(Verdict::Pass)
}

fn solve_ensemble(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<RealLocalEnsemble> {
    let grid = registry::build_grid(cfg)?;
    let drift = registry::build_drift(cfg)?;
    let sigma = registry::build_sigma(cfg)?;
    let init = registry::build_init(cfg)?;
    let est = registry::build_estimator(cfg)?;
    let m = cfg.require_usize("solve.m")?;
    match cfg.require("solve.structure")? {
        "regular" => {
            let kappa = cfg.require_usize("solve.kappa")?;
            solve_local_regular(
                kappa,
                drift.as_ref(),
                sigma.as_ref(),
                &init,
                m,
                &grid,
                &est,
                cfg.seed,
            )
            .map_err(core_err)
        }
        "ugw" => {
            let (rho, warn) = registry::build_rho(cfg)?;
            warnings.extend(warn);
            solve_local_ugw(
                &rho,
                drift.as_ref(),
                sigma.as_ref(),
                &init,
                m,
                &grid,
                &est,
                cfg.seed,
            )
            .map_err(core_err)
        }
        other => Err(ConfigError(format!("solve.structure: expected regular or ugw, got {other:?}"))),
    }
}

fn run_solve(cfg: &RunConfig, out: &mut OutDir, warnings: &mut Vec<String>) -> Result<Verdict> {
    let grid = registry::build_grid(cfg)?;
    let ensemble = solve_ensemble(cfg, warnings)?;
    let mut csv = Vec::new();
    ensemble.write_csv(&mut csv).map_err(core_err)?;
    out.write("paths.csv", &csv)?;
    let root = ensemble.root_marginal(grid.horizon()).map_err(core_err)?;
    out.write("marginals.csv", marginal_csv(&root, "replica").as_bytes())?;
    let mut report = summary_report("solve-local", &root, cfg.seed);
    report.details.insert(
        "mean_root_degree".into(),
        (0..ensemble.replica_count()).map(|m| ensemble.kappa(m) as f64).sum::<f64>()
            / ensemble.replica_count() as f64,
    );
    out.write("report.json", report.to_json().as_bytes())?;
    Ok(Verdict::Pass)
}

fn run_verify(cfg: &RunConfig, out: &mut OutDir, warnings: &mut Vec<String>) -> Result<Verdict> {
    let check = cfg.require("check")?;
    let reports: Vec<TestReport> = match check {
        "reweight-identity" => {
            let (rho, warn) = registry::build_rho(cfg)?;
            warnings.extend(warn);
            let battery: Vec<(&str, Box<dyn Fn(usize) -> f64>)> = vec![
                ("one", Box::new(|_| 1.0)),
                ("min5", Box::new(|k| k.min(5) as f64)),
                ("sqrt", Box::new(|k| (k as f64).sqrt())),
            ];
            battery
                .into_iter()
                .map(|(name, h)| {
                    reweight_identity_check(&rho, h.as_ref()).map(|mut r| {
                        r.name = format!("reweight-identity/{name}");
                        r.seeds.push(cfg.seed);
                        r
                    })
                })
                .collect::<std::result::Result<_, _>>()
                .map_err(core_err)?
        }
        "tilt-normalization" => {
            let (rho, warn) = registry::build_rho(cfg)?;
            warnings.extend(warn);
            let samples = cfg.get_usize("check.samples")?.unwrap_or(100_000);
            vec![tilt_normalization_check(&rho, samples, cfg.seed).map_err(core_err)?]
        }
        "mass-transport" => {
            let (rho, warn) = registry::build_rho(cfg)?;
            warnings.extend(warn);
            let grid = registry::build_grid(cfg)?;
            let drift = registry::build_drift(cfg)?;
            let sigma = registry::build_sigma(cfg)?;
            let init = registry::build_init(cfg)?;
            let trees = cfg.get_usize("check.trees")?.unwrap_or(2000);
            let width = cfg.get_usize("tree.width")?.unwrap_or(12);
            let fns: Vec<Box<dyn TransportFn<Real>>> = vec![
                equality_indicator(),
                edge_indicator(),
                edge_mark(),
                edge_mark_pair(),
                two_step_mark(),
                inverse_degree_edge(),
            ];
            mass_transport_check(
                &rho, &fns, trees, &drift, &sigma, &init, &grid, width, cfg.seed,
            )
            .map_err(core_err)?
        }
        "girsanov-mean" => {
            let grid = registry::build_grid(cfg)?;
            let drift = registry::build_drift(cfg)?;
            let sigma = registry::build_sigma(cfg)?;
            let init = registry::build_init(cfg)?;
            let paths = cfg.get_usize("check.paths")?.unwrap_or(10_000);
            let topo = SimTopology::isolated(paths);
            let bundle = ugwsim_core::dynamics::simulate_driftless(
                &topo,
                sigma.as_ref(),
                &init,
                &grid,
                cfg.seed,
            )
            .map_err(core_err)?;
            let w = girsanov_weight(&bundle, &topo, drift.as_ref(), sigma.as_ref())
                .map_err(core_err)?;
            let ew: Vec<f64> = w.iter().map(|x| x.log_weight.exp()).collect();
            let (mean, se) = mean_and_se(&ew);
            let z = if se > 0.0 { (mean - 1.0).abs() / se } else { 0.0 };
            vec![TestReport::new("girsanov-mean", z, Verdict::from_bool(z <= 3.0))
                .with_threshold(3.0)
                .with_se(se)
                .with_seed(cfg.seed)
                .with_size("paths", paths as u64)
                .with_detail("mean_exp_weight", mean)]
        }
        "relative-entropy" => {
            let grid = registry::build_grid(cfg)?;
            let drift = registry::build_drift(cfg)?;
            let sigma = registry::build_sigma(cfg)?;
            let init = registry::build_init(cfg)?;
            let paths = cfg.get_usize("check.paths")?.unwrap_or(10_000);
            vec![relative_entropy_check(
                drift.as_ref(),
                &ugwsim_core::dynamics::ZeroDrift,
                sigma.as_ref(),
                &init,
                &grid,
                paths,
                cfg.seed,
            )
            .map_err(core_err)?]
        }
        "local-limit" => {
            let grid = registry::build_grid(cfg)?;
            let drift = registry::build_drift(cfg)?;
            let sigma = registry::build_sigma(cfg)?;
            let init = registry::build_init(cfg)?;
            let ensemble = solve_ensemble(cfg, warnings)?;
            let t = cfg.get_f64("check.t")?.unwrap_or(grid.horizon());
            let threshold = cfg.get_f64("check.threshold")?.unwrap_or(0.08);
            let model = graph_model(cfg)?;
            let mut reports = vec![local_limit_experiment(
                &model, &drift, &sigma, &init, &grid, &ensemble, t, threshold, cfg.seed,
            )
            .map_err(core_err)?];
            if let Some(n_small) = cfg.get_usize("check.n_small")? {
                let small = match &model {
                    GraphModel::ErdosRenyi { n, p } => GraphModel::ErdosRenyi {
                        n: n_small,
                        p: p * *n as f64 / n_small as f64,
                    },
                    GraphModel::Regular { kappa, .. } => {
                        GraphModel::Regular { n: n_small, kappa: *kappa }
                    }
                    GraphModel::Configuration { degrees } => GraphModel::Configuration {
                        degrees: degrees.iter().copied().take(n_small).collect(),
                    },
                };
                let pairs = cfg.get_usize("check.pair_seeds")?.unwrap_or(10);
                let seeds: Vec<u64> = (0..pairs as u64).map(|i| cfg.seed + 1 + i).collect();
                reports.push(
                    paired_decrease(
                        &small, &model, &drift, &sigma, &init, &grid, &ensemble, t,
                        threshold, &seeds,
                    )
                    .map_err(core_err)?,
                );
            }
            reports
        }
        other => return Err(ConfigError(format!("unknown check {other:?}"))),
    };
    let json = serde_json::to_string_pretty(&reports)
        .map_err(|e| ConfigError(format!("report serialization: {e}")))?;
    out.write("report.json", json.as_bytes())?;
    for r in &reports {
        println!(
            "{}: {} (statistic {:.6}{})",
            r.name,
            match r.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::Inconclusive => "inconclusive",
            },
            r.statistic,
            r.p_value.map(|p| format!(", p {p:.4}")).unwrap_or_default()
        );
    }
    Ok(if reports.iter().all(|r| r.passed()) { Verdict::Pass } else { Verdict::Fail })
}

/// Executes a validated config in `out_dir`, returning the manifest and the
/// overall pass flag. The manifest itself is written as `manifest.json`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<(RunManifest, bool)> {
    let started = now_ms();
    let mut out = OutDir::acquire(out_dir)?;
    let mut warnings = Vec::new();
    let verdict = match cfg.kind {
        RunKind::SimulateGraph | RunKind::SimulateTree => {
            run_simulation(cfg, &mut out, &mut warnings)?
        }
        RunKind::SolveLocal => run_solve(cfg, &mut out, &mut warnings)?,
        RunKind::Verify => run_verify(cfg, &mut out, &mut warnings)?,
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind.as_str().to_string(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        config: cfg.values().clone(),
        config_sha256: format!("{:x}", Sha256::digest(cfg.canonical().as_bytes())),
        warnings,
        outputs: std::mem::take(&mut out.outputs),
        verdict: match verdict {
            Verdict::Pass => "pass".into(),
            Verdict::Fail => "fail".into(),
            Verdict::Inconclusive => "inconclusive".into(),
        },
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| ConfigError(format!("manifest serialization: {e}")))?;
    fs::write(out_dir.join("manifest.json"), manifest_json)
        .map_err(|e| ConfigError(format!("cannot write manifest: {e}")))?;
    Ok((manifest, verdict.passed()))
}
