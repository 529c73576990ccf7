//! Experiment runner: declarative configs, managed seeds, reproducible
//! outputs.

mod config;
mod registry;
mod run;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use config::{parse_config, RunConfig};

const USAGE: &str = "\
usage: ugwsim <subcommand> [--config <file>] [--out <dir>] [--seed <u64>]

subcommands:
  simulate-graph        simulate the interacting system on a random graph
  simulate-tree         simulate on a sampled unimodular Galton-Watson tree
  solve-local           solve a local equation by ensemble time-marching
  verify <check-name>   run a statistical or exact checker
  list-builders         print the coefficient/law builder registry

flags (each overrides the config file):
  --config <file>   key = value configuration
  --out <dir>       output directory (paths.csv, marginals.csv, report.json,
                    manifest.json; one run at a time per directory)
  --seed <u64>      master seed

threads: set UGW_THREADS to bound the worker pool; outputs do not depend
on it.";

fn parse_args() -> Result<(RunConfig, PathBuf), String> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        return Err(USAGE.to_string());
    }
    let subcommand = args[0].as_str();
    if subcommand == "list-builders" {
        print!("{}", registry::list_builders());
        std::process::exit(0);
    }
    if ["-h", "--help", "help"].contains(&subcommand) {
        println!("{USAGE}");
        std::process::exit(0);
    }
    let mut check: Option<String> = None;
    let mut rest = &args[1..];
    if subcommand == "verify" {
        let name = rest
            .first()
            .filter(|a| !a.starts_with("--"))
            .ok_or_else(|| "verify requires a check name".to_string())?;
        check = Some(name.clone());
        rest = &rest[1..];
    }
    let mut config_path: Option<String> = None;
    let mut out: Option<String> = None;
    let mut seed: Option<String> = None;
    let mut it = rest.iter();
    while let Some(flag) = it.next() {
        let value = it.next().cloned();
        match flag.as_str() {
            "--config" => config_path = value,
            "--out" => out = value,
            "--seed" => seed = value,
            other => return Err(format!("unknown flag {other:?}\n\n{USAGE}")),
        }
    }

    let mut values: BTreeMap<String, String> = match &config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {path:?}: {e}"))?;
            parse_config(&text).map_err(|e| e.to_string())?.values().clone()
        }
        None => BTreeMap::new(),
    };
    if let Some(existing) = values.get("kind") {
        if existing != subcommand {
            return Err(format!(
                "config kind {existing:?} conflicts with subcommand {subcommand:?}"
            ));
        }
    }
    values.insert("kind".into(), subcommand.into());
    if let Some(check) = check {
        values.insert("check".into(), check);
    }
    if let Some(seed) = seed {
        values.insert("seed".into(), seed);
    }
    if let Some(out) = out {
        values.insert("out".into(), out);
    }
    let cfg = RunConfig::from_values(values).map_err(|e| e.to_string())?;
    let out_dir = cfg
        .get("out")
        .map(PathBuf::from)
        .ok_or_else(|| "out required (config key `out` or flag --out)".to_string())?;
    Ok((cfg, out_dir))
}

fn init_threads() {
    if let Ok(v) = std::env::var("UGW_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let (cfg, out_dir) = match parse_args() {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    match run::run(&cfg, &out_dir) {
        Ok((_, true)) => {
            println!("{}: complete, outputs in {}", cfg.kind.as_str(), out_dir.display());
            ExitCode::SUCCESS
        }
        Ok((_, false)) => {
            eprintln!("{}: verification failed (see report.json)", cfg.kind.as_str());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
