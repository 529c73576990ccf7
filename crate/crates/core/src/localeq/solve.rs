//! Time-marching of the local equations over replica ensembles.
//!
//! The scheme is explicit in the conditional drift: at each step the
//! regression design is built from the whole ensemble at the current step,
//! every live child queries its estimate, and then all replicas advance
//! together by one Euler-Maruyama step.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::dynamics::{Diffusion, Drift, InitialLaw, PathView, TimeGrid};
use crate::error::{CoreError, Result};
use crate::localeq::ensemble::LocalEnsemble;
use crate::localeq::gamma::{GammaDesign, GammaEstimatorConfig};
use crate::rng::{tag, CounterRng};
use crate::scalar::Scalar;
use crate::topology::{size_biased, OffspringLaw};

enum Structure<'a> {
    Regular(usize),
    Ugw(&'a OffspringLaw),
}

impl Structure<'_> {
    fn describe(&self) -> String {
        match self {
            Structure::Regular(kappa) => format!("structure=regular(kappa={kappa})"),
            Structure::Ugw(rho) => format!("structure=ugw({})", rho.describe()),
        }
    }

    fn tilted(&self) -> bool {
        matches!(self, Structure::Ugw(_))
    }

    /// Root degree and auxiliary size-biased count per replica. Regular
    /// trees are deterministic; UGW draws come from the per-replica tree
    /// stream, so the init and noise streams are untouched by the tree law.
    fn draw(&self, replicas: usize, seed: u64) -> Result<(Vec<u32>, Vec<u32>)> {
        match self {
            Structure::Regular(kappa) => {
                Ok((vec![*kappa as u32; replicas], vec![(*kappa - 1) as u32; replicas]))
            }
            Structure::Ugw(rho) => {
                let hat = size_biased(rho).ok();
                let mut kappas = Vec::with_capacity(replicas);
                let mut chats = Vec::with_capacity(replicas);
                for m in 0..replicas {
                    let mut rng = CounterRng::new(seed, &[tag::TREE, m as u64]);
                    let kappa = rho.sample(&mut rng) as u32;
                    let chat = match &hat {
                        Some(h) => h.sample(&mut rng) as u32,
                        None if kappa == 0 => 0,
                        None => {
                            return Err(CoreError::InvalidLaw(
                                "size-biased law undefined but root has offspring".into(),
                            ))
                        }
                    };
                    kappas.push(kappa);
                    chats.push(chat);
                }
                Ok((kappas, chats))
            }
        }
    }
}

/// Canonical coefficient fingerprint used in ensemble provenance and in
/// coefficient-compatibility checks.
pub fn coeff_fingerprint(
    drift: &str,
    sigma: &str,
    init: &str,
    grid: &TimeGrid,
) -> String {
    format!(
        "drift={drift};sigma={sigma};init={init};grid=T={},K={}",
        grid.horizon(),
        grid.steps()
    )
}

fn blank_ensemble<S: Scalar>(
    structure: &Structure<'_>,
    init: &InitialLaw<S>,
    grid: &TimeGrid,
    replicas: usize,
    seed: u64,
    coeffs: String,
) -> Result<LocalEnsemble<S>> {
    if replicas < 2 {
        return Err(CoreError::InvalidArgument("need at least two replicas".into()));
    }
    let (kappas, chats) = structure.draw(replicas, seed)?;
    let d = init.dim();
    let points = grid.points();
    let mut paths: Vec<Vec<S>> =
        kappas.iter().map(|&k| vec![S::zero(); (k as usize + 1) * points * d]).collect();
    paths.par_iter_mut().enumerate().for_each(|(m, path)| {
        let coords = path.len() / (points * d);
        for c in 0..coords {
            let mut rng = CounterRng::new(seed, &[tag::INIT, m as u64, c as u64]);
            init.draw(&mut rng, &mut path[c * points * d..c * points * d + d]);
        }
    });
    let provenance =
        format!("local({};{coeffs};M={replicas};seed={seed})", structure.describe());
    Ok(LocalEnsemble::new(*grid, d, kappas, chats, paths, provenance))
}

/// Advances one replica by one step: coordinate drifts are supplied per
/// coordinate; noise comes from the per-(replica, coordinate, step) stream.
#[allow(clippy::too_many_arguments)]
fn advance_replica<S: Scalar>(
    path: &mut [S],
    kappa: usize,
    drifts: &[S],
    diffusion: &dyn Diffusion<S>,
    grid: &TimeGrid,
    step: usize,
    d: usize,
    m: usize,
    seed: u64,
    diverged: &AtomicU64,
) {
    let points = grid.points();
    let h = S::from_f64(grid.h());
    let sqrt_h = S::from_f64(grid.h().sqrt());
    let mut sig = vec![S::zero(); d];
    let mut noise = vec![0.0f64; d];
    for c in 0..=kappa {
        let base = c * points * d;
        let own = PathView::new(&path[base..base + points * d], 0, d, d, step + 1);
        diffusion.diag(step, grid, own, &mut sig);
        let mut rng = CounterRng::new(seed, &[tag::NOISE, m as u64, c as u64, step as u64]);
        rng.fill_standard_normal(&mut noise);
        let prev_start = base + step * d;
        let (prev_block, next_block) = path[prev_start..prev_start + 2 * d].split_at_mut(d);
        crate::dynamics::em_step_raw(
            prev_block,
            &drifts[c * d..(c + 1) * d],
            &sig,
            &noise,
            h,
            sqrt_h,
            next_block,
        );
        if !crate::dynamics::all_finite(next_block) {
            diverged.fetch_min(((step as u64 + 1) << 32) | m as u64, Ordering::Relaxed);
        }
    }
}

fn check_divergence(diverged: &AtomicU64) -> Result<()> {
    let flag = diverged.load(Ordering::Relaxed);
    if flag != u64::MAX {
        return Err(CoreError::Diverged {
            step: (flag >> 32) as usize,
            vertex: (flag & 0xffff_ffff) as usize,
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_solver<S: Scalar>(
    structure: Structure<'_>,
    drift: &dyn Drift<S>,
    diffusion: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    replicas: usize,
    grid: &TimeGrid,
    cfg: &GammaEstimatorConfig,
    seed: u64,
) -> Result<LocalEnsemble<S>> {
    let coeffs =
        coeff_fingerprint(&drift.describe(), &diffusion.describe(), &init.describe(), grid);
    let mut ensemble = blank_ensemble(&structure, init, grid, replicas, seed, coeffs)?;
    let d = init.dim();
    let tilted = structure.tilted();

    // flattened (replica, child) query list, grouped by replica
    let query_pairs: Vec<(u32, u32)> = (0..replicas)
        .flat_map(|m| (1..=ensemble.kappa(m) as u32).map(move |c| (m as u32, c)))
        .collect();
    let mut query_offset = vec![0usize; replicas + 1];
    for m in 0..replicas {
        query_offset[m + 1] = query_offset[m] + ensemble.kappa(m);
    }

    let emb_width = cfg.embedding.width(d);
    let diverged = AtomicU64::new(u64::MAX);

    for j in 0..grid.steps() {
        // per-replica root drift (isolated branch for empty neighborhoods)
        let mut root_b = vec![S::zero(); replicas * d];
        root_b.par_chunks_mut(d).enumerate().for_each(|(m, out)| {
            let root = ensemble.root_path(m, j + 1);
            let nbrs: Vec<PathView<S>> =
                (1..=ensemble.kappa(m)).map(|c| ensemble.coord_path(m, c, j + 1)).collect();
            drift.eval(j, grid, root, &nbrs, out);
        });

        // conditional-drift estimates for every live child
        let mut gammas = vec![S::zero(); query_pairs.len() * d];
        if !query_pairs.is_empty() {
            let design = GammaDesign::from_ensemble(&ensemble, drift, j, cfg, tilted)?;
            let results: Vec<Result<()>> = gammas
                .par_chunks_mut(d)
                .enumerate()
                .map_init(
                    || vec![S::zero(); 2 * emb_width],
                    |buf, (qi, out)| {
                        let (m, c) = query_pairs[qi];
                        let (m, c) = (m as usize, c as usize);
                        let child = ensemble.coord_path(m, c, j + 1);
                        let root = ensemble.root_path(m, j + 1);
                        cfg.embedding.embed(&child, j, &mut buf[..emb_width]);
                        cfg.embedding.embed(&root, j, &mut buf[emb_width..]);
                        design.estimate(cfg, buf, Some(ensemble.kappa(m) as u32), out)
                    },
                )
                .collect();
            results.into_iter().collect::<Result<()>>()?;
        }

        // synchronous advance
        let kappas: Vec<usize> = (0..replicas).map(|m| ensemble.kappa(m)).collect();
        ensemble.paths_mut().par_iter_mut().enumerate().for_each_init(
            Vec::new,
            |drifts: &mut Vec<S>, (m, path)| {
                let kappa = kappas[m];
                drifts.clear();
                drifts.extend_from_slice(&root_b[m * d..(m + 1) * d]);
                for c in 1..=kappa {
                    let qi = query_offset[m] + (c - 1);
                    drifts.extend_from_slice(&gammas[qi * d..(qi + 1) * d]);
                }
                advance_replica(
                    path, kappa, drifts, diffusion, grid, j, d, m, seed, &diverged,
                );
            },
        );
        check_divergence(&diverged)?;
    }
    Ok(ensemble)
}

/// Solves the regular-tree local equation with `kappa >= 2`: the root
/// advances with the true drift, every child with the regression estimate
/// of the conditional drift queried at (child, root).
#[allow(clippy::too_many_arguments)]
pub fn solve_local_regular<S: Scalar>(
    kappa: usize,
    drift: &dyn Drift<S>,
    diffusion: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    replicas: usize,
    grid: &TimeGrid,
    cfg: &GammaEstimatorConfig,
    seed: u64,
) -> Result<LocalEnsemble<S>> {
    if kappa < 2 {
        return Err(CoreError::InvalidArgument(format!("kappa = {kappa} must be >= 2")));
    }
    run_solver(Structure::Regular(kappa), drift, diffusion, init, replicas, grid, cfg, seed)
}

/// Solves the UGW local equation: per replica the first generation is
/// drawn from `rho` and the auxiliary count from its size-biased law;
/// off-tree children stay frozen and the child drift is the tilted-ratio
/// estimate.
#[allow(clippy::too_many_arguments)]
pub fn solve_local_ugw<S: Scalar>(
    rho: &OffspringLaw,
    drift: &dyn Drift<S>,
    diffusion: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    replicas: usize,
    grid: &TimeGrid,
    cfg: &GammaEstimatorConfig,
    seed: u64,
) -> Result<LocalEnsemble<S>> {
    if rho.mean() <= 0.0 && rho.mass_at_zero() < 1.0 {
        return Err(CoreError::InvalidLaw("offspring law needs a positive first moment".into()));
    }
    run_solver(Structure::Ugw(rho), drift, diffusion, init, replicas, grid, cfg, seed)
}

fn run_driftless<S: Scalar>(
    structure: Structure<'_>,
    diffusion: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    replicas: usize,
    grid: &TimeGrid,
    seed: u64,
) -> Result<LocalEnsemble<S>> {
    let coeffs =
        coeff_fingerprint("driftless", &diffusion.describe(), &init.describe(), grid);
    let mut ensemble = blank_ensemble(&structure, init, grid, replicas, seed, coeffs)?;
    let d = init.dim();
    let kappas: Vec<usize> = (0..replicas).map(|m| ensemble.kappa(m)).collect();
    let diverged = AtomicU64::new(u64::MAX);
    for j in 0..grid.steps() {
        ensemble.paths_mut().par_iter_mut().enumerate().for_each_init(
            Vec::new,
            |drifts: &mut Vec<S>, (m, path)| {
                let kappa = kappas[m];
                drifts.clear();
                drifts.resize((kappa + 1) * d, S::zero());
                advance_replica(
                    path, kappa, drifts, diffusion, grid, j, d, m, seed, &diverged,
                );
            },
        );
        check_divergence(&diverged)?;
    }
    Ok(ensemble)
}

/// Reference driftless ensemble on the regular-tree neighborhood, sharing
/// the structure, init, and noise streams of `solve_local_regular`.
pub fn driftless_local_regular<S: Scalar>(
    kappa: usize,
    diffusion: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    replicas: usize,
    grid: &TimeGrid,
    seed: u64,
) -> Result<LocalEnsemble<S>> {
    if kappa < 2 {
        return Err(CoreError::InvalidArgument(format!("kappa = {kappa} must be >= 2")));
    }
    run_driftless(Structure::Regular(kappa), diffusion, init, replicas, grid, seed)
}

/// Reference driftless ensemble on the UGW neighborhood.
pub fn driftless_local_ugw<S: Scalar>(
    rho: &OffspringLaw,
    diffusion: &dyn Diffusion<S>,
    init: &InitialLaw<S>,
    replicas: usize,
    grid: &TimeGrid,
    seed: u64,
) -> Result<LocalEnsemble<S>> {
    run_driftless(Structure::Ugw(rho), diffusion, init, replicas, grid, seed)
}
