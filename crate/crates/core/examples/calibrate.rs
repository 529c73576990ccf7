// scratch calibration for the local-equation acceptance tolerances
use rayon::prelude::*;
use std::sync::Arc;
use ugwsim_core::dynamics::*;
use ugwsim_core::localeq::*;
use ugwsim_core::topology::*;
use ugwsim_core::verify::*;

fn tree_pair_sample(
    rho: &OffspringLaw,
    depth: usize,
    width: usize,
    replicas: usize,
    drift: &(dyn Drift<f64>),
    init: &InitialLaw<f64>,
    grid: &TimeGrid,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    // returns (root marginal, (root, child1) pairs restricted to child1 live)
    let results: Vec<(Vec<f64>, Option<Vec<f64>>)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let tree = sample_ugw(rho, depth, width, seed.wrapping_mul(0x9e37).wrapping_add(r as u64)).unwrap();
            let topo = SimTopology::from_tree(&tree);
            let b = simulate_system(&topo, drift, &IdentityDiffusion, init, grid, seed ^ ((r as u64) << 24) ^ 0xabcd).unwrap();
            let j = grid.steps();
            let root = b.state(0, j).to_vec();
            let pair = tree
                .index_of(&UhnLabel::new(vec![1]).unwrap())
                .map(|c1| {
                    let mut p = root.clone();
                    p.extend_from_slice(b.state(c1, j));
                    p
                });
            (root, pair)
        })
        .collect();
    let roots = results.iter().map(|(r, _)| r.clone()).collect();
    let pairs = results.into_iter().filter_map(|(_, p)| p).collect();
    (roots, pairs)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("t2");
    let m: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let k: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(200);
    let grid = TimeGrid::new(1.0, k).unwrap();
    let init = InitialLaw::<f64>::uniform(1, -1.0, 1.0).unwrap();
    let drift = OuPairwiseDrift { rate: 0.5, coupling: 1.0 };
    let cfg = GammaEstimatorConfig::default();
    let t0 = std::time::Instant::now();
    match which {
        "t2" | "t3" => {
            let kappa = if which == "t2" { 2 } else { 3 };
            let ens = solve_local_regular(kappa, &drift, &IdentityDiffusion, &init, m, &grid, &cfg, 1001).unwrap();
            println!("solve done in {:?}", t0.elapsed());
            let pair_local = ens.pair_marginal(0, 1, 1.0).unwrap();
            let root_local = ens.root_marginal(1.0).unwrap();
            let rho = OffspringLaw::delta(kappa);
            let (root_tree, pair_tree) = tree_pair_sample(&rho, 6, kappa + 1, m, &drift, &init, &grid, 555);
            println!("tree sim done at {:?}", t0.elapsed());
            let w_pair = wasserstein1(&pair_local, &pair_tree).unwrap();
            let w_root = wasserstein1(&root_local, &root_tree).unwrap();
            // null floor: independent tree sims against each other
            let (root_tree2, pair_tree2) = tree_pair_sample(&rho, 6, kappa + 1, m, &drift, &init, &grid, 777);
            let w_pair_null = wasserstein1(&pair_tree2, &pair_tree).unwrap();
            let w_root_null = wasserstein1(&root_tree2, &root_tree).unwrap();
            println!("T{kappa}: W1 pair {w_pair:.4} (null {w_pair_null:.4}), root {w_root:.4} (null {w_root_null:.4})");
            // how discriminative: driftless local vs tree
            let dl = driftless_local_regular(kappa, &IdentityDiffusion, &init, m, &grid, 1001).unwrap();
            let pair_dl = dl.pair_marginal(0, 1, 1.0).unwrap();
            println!("  driftless-local vs tree pair W1 {:.4}", wasserstein1(&pair_dl, &pair_tree).unwrap());
        }
        "ugw" => {
            let rho = OffspringLaw::poisson(2.0, 40).unwrap();
            let ens = solve_local_ugw(&rho, &drift, &IdentityDiffusion, &init, m, &grid, &cfg, 2002).unwrap();
            println!("solve done in {:?}", t0.elapsed());
            let root_local = ens.root_marginal(1.0).unwrap();
            let (root_tree, _) = tree_pair_sample(&rho, 6, 16, m, &drift, &init, &grid, 556);
            println!("tree sim done at {:?}", t0.elapsed());
            let w_root = wasserstein1(&root_local, &root_tree).unwrap();
            let (root_tree2, _) = tree_pair_sample(&rho, 6, 16, m, &drift, &init, &grid, 778);
            let w_null = wasserstein1(&root_tree2, &root_tree).unwrap();
            println!("UGW: W1 root {w_root:.4} (null {w_null:.4})");
            let dl = driftless_local_ugw(&rho, &IdentityDiffusion, &init, m, &grid, 2002).unwrap();
            println!("  driftless-local vs tree root W1 {:.4}", wasserstein1(&dl.root_marginal(1.0).unwrap(), &root_tree).unwrap());
        }
        other => eprintln!("unknown mode {other}"),
    }
    println!("total {:?}", t0.elapsed());
}
