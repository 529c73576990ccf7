//! Re-rooting identity check on deep-tree ensembles: the tilted-ratio
//! regression built at the root, evaluated with swapped arguments at
//! (child, root), must agree with the direct regression of the statistic
//! computed in the child's neighborhood.

use rayon::prelude::*;

use crate::dynamics::{PathBundle, PathView};
use crate::error::{CoreError, Result};
use crate::localeq::gamma::{GammaDesign, GammaEstimatorConfig};
use crate::rng::{tag, CounterRng};
use crate::scalar::Scalar;
use crate::topology::SampledTree;
use crate::verify::{TestReport, Verdict};

/// Bounded statistic of (own path, other path, unordered neighborhood
/// paths) evaluated at a grid step.
pub trait PairStatistic<S: Scalar>: Send + Sync {
    fn name(&self) -> String;
    fn eval(
        &self,
        step: usize,
        own: PathView<'_, S>,
        other: PathView<'_, S>,
        neighborhood: &[PathView<'_, S>],
    ) -> f64;
}

struct Row<S> {
    point: Vec<S>,
    tilted_value: f64, // h seen from the root, weighted by |N_root|/|N_1|
    weight: f64,
    direct_value: f64, // h seen from child 1
}

fn build_rows<S: Scalar>(
    replicas: &[(SampledTree, PathBundle<S>)],
    indices: &[usize],
    step: usize,
    h: &dyn PairStatistic<S>,
    cfg: &GammaEstimatorConfig,
) -> Result<Vec<Row<S>>> {
    let rows: Vec<Option<Row<S>>> = indices
        .par_iter()
        .map(|&r| {
            let (tree, bundle) = &replicas[r];
            let root_deg = tree.root_degree();
            if root_deg == 0 {
                return None;
            }
            let child = tree
                .index_of(&crate::topology::UhnLabel::new(vec![1]).expect("valid label"))
                .expect("prefix closure");
            let d = bundle.dim();
            let emb_w = cfg.embedding.width(d);
            let root_path = bundle.path_prefix(0, step + 1);
            let child_path = bundle.path_prefix(child, step + 1);
            let mut point = vec![S::zero(); 2 * emb_w];
            cfg.embedding.embed(&root_path, step, &mut point[..emb_w]);
            cfg.embedding.embed(&child_path, step, &mut point[emb_w..]);
            // neighborhoods in the full tree
            let root_nbrs: Vec<PathView<S>> = tree
                .children_of(0)
                .iter()
                .map(|&v| bundle.path_prefix(v, step + 1))
                .collect();
            let child_nbrs: Vec<PathView<S>> = std::iter::once(0usize)
                .chain(tree.children_of(child).iter().copied())
                .map(|v| bundle.path_prefix(v, step + 1))
                .collect();
            let child_deg = child_nbrs.len();
            let weight = root_deg as f64 / child_deg as f64;
            let tilted_value = weight * h.eval(step, root_path, child_path, &root_nbrs);
            let direct_value = h.eval(step, child_path, root_path, &child_nbrs);
            Some(Row { point, tilted_value, weight, direct_value })
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

fn fit_and_eval<S: Scalar>(
    rows: &[Row<S>],
    swapped_panel: &[Vec<S>],
    cfg: &GammaEstimatorConfig,
    k_default: usize,
) -> Result<Vec<f64>> {
    let qw = rows[0].point.len();
    let n = rows.len();
    // side A: tilted ratio fitted on (root, child) pairs
    let mut pts = Vec::with_capacity(n * qw);
    let mut num = Vec::with_capacity(n);
    let mut den = Vec::with_capacity(n);
    for row in rows {
        pts.extend_from_slice(&row.point);
        num.push(S::from_f64(row.tilted_value));
        den.push(row.weight);
    }
    let tilted =
        GammaDesign::from_raw_parts(1, qw, pts, num, den, vec![1; n], k_default)?;
    // side B: plain regression of the child-side values on swapped pairs
    let mut pts_b = Vec::with_capacity(n * qw);
    let mut resp_b = Vec::with_capacity(n);
    for row in rows {
        let half = qw / 2;
        pts_b.extend_from_slice(&row.point[half..]);
        pts_b.extend_from_slice(&row.point[..half]);
        resp_b.push(S::from_f64(row.direct_value));
    }
    let direct =
        GammaDesign::from_raw_parts(1, qw, pts_b, resp_b, vec![1.0; n], vec![1; n], k_default)?;

    let mut diffs = Vec::with_capacity(swapped_panel.len());
    let mut out = [S::zero()];
    for qs in swapped_panel {
        // both sides are evaluated with swapped arguments (child, root)
        tilted.estimate(cfg, qs, None, &mut out)?;
        let xi = out[0].as_f64();
        direct.estimate(cfg, qs, None, &mut out)?;
        diffs.push(xi - out[0].as_f64());
    }
    Ok(diffs)
}

/// Compares the root-built tilted-ratio regression, evaluated at
/// (child, root), against the direct child-side regression over a panel of
/// query points; passes when the panel sup-difference stays within three
/// pooled bootstrap standard errors.
pub fn reroot_gamma_check<S: Scalar>(
    replicas: &[(SampledTree, PathBundle<S>)],
    t: f64,
    h: &dyn PairStatistic<S>,
    cfg: &GammaEstimatorConfig,
    panel_size: usize,
    bootstraps: usize,
    seed: u64,
) -> Result<TestReport> {
    if replicas.is_empty() {
        return Err(CoreError::InsufficientData("no replicas".into()));
    }
    let step = replicas[0].1.grid().index_of(t)?;
    if step == 0 {
        return Err(CoreError::InvalidArgument(
            "re-rooting identity is only tested at interior grid times".into(),
        ));
    }
    let all: Vec<usize> = (0..replicas.len()).collect();
    let rows = build_rows(replicas, &all, step, h, cfg)?;
    if rows.len() < 200 {
        return Err(CoreError::InsufficientData(format!(
            "only {} replicas have a nonempty root neighborhood",
            rows.len()
        )));
    }
    let k_default = (replicas.len() as f64).sqrt().ceil() as usize;
    let qw = rows[0].point.len();
    let half = qw / 2;

    // panel: embedded (child, root) query pairs taken from the first rows
    let panel_size = panel_size.min(rows.len());
    let swapped: Vec<Vec<S>> = rows[..panel_size]
        .iter()
        .map(|r| {
            let mut q = Vec::with_capacity(qw);
            q.extend_from_slice(&r.point[half..]);
            q.extend_from_slice(&r.point[..half]);
            q
        })
        .collect();

    let diffs = fit_and_eval(&rows, &swapped, cfg, k_default)?;
    let sup: f64 = diffs.iter().fold(0.0, |a, &b| a.max(b.abs()));

    // bootstrap over replica resamples, shared between the two sides
    let boot_vars: Vec<f64> = {
        let mut acc = vec![0.0f64; swapped.len()];
        let mut count = 0usize;
        for b in 0..bootstraps {
            let mut rng = CounterRng::new(seed, &[tag::CHECK, 0xb007, b as u64]);
            let sample: Vec<usize> =
                (0..rows.len()).map(|_| rng.below(rows.len() as u64) as usize).collect();
            let rows_b: Vec<Row<S>> = sample
                .iter()
                .map(|&i| Row {
                    point: rows[i].point.clone(),
                    tilted_value: rows[i].tilted_value,
                    weight: rows[i].weight,
                    direct_value: rows[i].direct_value,
                })
                .collect();
            if let Ok(diffs_b) = fit_and_eval(&rows_b, &swapped, cfg, k_default) {
                for (a, (&db, &d0)) in acc.iter_mut().zip(diffs_b.iter().zip(&diffs)) {
                    *a += (db - d0) * (db - d0);
                }
                count += 1;
            }
        }
        if count < 2 {
            return Err(CoreError::InsufficientData("bootstrap failed".into()));
        }
        acc.into_iter().map(|a| a / count as f64).collect()
    };
    let pooled_sigma =
        (boot_vars.iter().sum::<f64>() / boot_vars.len() as f64).sqrt();
    let threshold = 3.0 * pooled_sigma;
    let verdict = Verdict::from_bool(sup <= threshold);
    Ok(TestReport::new(format!("reroot-gamma/{}", h.name()), sup, verdict)
        .with_threshold(threshold)
        .with_se(pooled_sigma)
        .with_seed(seed)
        .with_size("replicas", replicas.len() as u64)
        .with_size("panel", swapped.len() as u64)
        .with_size("bootstraps", bootstraps as u64)
        .with_detail("sup_difference", sup))
}
