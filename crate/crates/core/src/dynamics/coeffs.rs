//! Drift and diffusion coefficient contracts and the shipped builders.
//!
//! A drift sees the step index, its own path prefix, and an unordered finite
//! collection of neighbor path prefixes; it must be symmetric in the
//! collection, use only values at grid points up to the current step, and
//! satisfy the linear-growth bound with its declared constant. An empty
//! collection selects the isolated-vertex branch. Diffusions are diagonal,
//! invertible, with declared norm bounds.

use std::sync::Arc;

use crate::dynamics::grid::TimeGrid;
use crate::dynamics::path::PathView;
use crate::error::{CoreError, Result};
use crate::rng::CounterRng;
use crate::scalar::Scalar;

pub trait Drift<S: Scalar>: Send + Sync {
    /// Writes the drift vector at grid step `step` into `out`.
    fn eval(
        &self,
        step: usize,
        grid: &TimeGrid,
        own: PathView<'_, S>,
        neighbors: &[PathView<'_, S>],
        out: &mut [S],
    );

    /// Constant `C_T` in the linear-growth bound
    /// `|b| <= C_T (1 + ||x|| + avg ||x_v||)`.
    fn growth_const(&self) -> f64;

    /// Stable description used for provenance and comparison checks.
    fn describe(&self) -> String;
}

pub trait Diffusion<S: Scalar>: Send + Sync {
    /// Writes the diagonal of the diffusion matrix at `step` into `out`.
    fn diag(&self, step: usize, grid: &TimeGrid, own: PathView<'_, S>, out: &mut [S]);

    /// `(sigma_max, sigma_inv_max)` bounds on the matrix and inverse norms.
    fn bounds(&self) -> (f64, f64);

    fn describe(&self) -> String;
}

/// Shared drift handle.
pub type DriftSpec<S> = Arc<dyn Drift<S>>;
/// Shared diffusion handle.
pub type DiffusionSpec<S> = Arc<dyn Diffusion<S>>;

/// b = 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDrift;

impl<S: Scalar> Drift<S> for ZeroDrift {
    fn eval(&self, _: usize, _: &TimeGrid, _: PathView<'_, S>, _: &[PathView<'_, S>], out: &mut [S]) {
        out.fill(S::zero());
    }
    fn growth_const(&self) -> f64 {
        0.0
    }
    fn describe(&self) -> String {
        "zero".into()
    }
}

/// b = c, a fixed vector.
#[derive(Debug, Clone)]
pub struct ConstantDrift {
    pub value: Vec<f64>,
}

impl<S: Scalar> Drift<S> for ConstantDrift {
    fn eval(&self, _: usize, _: &TimeGrid, _: PathView<'_, S>, _: &[PathView<'_, S>], out: &mut [S]) {
        for (o, &v) in out.iter_mut().zip(&self.value) {
            *o = S::from_f64(v);
        }
    }
    fn growth_const(&self) -> f64 {
        self.value.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    fn describe(&self) -> String {
        let parts: Vec<String> = self.value.iter().map(|v| format!("{v}")).collect();
        format!("constant[{}]", parts.join(","))
    }
}

/// Pairwise-average interaction: the drift is the neighbor average of
/// `btilde(t, x, y) = -rate * x(t) + coupling * (y(t) - x(t))`, and
/// `-rate * x(t)` for an isolated vertex.
#[derive(Debug, Clone, Copy)]
pub struct OuPairwiseDrift {
    pub rate: f64,
    pub coupling: f64,
}

impl<S: Scalar> Drift<S> for OuPairwiseDrift {
    fn eval(
        &self,
        step: usize,
        _: &TimeGrid,
        own: PathView<'_, S>,
        neighbors: &[PathView<'_, S>],
        out: &mut [S],
    ) {
        let a = S::from_f64(self.rate);
        let c = S::from_f64(self.coupling);
        let x = own.value(step);
        if neighbors.is_empty() {
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = -a * xi;
            }
            return;
        }
        let inv = S::from_f64(1.0 / neighbors.len() as f64);
        for (i, o) in out.iter_mut().enumerate() {
            let mut avg = S::zero();
            for nb in neighbors {
                avg = avg + nb.value(step)[i];
            }
            avg = avg * inv;
            *o = -a * x[i] + c * (avg - x[i]);
        }
    }
    fn growth_const(&self) -> f64 {
        (self.rate.abs() + self.coupling.abs()).max(self.coupling.abs())
    }
    fn describe(&self) -> String {
        format!("ou-pairwise(rate={},coupling={})", self.rate, self.coupling)
    }
}

/// Empirical-measure interaction: `-rate * x(t) + coupling * <m_t, tanh>`
/// where `m_t` is the empirical measure of the neighbor values at `t`;
/// `-rate * x(t)` for an isolated vertex.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalMeanTanhDrift {
    pub rate: f64,
    pub coupling: f64,
}

impl<S: Scalar> Drift<S> for EmpiricalMeanTanhDrift {
    fn eval(
        &self,
        step: usize,
        _: &TimeGrid,
        own: PathView<'_, S>,
        neighbors: &[PathView<'_, S>],
        out: &mut [S],
    ) {
        let a = S::from_f64(self.rate);
        let c = S::from_f64(self.coupling);
        let x = own.value(step);
        if neighbors.is_empty() {
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = -a * xi;
            }
            return;
        }
        let inv = S::from_f64(1.0 / neighbors.len() as f64);
        for (i, o) in out.iter_mut().enumerate() {
            let mut avg = S::zero();
            for nb in neighbors {
                avg = avg + nb.value(step)[i].tanh();
            }
            *o = -a * x[i] + c * avg * inv;
        }
    }
    fn growth_const(&self) -> f64 {
        self.rate.abs().max(self.coupling.abs())
    }
    fn describe(&self) -> String {
        format!("mean-tanh(rate={},coupling={})", self.rate, self.coupling)
    }
}

/// sigma = I.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityDiffusion;

impl<S: Scalar> Diffusion<S> for IdentityDiffusion {
    fn diag(&self, _: usize, _: &TimeGrid, _: PathView<'_, S>, out: &mut [S]) {
        out.fill(S::one());
    }
    fn bounds(&self) -> (f64, f64) {
        (1.0, 1.0)
    }
    fn describe(&self) -> String {
        "identity".into()
    }
}

/// Constant diagonal sigma.
#[derive(Debug, Clone)]
pub struct ConstDiagDiffusion {
    diag: Vec<f64>,
}

impl ConstDiagDiffusion {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "diffusion diagonal must be positive and finite".into(),
            ));
        }
        Ok(ConstDiagDiffusion { diag })
    }
}

impl<S: Scalar> Diffusion<S> for ConstDiagDiffusion {
    fn diag(&self, _: usize, _: &TimeGrid, _: PathView<'_, S>, out: &mut [S]) {
        for (o, &s) in out.iter_mut().zip(&self.diag) {
            *o = S::from_f64(s);
        }
    }
    fn bounds(&self) -> (f64, f64) {
        let max = self.diag.iter().cloned().fold(0.0, f64::max);
        let min = self.diag.iter().cloned().fold(f64::INFINITY, f64::min);
        (max, 1.0 / min)
    }
    fn describe(&self) -> String {
        let parts: Vec<String> = self.diag.iter().map(|v| format!("{v}")).collect();
        format!("const-diag[{}]", parts.join(","))
    }
}

/// State-dependent diagonal sigma_ii = base + amplitude * tanh(x_i(t)),
/// constrained so the diagonal stays within [0.5, 2].
#[derive(Debug, Clone, Copy)]
pub struct TanhDiagonalDiffusion {
    base: f64,
    amplitude: f64,
}

impl TanhDiagonalDiffusion {
    pub fn new(base: f64, amplitude: f64) -> Result<Self> {
        let lo = base - amplitude.abs();
        let hi = base + amplitude.abs();
        if !(lo >= 0.5 && hi <= 2.0) {
            return Err(CoreError::InvalidArgument(format!(
                "tanh diagonal range [{lo}, {hi}] must stay within [0.5, 2]"
            )));
        }
        Ok(TanhDiagonalDiffusion { base, amplitude })
    }
}

impl<S: Scalar> Diffusion<S> for TanhDiagonalDiffusion {
    fn diag(&self, step: usize, _: &TimeGrid, own: PathView<'_, S>, out: &mut [S]) {
        let base = S::from_f64(self.base);
        let amp = S::from_f64(self.amplitude);
        for (o, &xi) in out.iter_mut().zip(own.value(step)) {
            *o = base + amp * xi.tanh();
        }
    }
    fn bounds(&self) -> (f64, f64) {
        (self.base + self.amplitude.abs(), 1.0 / (self.base - self.amplitude.abs()))
    }
    fn describe(&self) -> String {
        format!("tanh-diag(base={},amplitude={})", self.base, self.amplitude)
    }
}

type Sampler<S> = Arc<dyn Fn(&mut CounterRng, &mut [S]) + Send + Sync>;

/// Initial distribution of a single coordinate: a seeded sampler plus its
/// declared second moment (finite by construction for every builder).
#[derive(Clone)]
pub struct InitialLaw<S: Scalar> {
    dim: usize,
    second_moment: f64,
    bounded_support: bool,
    name: String,
    sampler: Sampler<S>,
}

impl<S: Scalar> InitialLaw<S> {
    pub fn point(value: Vec<f64>) -> Self {
        let dim = value.len();
        let second_moment = value.iter().map(|v| v * v).sum();
        let name = format!(
            "point[{}]",
            value.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
        );
        let sampler: Sampler<S> = Arc::new(move |_rng, out: &mut [S]| {
            for (o, &v) in out.iter_mut().zip(&value) {
                *o = S::from_f64(v);
            }
        });
        InitialLaw { dim, second_moment, bounded_support: true, name, sampler }
    }

    pub fn gaussian(dim: usize, mean: f64, sd: f64) -> Self {
        let second_moment = dim as f64 * (mean * mean + sd * sd);
        let name = format!("gaussian(dim={dim},mean={mean},sd={sd})");
        let sampler: Sampler<S> = Arc::new(move |rng, out: &mut [S]| {
            for o in out.iter_mut() {
                *o = S::from_f64(mean + sd * rng.standard_normal());
            }
        });
        InitialLaw { dim, second_moment, bounded_support: false, name, sampler }
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(CoreError::InvalidArgument(format!("uniform bounds {lo} >= {hi}")));
        }
        let m2 = (hi * hi + hi * lo + lo * lo) / 3.0;
        let name = format!("uniform(dim={dim},lo={lo},hi={hi})");
        let sampler: Sampler<S> = Arc::new(move |rng, out: &mut [S]| {
            for o in out.iter_mut() {
                *o = S::from_f64(rng.uniform_in(lo, hi));
            }
        });
        Ok(InitialLaw {
            dim,
            second_moment: dim as f64 * m2,
            bounded_support: true,
            name,
            sampler,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn bounded_support(&self) -> bool {
        self.bounded_support
    }

    pub fn describe(&self) -> String {
        self.name.clone()
    }

    pub fn draw(&self, rng: &mut CounterRng, out: &mut [S]) {
        debug_assert_eq!(out.len(), self.dim);
        (self.sampler)(rng, out)
    }
}

impl<S: Scalar> std::fmt::Debug for InitialLaw<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "InitialLaw({})", self.name)
    }
}
