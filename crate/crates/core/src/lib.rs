//! Simulation of interacting diffusions indexed by sparse random graphs and
//! unimodular Galton-Watson trees, ensemble solvers for the root-neighborhood
//! local equation, and statistical checkers for the identities the theory
//! predicts.
//!
//! The crate is organized around four layers:
//!
//! * [`topology`] - offspring laws, Galton-Watson tree and random-graph
//!   samplers, boundary operators, text serialization.
//! * [`dynamics`] - the Euler-Maruyama engine for path-dependent drift /
//!   diagonal diffusion systems, path bundles and their exports.
//! * [`localeq`] - ensemble time-marching of the regular-tree and UGW local
//!   equations with a cross-replica regression estimator of the
//!   conditional-expectation drift.
//! * [`verify`] - distances between laws, two-sample tests, mass-transport,
//!   reweighting, Girsanov-weight and relative-entropy checkers.
//!
//! State-space arithmetic is generic over [`Scalar`] (`f32` or `f64`);
//! everything downstream of the command-line tool uses the [`Real`] alias.

pub mod dynamics;
pub mod error;
pub mod localeq;
pub mod rng;
pub mod scalar;
pub mod topology;
pub mod verify;

pub use error::CoreError;
pub use scalar::Scalar;

/// Default scalar type used by the CLI and the acceptance experiments.
pub type Real = f64;

/// Path bundle over the default scalar.
pub type RealPathBundle = dynamics::PathBundle<Real>;
/// Local ensemble over the default scalar.
pub type RealLocalEnsemble = localeq::LocalEnsemble<Real>;
/// Local ensemble over the default scalar.

/// Boxed drift over the default scalar.
pub type RealDriftSpec = dynamics::DriftSpec<Real>;
/// Boxed diffusion over the default scalar.
pub type RealDiffusionSpec = dynamics::DiffusionSpec<Real>;
