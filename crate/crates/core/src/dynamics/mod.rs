//! Discretized simulation of the path-dependent SDE system on trees and
//! finite graphs: explicit Euler-Maruyama with drift evaluated at the left
//! endpoint, per-vertex counter-based noise streams, and path-bundle
//! extraction.

mod bundle;
mod coeffs;
mod contracts;
mod grid;
mod path;
mod simulate;

pub use bundle::PathBundle;
pub use coeffs::{
    ConstDiagDiffusion, ConstantDrift, Diffusion, DiffusionSpec, Drift, DriftSpec,
    EmpiricalMeanTanhDrift, IdentityDiffusion, InitialLaw, OuPairwiseDrift, TanhDiagonalDiffusion,
    ZeroDrift,
};
pub use contracts::{validate_diffusion, validate_drift};
pub use grid::TimeGrid;
pub use path::PathView;
pub use simulate::{
    empirical_measure, empirical_paths, moment_bound_check, simulate_driftless, simulate_system,
    MomentBoundReport, SimTopology, DIVERGENCE_GUARD,
};
pub(crate) use simulate::{check_finite as all_finite, em_step as em_step_raw};
