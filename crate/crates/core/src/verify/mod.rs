//! Statistical and exact checkers for the identities and convergence claims
//! the theory predicts: distances between laws, two-sample and
//! conditional-independence tests, mass transport, size-bias reweighting,
//! Girsanov weights, and the relative-entropy identity.
//!
//! Pass thresholds are multiples of estimated Monte Carlo standard errors
//! (default 3) or p-value floors (default 0.01); exact-arithmetic checks use
//! 1e-12.

mod girsanov;
mod ks;
mod locallimit;
mod mass_transport;
mod mrf;
mod report;
mod reweight;
pub mod special;
mod stats;
mod wasserstein;

pub use girsanov::{girsanov_weight, relative_entropy_check, PathWeight};
pub use ks::{chi_square_gof, two_sample_ks};
pub use locallimit::{local_limit_experiment, paired_decrease, GraphModel};
pub use mass_transport::{
    edge_indicator, edge_mark, edge_mark_pair, equality_indicator, inverse_degree_edge,
    mass_transport_check, two_step_mark, TransportFn,
};
pub use mrf::{mrf2_test, Mrf2Config};
pub use report::{TestReport, Verdict};
pub use reweight::{reweight_identity_check, reweight_identity_values, tilt_normalization_check};
pub use stats::{
    mean_and_se, sign_test, swap_symmetry_test, weighted_mean_and_se, DEFAULT_ALPHA,
    DEFAULT_SIGMA_MULTIPLE,
};
pub use wasserstein::{sliced_directions, wasserstein1, wasserstein1_1d};
