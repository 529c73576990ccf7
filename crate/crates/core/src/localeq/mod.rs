//! Ensemble solvers for the root-neighborhood local equations.
//!
//! The regular-tree and UGW local equations are time-marched over M
//! independent replicas of the root neighborhood; the conditional-
//! expectation drift of each child coordinate is estimated at every step by
//! a cross-replica nonparametric regression on embedded path histories. On
//! the UGW tree the estimate is a ratio of two regressions tilted by the
//! re-rooting weight `|N_root| / (1 + C_hat)`.

mod embedding;
mod ensemble;
mod gamma;
mod reroot;
mod solve;

pub use embedding::HistoryEmbedding;
pub use ensemble::LocalEnsemble;
pub use gamma::{
    estimate_gamma_regular, estimate_gamma_ugw, GammaDesign, GammaEstimatorConfig, GammaMethod,
    GammaQuery,
};
pub use reroot::{reroot_gamma_check, PairStatistic};
pub use solve::{coeff_fingerprint, 
    driftless_local_regular, driftless_local_ugw, solve_local_regular, solve_local_ugw,
};
