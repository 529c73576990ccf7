//! Random graphs and trees: offspring laws, unimodular Galton-Watson tree
//! sampling under the canonical labeling, finite random-graph models, and
//! set-boundary operators.

mod boundary;
mod graph;
mod label;
mod offspring;
mod tree;

pub use boundary::{boundary, Adjacency, BoundaryOrder};
pub use graph::{
    sample_configuration_model, sample_erdos_renyi, sample_regular, FiniteGraph,
};
pub use label::UhnLabel;
pub use offspring::{size_biased, OffspringLaw, DEFAULT_TRUNCATION_CAP};
pub use tree::{sample_ugw, SampledTree};
