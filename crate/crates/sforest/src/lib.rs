//! Exact and approximate solvers for Steiner Forest on graphs of small feedback edge set,
//! small vertex cover, or small treewidth.

pub mod baselines;
pub mod conforming;
pub mod epas;
pub mod error;
pub mod fes;
pub mod generators;
pub mod instance;
pub mod partition;
pub mod reduce;
pub mod td;
pub mod util;
pub mod vc;

pub use error::{Result, SfError};
pub use num_rational::Ratio;
pub use instance::{demand_groups, evaluate_solution, parse_instance, write_instance, Edge, Evaluation, Forest, Instance};
