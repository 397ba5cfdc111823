//! Ordered-tree models of RNA secondary structures, with distances, median
//! trees and small parsimony on a phylogeny.
//!
//! ```
//! use rnapars::{median, Constraint, Metric, SecondaryStructure};
//!
//! let trees: Vec<_> = ["((..))", "(....)", "......"]
//!     .iter()
//!     .map(|s| s.parse::<SecondaryStructure>().unwrap().to_tree())
//!     .collect();
//! let m = median(&trees, Metric::Rf, Constraint::Nc)?;
//! assert_eq!(m.tree.to_dotbracket(), "(....)");
//! assert_eq!(m.mcost, 2.0);
//! # Ok::<(), rnapars::Error>(())
//! ```

pub mod distance;
pub mod error;
pub mod experiment;
pub mod io;
pub mod median;
pub mod oracle;
pub mod phylogeny;
pub mod sampling;
pub mod smallpars;
pub mod structure;

pub use distance::{
    bp_distance, distance_matrix, il_distance, re_distance, rf_distance, te_distance, CostFunction,
    ExactMatchCost, ManhattanCost, Mapping, Metric,
};
pub use error::{Error, Result};
pub use median::{median, Constraint, MedianResult};
pub use phylogeny::Phylogeny;
pub use smallpars::{
    leaf_restricted_sp, median_heuristic_sp, rf_nc_sp, sp_cost, Assignment, HeuristicResult,
};
pub use structure::{
    Child, InternalLeafset, LeafInterval, RnaTree, SecondaryStructure, StructuralPartition,
};
