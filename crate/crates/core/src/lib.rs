pub mod chart_manifold;
pub mod cli;
pub mod error;
pub mod extrinsic;
pub mod fd;
pub mod geometry;
pub mod graph_map;
pub mod identities;
pub mod product_space;
pub mod report;
pub mod sampling;
pub mod scenarios;
pub mod theorem_gate;

pub use error::{GeomError, Result};
