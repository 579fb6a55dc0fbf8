pub mod analytic;
pub mod config;
pub mod error;
pub mod graph;
pub mod monotone;
pub mod montecarlo;
pub mod process;
pub mod quadrature;
pub mod sampler;
pub mod skorokhod;
pub mod stats;
pub mod timechange;

pub use error::{Error, Result};
pub use graph::{BoundaryParams, GraphPoint, JumpMeasure, Tail};
pub use monotone::{Knot, MonotonePath};
pub use skorokhod::CadlagPath;
