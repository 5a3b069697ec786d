//! Tracing and compensation of coherent ZZ crosstalk in Steane |+> encoders.

pub mod circuit;
pub mod compensator;
pub mod error;
pub mod format;
pub mod mitigation;
pub mod rewrite;
pub mod scenario;
pub mod sim;
pub mod steane;
pub mod topology;
pub mod tracer;

pub use circuit::{Circuit, Gate, QubitId};
pub use error::{Error, Result};
pub use sim::{Basis, Counts, NoiseSpec, StateVector};
pub use topology::Topology;
