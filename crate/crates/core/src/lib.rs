//! Real-trajectory semiclassical propagation of a Gaussian wavepacket through
//! a one-dimensional square barrier, with an exact split-operator reference
//! and trajectory-based tunneling times.

// NaN-rejecting guards read as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod coherent;
pub mod error;
pub mod exact;
pub mod numeric;
pub mod quartic;
pub mod semiclassical;
pub mod setup;
pub mod tangent;
pub mod trajectory;
pub mod tunneling;

pub use coherent::{coherent_amplitude, z_label, CoherentState};
pub use error::{Error, Result};
pub use setup::PhysicalSetup;
pub use tangent::{tangent_from_action, FiniteDifference, Stencil, TangentElements};
pub use trajectory::{Kind, Region, Segment, TangentMethod, Trajectory};
