//! Channel-local convolutions and the clcNet architecture.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`] holds the dense NCHW container and the channel interlace
//!   permutation.
//! * [`conv`] implements regular, grouped, depthwise and interlaced grouped
//!   convolution plus the CLC block composite (IGC → BN → GC → BN → ReLU).
//! * [`cdg`] builds and composes channel dependency graphs and decides
//!   whether a kernel or block has a full channel receptive field.
//! * [`optimizer`] minimises the per-location cost of an IGC + GC pair under
//!   the full-receptive-field constraint `g1 * g2 <= L`.
//! * [`model`] instantiates clcNet from block repetition counts, counts MACs
//!   and parameters, and runs forward inference.

pub mod cdg;
pub mod conv;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Scalar, Tensor4D, WeightTensor};
