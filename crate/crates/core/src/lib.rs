//! Numerics for upper bounds on device-independent secret key.
//!
//! The crate builds the block Bell-diagonal states used to separate
//! device-dependent from device-independent key, evaluates the
//! advantage-distillation Devetak-Winter lower bound and the `2β` upper bound
//! on the key of the partially transposed state, and implements the
//! partial-transpose attack on state and channel devices, which leaves every
//! observable statistic unchanged.
//!
//! Modules:
//!
//! - [`linalg`]: partial transpose, trace norm, Hermitian spectra, entropies.
//! - [`states`]: Bell-diagonal and block Bell-diagonal families, privacy
//!   squeezing and advantage distillation on blocks.
//! - [`bounds`]: key-rate bounds, the gap condition, region sweeps and the
//!   dimension threshold search.
//! - [`devices`]: POVM devices, their statistics and the transpose attack.
//! - [`channels`]: Choi matrices, co-positivity and the channel transpose attack.
//! - [`document`]: JSON device documents and CSV statistics export.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channels;
pub mod devices;
pub mod document;
mod error;
pub mod linalg;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix, ProbabilityVector, C64};
