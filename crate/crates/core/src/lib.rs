//! Quantum dilated convolution (QDC) for hybrid quantum–classical image
//! classification.
//!
//! The crate is organised bottom-up:
//!
//! - [`qsim`]: exact state-vector simulation of few-qubit circuits.
//! - [`qfilter`]: the quantum filter (angle encoding, seeded random layers,
//!   Pauli-Z readout) and its parameter-shift Jacobian.
//! - [`conv`]: dilated convolution geometry, a classical reference
//!   convolution and the quantum convolution layer.
//! - [`model`]: dense softmax head, Adam, and the hybrid gradient chain.
//! - [`data`]: IDX ingestion and balanced subsetting.
//! - [`exp`]: Experiment A (frozen filter) / Experiment B (trainable filter)
//!   orchestration with circuit-execution accounting.
//! - [`cli`]: the `qdcnn` command line.

pub mod cli;
pub mod conv;
pub mod data;
pub mod error;
pub mod exp;
pub mod model;
pub mod qfilter;
pub mod qsim;

pub use error::{Error, Result};
