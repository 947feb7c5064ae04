//! Quantum circuit Born machines with classical pretraining and
//! similarity-driven circuit extension.
//!
//! The crate covers the full pipeline for training a generative model whose
//! samples are measurement outcomes of a parameterized quantum circuit:
//!
//! 1. [`data`] builds binary datasets (bars-and-stripes images, quantized
//!    time-series differences) and handles splits and file formats.
//! 2. [`mps`] trains a matrix product state on the data by DMRG-style
//!    negative-log-likelihood sweeps and decomposes the result into a
//!    linear-connectivity two-qubit circuit.
//! 3. [`similarity`] measures feature similarity (Hamming distance,
//!    variation of information) and turns it into an extension topology.
//! 4. [`qcbm`] extends the pretrained circuit with near-identity SU(4)
//!    gates and retrains it against the maximum mean discrepancy loss with
//!    parameter-shift gradients and ADAM.
//! 5. [`statevector`] and [`gates`] provide the dense simulator and the
//!    parameterized gate set underneath it all.

pub mod bits;
pub mod data;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod mps;
pub mod qcbm;
pub mod similarity;
pub mod statevector;

pub use error::{Error, Result};
