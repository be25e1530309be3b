//! Reduced-order and lumped-parameter surrogate models for linear
//! time-invariant systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: banded sparse LU, Lyapunov and eigenvalue kernels.
//! - [`lti`]: state-space systems, transfer functions, H₂ norms, simulation
//!   and a balanced-truncation baseline.
//! - [`mor`]: rational Krylov projection, pseudo-optimal reduction, adaptive
//!   shift selection, cumulative reduction with an a priori H₂ bound, and IRKA.
//! - [`hfmgen`]: 1D finite-element rod models used as high-fidelity systems.
//! - [`lpm`]: oriented cell complexes and automatic equation generation for
//!   mass–spring–damper and thermal RC networks.
//! - [`sysid`]: output-error fitting of network parameters.
//! - [`hybrid`]: the reduce → simulate → fit → certify pipeline.
//! - [`io`]: Matrix Market and CSV exchange formats.

pub mod error;
pub mod hfmgen;
pub mod hybrid;
pub mod io;
pub mod lpm;
pub mod lti;
pub mod mor;
pub mod numerics;
pub mod sysid;

pub use error::{Error, Result};
pub use lti::{SecondOrderSystem, StateSpaceSystem, TimeSeries};
pub use numerics::{DenseMatrix, SparseMatrix, SystemMatrix};
