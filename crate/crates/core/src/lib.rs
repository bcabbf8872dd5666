//! Steady-state counting statistics of Lindblad generators and the
//! response-kinetic uncertainty bound on the precision of jump observables.
//!
//! The crate is organized bottom-up: [`linalg`] provides dense complex
//! matrices and the Drazin pseudoinverse, [`lindblad`] assembles vectorized
//! superoperators, [`steady_fcs`] computes stationary states and counting
//! statistics, [`rkur`] evaluates the bound, [`models`] supplies concrete
//! families and [`trajectories`] unravels the dynamics into jump records.

pub mod error;
pub mod lindblad;
pub mod linalg;
pub mod models;
pub mod rkur;
pub mod steady_fcs;
pub mod trajectories;

pub use error::{Error, Result};
