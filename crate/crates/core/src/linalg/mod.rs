//! Dense complex linear algebra for small superoperator matrices.

pub mod drazin;
pub mod eigen;
pub mod lu;
pub mod matrix;

pub use drazin::{check_drazin, drazin, drazin_from_spectrum, drazin_residuals, DrazinResiduals};
pub use eigen::{eig_near_zero, full_spectrum, Spectrum};
pub use lu::{inverse, is_positive_semidefinite, null_right, solve, LuFactors, ZERO_EIGENVALUE};
pub use matrix::{
    devectorize, kron, sandwich, vectorize, vectorized_identity, ComplexMatrix, ComplexVector,
    C64, I, ONE, ZERO,
};
