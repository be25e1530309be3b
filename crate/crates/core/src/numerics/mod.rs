//! Dense and sparse linear-algebra kernels.
//!
//! Dense storage and the Schur/SVD/QR building blocks come from `nalgebra`;
//! the banded sparse LU, the Bartels–Stewart Lyapunov solver and the basis
//! utilities live here.

mod eig;
mod lu;
mod lyapunov;
mod ortho;
mod shifted;
mod sparse;

pub use eig::{eig_order, gen_eig, gen_eig_vectors};
pub use lu::{lu_solve, lu_solve_with_tol, LuFactor, Scalar, DEFAULT_PIVOT_TOL};
pub use lyapunov::{lyapunov_solve, LyapunovSolver, RealSchur, MAX_DENSE_ORDER};
pub use ortho::{biorthonormalize, orthonormalize, orthonormalize_with_tol, DEFAULT_RANK_TOL};
pub use shifted::{shifted_factor, shifted_factor_complex, to_complex, ShiftedSolver};
pub use sparse::{SparseMatrix, SystemMatrix};

pub type DenseMatrix = nalgebra::DMatrix<f64>;
