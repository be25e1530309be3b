use nalgebra::{Complex, DMatrix};

use super::lu::{LuFactor, Scalar, DEFAULT_PIVOT_TOL};
use super::sparse::SystemMatrix;
use crate::error::{Error, Result};

/// Factorization of `s·E − A` for one fixed shift `s`.
#[derive(Debug, Clone)]
pub struct ShiftedSolver<T: Scalar> {
    shift: T,
    lu: LuFactor<T>,
}

impl<T: Scalar> ShiftedSolver<T> {
    pub fn new(e: &SystemMatrix, a: &SystemMatrix, shift: T) -> Result<Self> {
        Self::with_tol(e, a, shift, DEFAULT_PIVOT_TOL)
    }

    pub fn with_tol(e: &SystemMatrix, a: &SystemMatrix, shift: T, rel_tol: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || e.nrows() != n || e.ncols() != n {
            return Err(Error::dims(format!(
                "shifted pencil needs square E and A of equal size, got {}x{} and {}x{}",
                e.nrows(),
                e.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        let mut entries: Vec<(usize, usize, T)> = e
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, shift * T::from_real(v)))
            .collect();
        entries.extend(a.triplets().into_iter().map(|(i, j, v)| (i, j, -T::from_real(v))));
        let reorder = !(e.is_dense() && a.is_dense());
        let lu = LuFactor::from_triplets(n, &entries, reorder, rel_tol)?;
        Ok(Self { shift, lu })
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    /// `(s·E − A)⁻¹·B`.
    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.lu.solve(b)
    }

    /// `(s·E − A)⁻ᵀ·B`.
    pub fn solve_transpose(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.lu.solve_transpose(b)
    }
}

impl ShiftedSolver<f64> {
    pub fn solve_real(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.lu.solve(b)
    }
}

/// Factor `σ·E − A` for a real shift σ.
pub fn shifted_factor(e: &SystemMatrix, a: &SystemMatrix, sigma: f64) -> Result<ShiftedSolver<f64>> {
    ShiftedSolver::new(e, a, sigma)
}

/// Factor `s·E − A` for a complex point `s`.
pub fn shifted_factor_complex(e: &SystemMatrix, a: &SystemMatrix, s: Complex<f64>) -> Result<ShiftedSolver<Complex<f64>>> {
    ShiftedSolver::new(e, a, s)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    m.map(|v| Complex::new(v, 0.0))
}
