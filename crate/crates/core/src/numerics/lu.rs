//! Banded LU factorization with partial pivoting.
//!
//! Matrices are optionally reordered with reverse Cuthill–McKee first, so the
//! sparse HFM pencils from 1D finite elements factor in `O(n·w²)` for a small
//! bandwidth `w`. Dense matrices end up with full bandwidth and the same code
//! degenerates to ordinary Gaussian elimination with row pivoting.

use nalgebra::{ComplexField, DMatrix, DVector};

use super::sparse::reverse_cuthill_mckee;
use crate::error::{Error, Result};

/// Default relative pivot threshold.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-14;

/// Scalar types the factorization supports (`f64` and `Complex<f64>`).
pub trait Scalar: ComplexField<RealField = f64> + Copy {}
impl Scalar for f64 {}
impl Scalar for nalgebra::Complex<f64> {}

/// LU factors `P·Â = L·U` of a (symmetrically permuted) banded matrix `Â`.
#[derive(Debug, Clone)]
pub struct LuFactor<T: Scalar> {
    n: usize,
    kl: usize,
    // Upper bandwidth of U after pivoting (original ku + kl).
    ku: usize,
    width: usize,
    band: Vec<T>,
    lower: Vec<T>,
    pivots: Vec<usize>,
    // perm[new] = old when a symmetric reordering was applied.
    perm: Option<Vec<usize>>,
}

impl<T: Scalar> LuFactor<T> {
    /// Factor the `n×n` matrix given by its nonzero triples.
    ///
    /// `reorder` applies reverse Cuthill–McKee before factoring. `rel_tol`
    /// scales the singularity threshold by the matrix ∞-norm.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, T)], reorder: bool, rel_tol: f64) -> Result<Self> {
        let perm = if reorder && n > 2 {
            let mut adj = vec![Vec::new(); n];
            for &(i, j, _) in entries {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
            for a in &mut adj {
                a.sort_unstable();
                a.dedup();
            }
            Some(reverse_cuthill_mckee(&adj))
        } else {
            None
        };
        let inv: Vec<usize> = match &perm {
            Some(p) => {
                let mut inv = vec![0; n];
                for (new, &old) in p.iter().enumerate() {
                    inv[old] = new;
                }
                inv
            }
            None => (0..n).collect(),
        };

        let mut kl = 0usize;
        let mut ku = 0usize;
        let mut row_sum = vec![0.0f64; n];
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::dims(format!("entry ({i}, {j}) outside {n}x{n}")));
            }
            if !v.modulus().is_finite() {
                return Err(Error::NonFinite(format!("matrix entry ({i}, {j})")));
            }
            let (pi, pj) = (inv[i], inv[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
            row_sum[i] += v.modulus();
        }
        let norm = row_sum.into_iter().fold(0.0, f64::max);
        let threshold = rel_tol * norm;

        let ku_total = (ku + kl).min(n.saturating_sub(1));
        let width = kl + ku_total + 1;
        let mut band = vec![T::zero(); n * width];
        for &(i, j, v) in entries {
            let (pi, pj) = (inv[i], inv[j]);
            band[pi * width + (pj + kl - pi)] += v;
        }

        let mut lu = Self {
            n,
            kl,
            ku: ku_total,
            width,
            band,
            lower: vec![T::zero(); n * kl.max(1)],
            pivots: vec![0; n],
            perm,
        };
        lu.factor(threshold)?;
        Ok(lu)
    }

    /// Factor a dense square matrix without reordering.
    pub fn from_dense(m: &DMatrix<T>, rel_tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims(format!("LU of a non-square {}x{} matrix", m.nrows(), m.ncols())));
        }
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != T::zero() {
                    entries.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), &entries, false, rel_tol)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn factor(&mut self, threshold: f64) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + self.ku).min(n - 1);

            let mut p = k;
            let mut best = self.band[self.idx(k, k)].modulus();
            for i in k + 1..=last_row {
                let v = self.band[self.idx(i, k)].modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > threshold) || best == 0.0 {
                return Err(Error::Singular {
                    column: k,
                    pivot: best,
                    threshold,
                });
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.band.swap(a, b);
                }
            }
            let pivot = self.band[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.band[ik] / pivot;
                self.band[ik] = T::zero();
                self.lower[k * kl.max(1) + (i - k - 1)] = l;
                if l == T::zero() {
                    continue;
                }
                let row_k = self.idx(k, k);
                let row_i = self.idx(i, k);
                for off in 1..=(last_col - k) {
                    let u = self.band[row_k + off];
                    self.band[row_i + off] -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A·x = b` in place (b in original ordering).
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let kl = self.kl;
        let mut x: Vec<T> = match &self.perm {
            Some(p) => p.iter().map(|&old| b[old]).collect(),
            None => b.to_vec(),
        };
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != T::zero() {
                let last = (k + kl).min(n - 1);
                for i in k + 1..=last {
                    x[i] -= self.lower[k * kl.max(1) + (i - k - 1)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let last = (k + self.ku).min(n - 1);
            let row = self.idx(k, k);
            let mut acc = x[k];
            for j in k + 1..=last {
                acc -= self.band[row + (j - k)] * x[j];
            }
            x[k] = acc / self.band[row];
        }
        match &self.perm {
            Some(p) => {
                for (new, &old) in p.iter().enumerate() {
                    b[old] = x[new];
                }
            }
            None => b.copy_from_slice(&x),
        }
    }

    /// Solve `Aᵀ·x = b` in place (plain transpose, not conjugate).
    pub fn solve_transpose_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let kl = self.kl;
        let mut x: Vec<T> = match &self.perm {
            Some(p) => p.iter().map(|&old| b[old]).collect(),
            None => b.to_vec(),
        };
        // Uᵀ y = b (forward).
        for k in 0..n {
            let row = self.idx(k, k);
            let xk = x[k] / self.band[row];
            x[k] = xk;
            let last = (k + self.ku).min(n - 1);
            for j in k + 1..=last {
                x[j] -= self.band[row + (j - k)] * xk;
            }
        }
        // Undo the elimination sequence in reverse.
        for k in (0..n).rev() {
            let last = (k + kl).min(n - 1);
            let mut acc = x[k];
            for i in k + 1..=last {
                acc -= self.lower[k * kl.max(1) + (i - k - 1)] * x[i];
            }
            x[k] = acc;
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
        }
        match &self.perm {
            Some(p) => {
                for (new, &old) in p.iter().enumerate() {
                    b[old] = x[new];
                }
            }
            None => b.copy_from_slice(&x),
        }
    }

    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(b.nrows(), self.n, "right-hand side has the wrong number of rows");
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
        x
    }

    pub fn solve_transpose(&self, b: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(b.nrows(), self.n, "right-hand side has the wrong number of rows");
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            self.solve_transpose_in_place(col.as_mut_slice());
        }
        x
    }

    pub fn solve_vec(&self, b: &DVector<T>) -> DVector<T> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }
}

/// Solve `A·X = B` for dense square `A` with partial pivoting.
pub fn lu_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    lu_solve_with_tol(a, b, DEFAULT_PIVOT_TOL)
}

pub fn lu_solve_with_tol(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    if b.nrows() != a.nrows() {
        return Err(Error::dims(format!(
            "right-hand side has {} rows, matrix has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    let lu = LuFactor::from_dense(a, rel_tol)?;
    Ok(lu.solve(b))
}
