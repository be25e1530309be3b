//! Linear time-invariant systems `E·ẋ = A·x + B·u`, `y = C·x`.

mod balanced;
mod norms;
mod simulate;
mod transfer;

pub use balanced::{balanced_truncation, BalancedTruncation};
pub use norms::{h2_norm, h2_norm_squared, is_stable, poles};
pub use simulate::{simulate, Excitation};
pub use transfer::{difference_system, eval_transfer, eval_transfer_derivative, to_first_order};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{LuFactor, SparseMatrix, SystemMatrix, DEFAULT_PIVOT_TOL};

/// First-order descriptor-free LTI system without feed-through.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    e: SystemMatrix,
    a: SystemMatrix,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl StateSpaceSystem {
    /// Validate dimensions and reject singular `E`.
    pub fn new(e: SystemMatrix, a: SystemMatrix, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || e.nrows() != n || e.ncols() != n {
            return Err(Error::dims(format!(
                "E ({}x{}) and A ({}x{}) must be square and equal in size",
                e.nrows(),
                e.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::dims(format!("B has {} rows, system order is {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::dims(format!("C has {} columns, system order is {n}", c.ncols())));
        }
        if !e.is_finite() || !a.is_finite() || b.iter().any(|v| !v.is_finite()) || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state-space matrices".into()));
        }
        if n > 0 {
            let entries = e.triplets();
            LuFactor::<f64>::from_triplets(n, &entries, !e.is_dense(), DEFAULT_PIVOT_TOL).map_err(|_| {
                Error::invalid("E is singular; descriptor (DAE) systems are not supported")
            })?;
        }
        Ok(Self { e, a, b, c })
    }

    /// Dense system with `E = I`.
    pub fn dense(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new(SystemMatrix::Dense(DMatrix::identity(n, n)), SystemMatrix::Dense(a), b, c)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn e(&self) -> &SystemMatrix {
        &self.e
    }

    pub fn a(&self) -> &SystemMatrix {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Same dynamics and output map with a different input matrix.
    pub fn with_input(&self, b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() != self.order() {
            return Err(Error::dims("replacement input matrix has the wrong row count"));
        }
        Ok(Self {
            e: self.e.clone(),
            a: self.a.clone(),
            b,
            c: self.c.clone(),
        })
    }

    pub fn with_output(&self, c: DMatrix<f64>) -> Result<Self> {
        if c.ncols() != self.order() {
            return Err(Error::dims("replacement output matrix has the wrong column count"));
        }
        Ok(Self {
            e: self.e.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            c,
        })
    }

    /// Dense copies of `(E, A)`.
    pub fn dense_pencil(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.e.to_dense(), self.a.to_dense())
    }
}

/// Second-order system `M·q̈ + D·q̇ + K·q = F·u`, `y = C_out·q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSystem {
    m: SparseMatrix,
    d: SparseMatrix,
    k: SparseMatrix,
    f: DMatrix<f64>,
    c_out: DMatrix<f64>,
}

impl SecondOrderSystem {
    /// Checks symmetry, `M ≻ 0`, `K ⪰ 0` and `D ⪰ 0`.
    pub fn new(m: SparseMatrix, d: SparseMatrix, k: SparseMatrix, f: DMatrix<f64>, c_out: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        for (name, mat) in [("M", &m), ("D", &d), ("K", &k)] {
            if mat.nrows() != n || mat.ncols() != n {
                return Err(Error::dims(format!("{name} must be {n}x{n}")));
            }
            if !mat.is_symmetric(1e-12) {
                return Err(Error::invalid(format!("{name} must be symmetric")));
            }
        }
        if f.nrows() != n || c_out.ncols() != n {
            return Err(Error::dims("input/output maps do not match the number of degrees of freedom"));
        }
        check_definite(&m, false).map_err(|_| Error::NotPositiveDefinite("mass matrix M must be symmetric positive definite".into()))?;
        check_definite(&k, true).map_err(|_| Error::NotPositiveDefinite("stiffness matrix K must be positive semi-definite".into()))?;
        check_definite(&d, true).map_err(|_| {
            Error::NotPositiveDefinite("damping matrix D must be positive semi-definite (dissipativity)".into())
        })?;
        Ok(Self { m, d, k, f, c_out })
    }

    pub fn dofs(&self) -> usize {
        self.m.nrows()
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.m
    }

    pub fn damping(&self) -> &SparseMatrix {
        &self.d
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.k
    }

    pub fn input_map(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn output_map(&self) -> &DMatrix<f64> {
        &self.c_out
    }

    /// Undamped natural frequencies (rad/s), ascending: `√eig(M⁻¹K)`.
    pub fn natural_frequencies(&self) -> Result<Vec<f64>> {
        let m = self.m.to_dense();
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?;
        let l_inv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(self.dofs(), self.dofs()))
            .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?;
        let k = self.k.to_dense();
        let s = &l_inv * k * l_inv.transpose();
        let s = (&s + s.transpose()) * 0.5;
        let mut w: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        w.sort_by(f64::total_cmp);
        Ok(w)
    }
}

/// Cholesky-based definiteness test; semi-definite matrices get a tiny diagonal shift.
fn check_definite(m: &SparseMatrix, semi: bool) -> Result<()> {
    let mut dense = m.to_dense();
    let n = dense.nrows();
    let scale = dense.amax();
    if semi {
        if scale == 0.0 {
            return Ok(());
        }
        for i in 0..n {
            dense[(i, i)] += 1e-10 * scale;
        }
    }
    dense
        .cholesky()
        .map(|_| ())
        .ok_or_else(|| Error::NotPositiveDefinite(String::new()))
}

/// Sampled output signals on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t: Vec<f64>,
    /// samples × channels
    y: DMatrix<f64>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, y: DMatrix<f64>) -> Result<Self> {
        if t.len() != y.nrows() {
            return Err(Error::dims(format!("{} time stamps but {} samples", t.len(), y.nrows())));
        }
        if t.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time series values".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("time grid must be strictly increasing"));
        }
        Ok(Self { t, y })
    }

    /// Single-channel series.
    pub fn scalar(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new(t, DMatrix::from_vec(n, 1, y))
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.y.ncols()
    }

    pub fn channel(&self, k: usize) -> Vec<f64> {
        self.y.column(k).iter().copied().collect()
    }

    /// Linear interpolation of every channel at `t` (clamped at the ends).
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let p = self.channels();
        if self.t.is_empty() {
            return vec![0.0; p];
        }
        let idx = self.t.partition_point(|&s| s <= t);
        if idx == 0 {
            return self.y.row(0).iter().copied().collect();
        }
        if idx >= self.t.len() {
            return self.y.row(self.t.len() - 1).iter().copied().collect();
        }
        let (t0, t1) = (self.t[idx - 1], self.t[idx]);
        let w = (t - t0) / (t1 - t0);
        (0..p).map(|k| (1.0 - w) * self.y[(idx - 1, k)] + w * self.y[(idx, k)]).collect()
    }

    /// Resample onto another grid by linear interpolation.
    pub fn resample(&self, grid: &[f64]) -> Result<TimeSeries> {
        let p = self.channels();
        let mut y = DMatrix::zeros(grid.len(), p);
        for (i, &t) in grid.iter().enumerate() {
            for (k, v) in self.sample(t).into_iter().enumerate() {
                y[(i, k)] = v;
            }
        }
        TimeSeries::new(grid.to_vec(), y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_e_rejected() {
        let e = SystemMatrix::Dense(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let a = SystemMatrix::Dense(-DMatrix::identity(2, 2));
        let r = StateSpaceSystem::new(e, a, DMatrix::zeros(2, 1), DMatrix::zeros(1, 2));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn dimension_checks() {
        let a = DMatrix::from_element(2, 2, -1.0);
        assert!(StateSpaceSystem::dense(a.clone(), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2)).is_err());
        assert!(StateSpaceSystem::dense(a, DMatrix::zeros(2, 1), DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn second_order_gates() {
        let one = SparseMatrix::identity(1);
        let neg = one.scaled(-1.0);
        let f = DMatrix::from_element(1, 1, 1.0);
        assert!(SecondOrderSystem::new(one.clone(), one.clone(), one.clone(), f.clone(), f.clone()).is_ok());
        assert!(matches!(
            SecondOrderSystem::new(neg.clone(), one.clone(), one.clone(), f.clone(), f.clone()),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(SecondOrderSystem::new(one.clone(), neg, one.clone(), f.clone(), f.clone()).is_err());
        let asym = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 0.5), (1, 1, 1.0)]).unwrap();
        let f2 = DMatrix::zeros(2, 1);
        let c2 = DMatrix::zeros(1, 2);
        let id2 = SparseMatrix::identity(2);
        assert!(SecondOrderSystem::new(id2.clone(), id2.clone(), asym, f2, c2).is_err());
    }

    #[test]
    fn time_series_validation_and_sampling() {
        assert!(TimeSeries::scalar(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::scalar(vec![0.0, 1.0], vec![1.0]).is_err());
        let ts = TimeSeries::scalar(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(ts.sample(0.5), vec![1.0]);
        assert_eq!(ts.sample(-1.0), vec![0.0]);
        assert_eq!(ts.sample(5.0), vec![4.0]);
    }
}
