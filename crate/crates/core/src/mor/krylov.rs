use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lti::StateSpaceSystem;
use crate::numerics::{orthonormalize, shifted_factor, ShiftedSolver};

/// Rational Krylov basis together with the factors of the Sylvester identity
/// `A·V = E·V·S_V + B·L_V`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovFactors {
    pub v: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

impl KrylovFactors {
    pub fn order(&self) -> usize {
        self.v.ncols()
    }

    /// `‖A·V − E·V·S_V − B·L_V‖_F` with `B` taken from `sys`.
    pub fn sylvester_residual(&self, sys: &StateSpaceSystem) -> f64 {
        let av = sys.a().mul_dense(&self.v);
        let evs = sys.e().mul_dense(&(&self.v * &self.s));
        (av - evs - sys.b() * &self.l).norm()
    }

    /// Replace `V` by an orthonormal basis of the same span and transform the
    /// factors with it (`V = Q·R`: `S ← R·S·R⁻¹`, `L ← L·R⁻¹`).
    pub fn orthonormalized(&self) -> Result<Self> {
        let (q, r) = orthonormalize(&self.v)?;
        let k = r.nrows();
        let r_inv = r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .ok_or_else(|| Error::RankDeficient("triangular factor of the Krylov basis".into()))?;
        Ok(Self {
            v: q,
            s: &r * &self.s * &r_inv,
            l: &self.l * r_inv,
        })
    }
}

/// Orthonormalized rational Krylov factors for distinct positive real shifts.
pub fn rational_krylov(sys: &StateSpaceSystem, shifts: &[f64]) -> Result<KrylovFactors> {
    rational_krylov_raw(sys, shifts)?.orthonormalized()
}

/// Unnormalized factors: column block `i` is `(σᵢE − A)⁻¹B`, `S_V = diag(σ)`, `L_V = −[I … I]`.
pub fn rational_krylov_raw(sys: &StateSpaceSystem, shifts: &[f64]) -> Result<KrylovFactors> {
    for (i, a) in shifts.iter().enumerate() {
        if shifts[..i].contains(a) {
            return Err(Error::DegenerateShift(format!("shift {a} appears more than once")));
        }
    }
    let chain: Vec<(f64, usize)> = shifts.iter().map(|&s| (s, 1)).collect();
    rational_krylov_chain(sys, &chain)
}

/// Unnormalized factors with Jordan chains for repeated shifts: a shift of
/// multiplicity `k` contributes `(σE − A)⁻¹B, ((σE − A)⁻¹E)·(σE − A)⁻¹B, …`.
pub fn rational_krylov_chain(sys: &StateSpaceSystem, shifts: &[(f64, usize)]) -> Result<KrylovFactors> {
    validate_shifts(shifts.iter().map(|p| p.0))?;
    let n = sys.order();
    let m = sys.inputs();
    let k: usize = shifts.iter().map(|p| p.1).sum();
    if k == 0 {
        return Err(Error::invalid("at least one shift is required"));
    }
    if k * m > n {
        return Err(Error::invalid(format!("basis size {} exceeds system order {n}", k * m)));
    }
    let mut v = DMatrix::zeros(n, k * m);
    let mut s = DMatrix::zeros(k * m, k * m);
    let mut l = DMatrix::zeros(m, k * m);
    let mut col = 0;
    for &(sigma, mult) in shifts {
        let solver = factor(sys, sigma)?;
        let mut block = solver.solve(sys.b());
        for j in 0..mult {
            if j > 0 {
                block = solver.solve(&sys.e().mul_dense(&block));
                for i in 0..m {
                    s[(col - m + i, col + i)] = -1.0;
                }
            } else {
                for i in 0..m {
                    l[(i, col + i)] = -1.0;
                }
            }
            for i in 0..m {
                s[(col + i, col + i)] = sigma;
            }
            v.view_mut((0, col), (n, m)).copy_from(&block);
            col += m;
        }
    }
    Ok(KrylovFactors { v, s, l })
}

/// Nested factors for a shift sequence: `w₁ = (σ₁E − A)⁻¹B`,
/// `w_k = (σ_kE − A)⁻¹E·w_{k−1}`. For distinct shifts the span equals that of
/// the raw basis; as shifts coalesce the basis stays well conditioned and
/// turns into a Jordan chain. `S_V` is upper bidiagonal (`σ_k`, `−1`), `L_V = (−1, 0, …)`.
pub fn rational_krylov_nested(sys: &StateSpaceSystem, shifts: &[f64]) -> Result<KrylovFactors> {
    validate_shifts(shifts.iter().copied())?;
    let n = sys.order();
    let m = sys.inputs();
    let k = shifts.len();
    if k == 0 {
        return Err(Error::invalid("at least one shift is required"));
    }
    if k * m > n {
        return Err(Error::invalid(format!("basis size {} exceeds system order {n}", k * m)));
    }
    let mut v = DMatrix::zeros(n, k * m);
    let mut s = DMatrix::zeros(k * m, k * m);
    let mut l = DMatrix::zeros(m, k * m);
    let mut block = sys.b().clone();
    for (j, &sigma) in shifts.iter().enumerate() {
        let col = j * m;
        let rhs = if j == 0 { block.clone() } else { sys.e().mul_dense(&block) };
        block = factor(sys, sigma)?.solve(&rhs);
        for i in 0..m {
            s[(col + i, col + i)] = sigma;
            if j == 0 {
                l[(i, col + i)] = -1.0;
            } else {
                s[(col - m + i, col + i)] = -1.0;
            }
        }
        v.view_mut((0, col), (n, m)).copy_from(&block);
    }
    Ok(KrylovFactors { v, s, l })
}

/// Output-side counterpart of [`rational_krylov_nested`] built from `Cᵀ` with
/// transposed solves and `Eᵀ`.
pub(crate) fn output_basis_nested(sys: &StateSpaceSystem, shifts: &[f64]) -> Result<DMatrix<f64>> {
    validate_shifts(shifts.iter().copied())?;
    let n = sys.order();
    let p = sys.outputs();
    let mut w = DMatrix::zeros(n, shifts.len() * p);
    let mut block = sys.c().transpose();
    for (j, &sigma) in shifts.iter().enumerate() {
        let rhs = if j == 0 { block.clone() } else { sys.e().tr_mul_dense(&block) };
        block = factor(sys, sigma)?.solve_transpose(&rhs);
        w.view_mut((0, j * p), (n, p)).copy_from(&block);
    }
    Ok(w)
}

fn validate_shifts(shifts: impl Iterator<Item = f64>) -> Result<()> {
    for s in shifts {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!("shifts must be finite positive reals, got {s}")));
        }
    }
    Ok(())
}

fn factor(sys: &StateSpaceSystem, sigma: f64) -> Result<ShiftedSolver<f64>> {
    shifted_factor(sys.e(), sys.a(), sigma).map_err(|err| match err {
        Error::Singular { .. } => Error::DegenerateShift(format!("shift {sigma} coincides with a pole of the system")),
        other => other,
    })
}
