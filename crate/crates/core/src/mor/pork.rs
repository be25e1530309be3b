use nalgebra::DMatrix;

use super::KrylovFactors;
use crate::error::{Error, Result};
use crate::lti::StateSpaceSystem;
use crate::numerics::{LyapunovSolver, SystemMatrix};

/// Pseudo-optimal ROM together with its squared H₂ norm.
#[derive(Debug, Clone)]
pub(crate) struct PorkStep {
    pub rom: StateSpaceSystem,
    pub energy: f64,
}

/// Pseudo-optimal reduced model on the span of `factors.v`.
///
/// With `Q·S + Sᵀ·Q = Lᵀ·L`: `B_r = −Q⁻¹·Lᵀ`, `A_r = S + B_r·L`, `E_r = I`,
/// `C_r = C·V`. The poles of the result are the mirror images of the shifts.
pub fn pork(factors: &KrylovFactors, c: &DMatrix<f64>) -> Result<StateSpaceSystem> {
    Ok(pork_step(factors, c)?.rom)
}

pub(crate) fn pork_step(factors: &KrylovFactors, c: &DMatrix<f64>) -> Result<PorkStep> {
    let k = factors.order();
    if c.ncols() != factors.v.nrows() {
        return Err(Error::dims(format!(
            "output map has {} columns, basis has {} rows",
            c.ncols(),
            factors.v.nrows()
        )));
    }
    let (s, l) = (&factors.s, &factors.l);
    let solver = LyapunovSolver::new(&(-s.transpose()), None).map_err(|err| match err {
        Error::Unstable { real_part } => Error::DegenerateShift(format!(
            "S_V has an eigenvalue with real part {:.3e}; shifts must lie in the open right half-plane",
            -real_part
        )),
        other => other,
    })?;
    let q = solver.solve(&(l.transpose() * l))?;
    let q = (&q + q.transpose()) * 0.5;
    let chol = q.clone().cholesky().ok_or_else(|| {
        Error::DegenerateShift("Q is not positive definite; (L_V, S_V) is unobservable".into())
    })?;
    let br = -chol.solve(&l.transpose());
    let ar = s + &br * l;
    let cr = c * &factors.v;
    // ‖G_r‖² = trace(C_r·Q⁻¹·C_rᵀ): Q⁻¹ is the controllability Gramian of the ROM.
    let half = chol
        .l()
        .solve_lower_triangular(&cr.transpose())
        .ok_or_else(|| Error::DegenerateShift("Cholesky factor of Q is singular".into()))?;
    let energy = half.norm_squared();
    if !energy.is_finite() || br.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pseudo-optimal reduced model".into()));
    }
    let rom = StateSpaceSystem::new(
        SystemMatrix::Dense(DMatrix::identity(k, k)),
        SystemMatrix::Dense(ar),
        br,
        cr,
    )?;
    Ok(PorkStep { rom, energy })
}

/// Residual input `B⊥ = B − E·V·B_r`; the remaining error is
/// `G − G_r = C(sE − A)⁻¹B⊥ · (I + L_V(sI − A_r)⁻¹B_r)` with an all-pass right factor.
pub fn residual_input(sys: &StateSpaceSystem, factors: &KrylovFactors, rom: &StateSpaceSystem) -> Result<DMatrix<f64>> {
    if factors.v.nrows() != sys.order() || factors.v.ncols() != rom.order() || rom.inputs() != sys.inputs() {
        return Err(Error::dims("Krylov factors, ROM and system do not match"));
    }
    Ok(sys.b() - sys.e().mul_dense(&(&factors.v * rom.b())))
}
