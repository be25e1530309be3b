use nalgebra::Complex;

use super::StateSpaceSystem;
use crate::error::{Error, Result};
use crate::numerics::{gen_eig, LyapunovSolver};

/// Poles of the system sorted by `(Re, Im)`.
pub fn poles(sys: &StateSpaceSystem) -> Result<Vec<Complex<f64>>> {
    let (e, a) = sys.dense_pencil();
    gen_eig(&a, &e)
}

/// Strict asymptotic stability: every pole has `Re < 0`.
pub fn is_stable(sys: &StateSpaceSystem) -> Result<bool> {
    Ok(poles(sys)?.iter().all(|p| p.re < 0.0))
}

/// `‖G‖²_H₂` from the controllability Gramian `A·P·Eᵀ + E·P·Aᵀ + B·Bᵀ = 0`.
///
/// Both `trace(C·P·Cᵀ)` and `‖C·Z‖²_F` with a Hammarling factor `P = Z·Zᴴ`
/// are formed. The factor keeps near-zero norms (differences of nearly equal
/// systems) accurate to the square of the rounding error, but it can lose
/// digits on strongly non-normal pencils. It is kept only when it agrees with
/// the trace to within the trace's rounding estimate `4·n·ε·Σ |C|·|P|·|C|ᵀ`.
pub fn h2_norm_squared(sys: &StateSpaceSystem) -> Result<f64> {
    if sys.order() == 0 {
        return Ok(0.0);
    }
    let (e, a) = sys.dense_pencil();
    let solver = if e.is_identity(0.0) {
        LyapunovSolver::new(&a, None)?
    } else {
        LyapunovSolver::new(&a, Some(&e))?
    };
    let b = sys.b();
    let c = sys.c();
    let p = solver.solve(&(b * b.transpose()))?;
    let trace = (c * &p * c.transpose()).trace();
    let magnitude = (c.abs() * p.abs() * c.abs().transpose()).trace();
    let z = solver.solve_factor(b)?;
    let factored = (c.map(|v| Complex::new(v, 0.0)) * z).norm_squared();
    if !trace.is_finite() || !factored.is_finite() {
        return Err(Error::NonFinite("H2 norm".into()));
    }
    let rounding = 4.0 * sys.order() as f64 * f64::EPSILON * magnitude;
    let value = if (factored - trace).abs() <= rounding {
        factored
    } else {
        trace
    };
    Ok(value.max(0.0))
}

pub fn h2_norm(sys: &StateSpaceSystem) -> Result<f64> {
    Ok(h2_norm_squared(sys)?.sqrt())
}
