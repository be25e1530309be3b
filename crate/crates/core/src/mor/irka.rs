use nalgebra::DMatrix;

use super::krylov::{output_basis_nested, rational_krylov_nested};
use crate::error::{Error, Result};
use crate::lti::{poles, StateSpaceSystem};
use crate::numerics::{biorthonormalize, SystemMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrkaOptions {
    /// Convergence threshold on the maximum relative shift change.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IrkaOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct IrkaResult {
    pub rom: StateSpaceSystem,
    /// Shifts (ascending) the returned ROM was projected at; it interpolates
    /// `G` and `G′` there.
    pub shifts: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Last maximum relative shift change.
    pub shift_change: f64,
    /// Stability is not guaranteed by IRKA; checked on the returned ROM.
    pub stable: bool,
}

/// Iterative rational Krylov with real shifts. Each iteration projects onto
/// the nested input and output bases at the current shifts (spanning
/// `(σᵢE − A)⁻¹B` and `(σᵢE − A)⁻ᵀCᵀ`, with Hermite chains for repeated
/// shifts) and replaces the shifts by the mirrored real parts of the ROM poles.
pub fn irka(sys: &StateSpaceSystem, r: usize, init_shifts: &[f64], opts: &IrkaOptions) -> Result<IrkaResult> {
    if sys.inputs() != 1 || sys.outputs() != 1 {
        return Err(Error::Unsupported("IRKA is implemented for single-input single-output systems".into()));
    }
    if r == 0 || r > sys.order() {
        return Err(Error::invalid(format!("reduced order must satisfy 1 <= r <= {}", sys.order())));
    }
    if init_shifts.len() != r {
        return Err(Error::invalid(format!("{} initial shifts given for order {r}", init_shifts.len())));
    }
    let mut shifts: Vec<f64> = init_shifts.to_vec();
    if shifts.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::invalid("initial shifts must be finite positive reals"));
    }
    shifts.sort_by(f64::total_cmp);
    let mut iterations = 0;
    let (rom, change) = loop {
        iterations += 1;
        let rom = project(sys, &shifts)?;
        let mut next: Vec<f64> = poles(&rom)?.iter().map(|p| p.re.abs()).collect();
        next.sort_by(f64::total_cmp);
        if next.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::DegenerateShift("reduced model has a pole on the imaginary axis".into()));
        }
        let change = shifts
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / a.abs())
            .fold(0.0, f64::max);
        if change <= opts.tol || iterations >= opts.max_iter {
            break (rom, change);
        }
        shifts = next;
    };
    let stable = poles(&rom)?.iter().all(|p| p.re < 0.0);
    Ok(IrkaResult {
        rom,
        shifts,
        iterations,
        converged: change <= opts.tol,
        shift_change: change,
        stable,
    })
}

/// Two-sided projection at sorted real shifts.
fn project(sys: &StateSpaceSystem, shifts: &[f64]) -> Result<StateSpaceSystem> {
    let v = rational_krylov_nested(sys, shifts)?.v;
    let w = output_basis_nested(sys, shifts)?;
    let (v, w) = biorthonormalize(&v, &w, sys.e())?;
    let ar = w.transpose() * sys.a().mul_dense(&v);
    let br = w.transpose() * sys.b();
    let cr = sys.c() * &v;
    let r = v.ncols();
    StateSpaceSystem::new(SystemMatrix::Dense(DMatrix::identity(r, r)), SystemMatrix::Dense(ar), br, cr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{eval_transfer, eval_transfer_derivative};
    use nalgebra::Complex;

    #[test]
    fn scalar_fixed_point() {
        let g = StateSpaceSystem::dense(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let res = irka(&g, 1, &[3.0], &IrkaOptions::default()).unwrap();
        assert!(res.converged);
        assert!((res.shifts[0] - 1.0).abs() < 1e-12);
        let s = Complex::new(0.2, 0.9);
        assert!((eval_transfer(&g, s).unwrap()[(0, 0)] - eval_transfer(&res.rom, s).unwrap()[(0, 0)]).norm() < 1e-12);
    }

    #[test]
    fn hermite_conditions() {
        let n = 8;
        let a = DMatrix::from_fn(n, n, |i, j| match (i as i64 - j as i64).abs() {
            0 => -2.0 - 0.3 * i as f64,
            1 => 1.0,
            _ => 0.0,
        });
        let b = DMatrix::from_fn(n, 1, |i, _| 1.0 / (1.0 + i as f64));
        let c = DMatrix::from_fn(1, n, |_, j| if j % 2 == 0 { 1.0 } else { 0.5 });
        let g = StateSpaceSystem::dense(a, b, c).unwrap();
        let res = irka(&g, 3, &[0.5, 1.0, 2.0], &IrkaOptions::default()).unwrap();
        assert!(res.converged && res.stable);
        for &s in &res.shifts {
            let z = Complex::new(s, 0.0);
            let (g0, r0) = (eval_transfer(&g, z).unwrap()[(0, 0)], eval_transfer(&res.rom, z).unwrap()[(0, 0)]);
            let (g1, r1) = (
                eval_transfer_derivative(&g, z).unwrap()[(0, 0)],
                eval_transfer_derivative(&res.rom, z).unwrap()[(0, 0)],
            );
            assert!((g0 - r0).norm() <= 1e-10 * g0.norm());
            assert!((g1 - r1).norm() <= 1e-8 * g1.norm());
        }
    }
}
