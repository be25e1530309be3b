use nalgebra::{Complex, DMatrix};

use super::{SecondOrderSystem, StateSpaceSystem};
use crate::error::{Error, Result};
use crate::numerics::{shifted_factor_complex, to_complex, SparseMatrix, SystemMatrix};

/// Rewrite `M·q̈ + D·q̇ + K·q = F·u` over the state `(q, q̇)`:
/// `E = diag(I, M)`, `A = [[0, I], [−K, −D]]`, `B = [0; F]`, `C = [C_out, 0]`.
pub fn to_first_order(sos: &SecondOrderSystem) -> Result<StateSpaceSystem> {
    let n = sos.dofs();
    let id = SparseMatrix::identity(n);
    let e = SparseMatrix::block_diag(&[&id, sos.mass()]);
    let neg_k = sos.stiffness().scaled(-1.0);
    let neg_d = sos.damping().scaled(-1.0);
    let a = SparseMatrix::from_blocks(&[n, n], &[n, n], &[(0, 1, &id), (1, 0, &neg_k), (1, 1, &neg_d)])?;
    let m = sos.input_map().ncols();
    let p = sos.output_map().nrows();
    let mut b = DMatrix::zeros(2 * n, m);
    b.view_mut((n, 0), (n, m)).copy_from(sos.input_map());
    let mut c = DMatrix::zeros(p, 2 * n);
    c.view_mut((0, 0), (p, n)).copy_from(sos.output_map());
    StateSpaceSystem::new(SystemMatrix::Sparse(e), SystemMatrix::Sparse(a), b, c)
}

/// `G(s) = C·(s·E − A)⁻¹·B`.
pub fn eval_transfer(sys: &StateSpaceSystem, s: Complex<f64>) -> Result<DMatrix<Complex<f64>>> {
    let solver = shifted_factor_complex(sys.e(), sys.a(), s).map_err(pole_error(s))?;
    let x = solver.solve(&to_complex(sys.b()));
    Ok(to_complex(sys.c()) * x)
}

/// `G′(s) = −C·(s·E − A)⁻¹·E·(s·E − A)⁻¹·B`.
pub fn eval_transfer_derivative(sys: &StateSpaceSystem, s: Complex<f64>) -> Result<DMatrix<Complex<f64>>> {
    let solver = shifted_factor_complex(sys.e(), sys.a(), s).map_err(pole_error(s))?;
    let x = solver.solve(&to_complex(sys.b()));
    let ex = to_complex(&sys.e().mul_dense(&x.map(|z| z.re))) + to_complex(&sys.e().mul_dense(&x.map(|z| z.im))) * Complex::new(0.0, 1.0);
    let y = solver.solve(&ex);
    Ok(-(to_complex(sys.c()) * y))
}

fn pole_error(s: Complex<f64>) -> impl Fn(Error) -> Error {
    move |err| match err {
        Error::Singular { .. } => Error::invalid(format!("s = {s} is (numerically) a pole of the system")),
        other => other,
    }
}

/// Realization of `G₁ − G₂`: block-diagonal pencil, stacked inputs, `C = [C₁, −C₂]`.
pub fn difference_system(sys1: &StateSpaceSystem, sys2: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    if sys1.inputs() != sys2.inputs() || sys1.outputs() != sys2.outputs() {
        return Err(Error::dims(format!(
            "input/output counts differ: {}x{} vs {}x{}",
            sys1.outputs(),
            sys1.inputs(),
            sys2.outputs(),
            sys2.inputs()
        )));
    }
    let (n1, n2) = (sys1.order(), sys2.order());
    let (m, p) = (sys1.inputs(), sys1.outputs());
    let e = SystemMatrix::block_diag(&[sys1.e(), sys2.e()]);
    let a = SystemMatrix::block_diag(&[sys1.a(), sys2.a()]);
    let mut b = DMatrix::zeros(n1 + n2, m);
    b.view_mut((0, 0), (n1, m)).copy_from(sys1.b());
    b.view_mut((n1, 0), (n2, m)).copy_from(sys2.b());
    let mut c = DMatrix::zeros(p, n1 + n2);
    c.view_mut((0, 0), (p, n1)).copy_from(sys1.c());
    c.view_mut((0, n1), (p, n2)).copy_from(&(-sys2.c()));
    StateSpaceSystem::new(e, a, b, c)
}
