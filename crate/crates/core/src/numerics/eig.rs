//! Generalized eigenvalues of a regular pencil `(A, E)` with nonsingular `E`.

use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix, DVector};

use super::lu::{LuFactor, DEFAULT_PIVOT_TOL};
use super::lyapunov::RealSchur;
use crate::error::{Error, Result};

/// Total order used for every eigenvalue list: real part, then imaginary part.
pub fn eig_order(a: &Complex<f64>, b: &Complex<f64>) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvalues λ of `A·v = λ·E·v`, sorted by `(Re, Im)` ascending.
pub fn gen_eig(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let a_tilde = pencil_matrix(a, e)?;
    let mut vals = RealSchur::new(a_tilde)?.eigenvalues();
    vals.sort_by(eig_order);
    Ok(vals)
}

fn pencil_matrix(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() || a.shape() != e.shape() {
        return Err(Error::dims(format!(
            "pencil matrices must be square and equal in shape, got {:?} and {:?}",
            a.shape(),
            e.shape()
        )));
    }
    let lu = LuFactor::from_dense(e, DEFAULT_PIVOT_TOL).map_err(|err| match err {
        Error::Singular { .. } => Error::invalid("pencil has singular E (descriptor systems are not supported)"),
        other => other,
    })?;
    Ok(lu.solve(a))
}

/// Eigenpairs of the pencil; eigenvectors from inverse iteration on the
/// complex shifted pencil, normalized to unit 2-norm.
pub fn gen_eig_vectors(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<Vec<(Complex<f64>, DVector<Complex<f64>>)>> {
    let vals = gen_eig(a, e)?;
    let n = a.nrows();
    let ac = a.map(|v| Complex::new(v, 0.0));
    let ec = e.map(|v| Complex::new(v, 0.0));
    let scale = a.norm() + e.norm();
    let mut out = Vec::with_capacity(n);
    for (k, &lambda) in vals.iter().enumerate() {
        let delta = 1e-10 * (lambda.norm() + scale).max(1.0);
        let shifted = &ac - &ec * (lambda + Complex::new(delta, delta));
        let lu = LuFactor::from_dense(&shifted, 0.0)?;
        // deterministic start vector, distinct per eigenvalue
        let mut v = DVector::from_fn(n, |i, _| Complex::new(1.0 + ((i * 7 + k * 3) % 11) as f64 / 11.0, 0.0));
        for _ in 0..4 {
            let w = lu.solve_vec(&(&ec * &v));
            let nrm = w.norm();
            if !nrm.is_finite() || nrm == 0.0 {
                return Err(Error::NotConverged("inverse iteration for an eigenvector".into()));
            }
            v = w.unscale(nrm);
        }
        out.push((lambda, v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn companion_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let e = DMatrix::identity(2, 2);
        let vals = gen_eig(&a, &e).unwrap();
        assert!((vals[0] - Complex::new(-2.0, 0.0)).norm() < 1e-12);
        assert!((vals[1] - Complex::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pencil_scaling_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let e1 = DMatrix::identity(6, 6);
        let e2 = &e1 * 2.0;
        let v1 = gen_eig(&a, &e1).unwrap();
        let v2 = gen_eig(&a, &e2).unwrap();
        for (x, y) in v1.iter().zip(&v2) {
            assert!((x * 0.5 - y).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_negative_definite_real_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let a = -(&r * r.transpose() + DMatrix::identity(8, 8) * 0.1);
        let vals = gen_eig(&a, &DMatrix::identity(8, 8)).unwrap();
        assert!(vals.iter().all(|z| z.im == 0.0 && z.re < 0.0));
    }

    #[test]
    fn ordering_is_deterministic_and_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
        let e = DMatrix::from_fn(10, 10, |i, j| if i == j { 2.0 } else { 0.1 * ((i + j) % 3) as f64 });
        let v1 = gen_eig(&a, &e).unwrap();
        let v2 = gen_eig(&a, &e).unwrap();
        assert_eq!(v1, v2);
        assert!(v1.windows(2).all(|w| eig_order(&w[0], &w[1]) != Ordering::Greater));
    }

    #[test]
    fn eigenvector_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 12;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let e = DMatrix::from_fn(n, n, |i, j| if i == j { 3.0 } else { rng.random_range(-0.2..0.2) });
        let ac = a.map(|v| Complex::new(v, 0.0));
        let ec = e.map(|v| Complex::new(v, 0.0));
        for (lambda, v) in gen_eig_vectors(&a, &e).unwrap() {
            let res = (&ac * &v - &ec * &v * lambda).norm();
            assert!(res <= 1e-8 * (a.norm() + lambda.norm() * e.norm()), "residual {res}");
        }
    }

    #[test]
    fn singular_e_rejected() {
        let a = DMatrix::identity(2, 2);
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(gen_eig(&a, &e).is_err());
    }
}
