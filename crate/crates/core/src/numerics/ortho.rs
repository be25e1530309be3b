use nalgebra::DMatrix;

use super::sparse::SystemMatrix;
use crate::error::{Error, Result};

/// Default relative rank threshold for basis operations.
pub const DEFAULT_RANK_TOL: f64 = 1e-14;

/// Thin QR factorization `V = Q·R` with a rank check on `R`'s diagonal.
pub fn orthonormalize(v: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    orthonormalize_with_tol(v, DEFAULT_RANK_TOL)
}

pub fn orthonormalize_with_tol(v: &DMatrix<f64>, rel_tol: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, k) = v.shape();
    if k > n {
        return Err(Error::RankDeficient(format!("{k} columns in dimension {n}")));
    }
    // Two passes of Gram–Schmidt keep orthogonality at machine precision.
    let mut q = v.clone();
    let mut r = DMatrix::<f64>::zeros(k, k);
    let scale = v.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                r[(i, j)] += proj;
                let qi = q.column(i).into_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
        }
        let nrm = q.column(j).norm();
        if !(nrm > rel_tol * scale) {
            return Err(Error::RankDeficient(format!(
                "column {j} is linearly dependent on the previous ones (residual {nrm:.3e})"
            )));
        }
        r[(j, j)] = nrm;
        q.column_mut(j).unscale_mut(nrm);
    }
    Ok((q, r))
}

/// Rescale bases so that `W'ᵀ·E·V' = I` while keeping their column spans.
pub fn biorthonormalize(v: &DMatrix<f64>, w: &DMatrix<f64>, e: &SystemMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if v.shape() != w.shape() || e.nrows() != v.nrows() {
        return Err(Error::dims("biorthonormalization operands differ in shape"));
    }
    let (qv, _) = orthonormalize(v)?;
    let (qw, _) = orthonormalize(w)?;
    let m = qw.tr_mul(&e.mul_dense(&qv));
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > DEFAULT_RANK_TOL * smax.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient(format!(
            "Wᵀ·E·V is numerically singular (σ_min = {smin:.3e}, σ_max = {smax:.3e})"
        )));
    }
    let mut u = svd.u.expect("requested U");
    let mut vt = svd.v_t.expect("requested Vᵀ");
    // singular vector pairs are sign-ambiguous; fix the sign deterministically
    for j in 0..vt.nrows() {
        let (_, pivot) = vt.row(j).iter().enumerate().fold((0, 0.0f64), |best, (i, &x)| {
            if x.abs() > best.1.abs() { (i, x) } else { best }
        });
        if pivot < 0.0 {
            vt.row_mut(j).neg_mut();
            u.column_mut(j).neg_mut();
        }
    }
    let inv_sqrt = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s.sqrt()));
    let v_new = &qv * vt.transpose() * &inv_sqrt;
    let w_new = &qw * u * &inv_sqrt;
    Ok((v_new, w_new))
}
