use nalgebra::DMatrix;

use super::StateSpaceSystem;
use crate::error::{Error, Result};
use crate::numerics::{lu_solve, LyapunovSolver};

/// Balanced-truncation result.
#[derive(Debug, Clone)]
pub struct BalancedTruncation {
    pub rom: StateSpaceSystem,
    /// All Hankel singular values of the full system, descending.
    pub hankel_values: Vec<f64>,
}

impl BalancedTruncation {
    /// `2·Σ_{i>r} σᵢ`.
    pub fn error_bound(&self) -> f64 {
        2.0 * self.hankel_values.iter().skip(self.rom.order()).sum::<f64>()
    }
}

/// Square-root balanced truncation to order `r` (dense). States whose Hankel
/// value is below `1e-14·σ₁` are always dropped, so the ROM can be smaller
/// than `r`.
pub fn balanced_truncation(sys: &StateSpaceSystem, r: usize) -> Result<BalancedTruncation> {
    let n = sys.order();
    if r == 0 || r > n {
        return Err(Error::invalid(format!("target order must satisfy 1 <= r <= {n}, got {r}")));
    }
    let (e, a) = sys.dense_pencil();
    let (a, b) = if e.is_identity(0.0) {
        (a, sys.b().clone())
    } else {
        (lu_solve(&e, &a)?, lu_solve(&e, sys.b())?)
    };
    let c = sys.c();
    let solver = LyapunovSolver::new(&a, None)?;
    let p = solver.solve(&(&b * b.transpose()))?;
    let q = solver.solve_dual(&(c.transpose() * c))?;
    let lp = psd_factor(&p);
    let lq = psd_factor(&q);

    let svd = (lq.transpose() * &lp).svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let hankel_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let s_max = hankel_values.first().copied().unwrap_or(0.0);
    // Like SLICOT's AB09AD, never go beyond the numerically minimal order.
    let r = hankel_values.iter().take(r).take_while(|&&s| s > 1e-14 * s_max).count();
    if r == 0 {
        return Err(Error::RankDeficient("system has no numerically significant Hankel value".into()));
    }
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᵀ");
    let mut t = DMatrix::zeros(n, r);
    let mut w = DMatrix::zeros(n, r);
    for (k, &i) in order.iter().take(r).enumerate() {
        let scale = 1.0 / hankel_values[k].sqrt();
        t.set_column(k, &(&lp * vt.row(i).transpose() * scale));
        w.set_column(k, &(&lq * u.column(i) * scale));
    }
    let ar = w.transpose() * &a * &t;
    let br = w.transpose() * &b;
    let cr = c * &t;
    Ok(BalancedTruncation {
        rom: StateSpaceSystem::dense(ar, br, cr)?,
        hankel_values,
    })
}

/// `L` with `L·Lᵀ = X` for symmetric positive semi-definite `X`.
fn psd_factor(x: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (x + x.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut l = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}
