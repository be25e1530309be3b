//! Dense Bartels–Stewart solver for generalized Lyapunov equations.
//!
//! The pencil `(A, E)` is reduced to `Ã = E⁻¹A`, brought to real Schur form
//! `Ã = U·T·Uᵀ` once, and every subsequent right-hand side is solved by block
//! back substitution over the 1×1 and 2×2 diagonal blocks of `T`.

use nalgebra::{Complex, DMatrix, Schur};

use super::lu::{LuFactor, DEFAULT_PIVOT_TOL};
use crate::error::{Error, Result};

/// Largest order accepted by the dense solvers.
pub const MAX_DENSE_ORDER: usize = 2000;

/// Real Schur form `M = U·T·Uᵀ` with its diagonal block partition.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub u: DMatrix<f64>,
    pub t: DMatrix<f64>,
    /// `(start, size)` of each diagonal block, size 1 or 2.
    pub blocks: Vec<(usize, usize)>,
}

impl RealSchur {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if !m.is_square() {
            return Err(Error::dims("Schur form of a non-square matrix"));
        }
        if n > MAX_DENSE_ORDER {
            return Err(Error::SizeLimit {
                size: n,
                limit: MAX_DENSE_ORDER,
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix passed to Schur decomposition".into()));
        }
        if n == 0 {
            return Ok(Self {
                u: m.clone(),
                t: m,
                blocks: Vec::new(),
            });
        }
        let schur = Schur::try_new(m, f64::EPSILON, 1000 * n.max(10))
            .ok_or_else(|| Error::NotConverged("real Schur decomposition (QR iteration cap)".into()))?;
        let (u, t) = schur.unpack();
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < n {
            if i + 1 < n && t[(i + 1, i)] != 0.0 {
                if i + 2 < n && t[(i + 2, i + 1)] != 0.0 {
                    return Err(Error::NotConverged("Schur form has an unreduced 3x3 block".into()));
                }
                blocks.push((i, 2));
                i += 2;
            } else {
                blocks.push((i, 1));
                i += 1;
            }
        }
        Ok(Self { u, t, blocks })
    }

    /// Eigenvalues read off the diagonal blocks, in block order.
    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        let mut out = Vec::with_capacity(self.t.nrows());
        for &(s, size) in &self.blocks {
            if size == 1 {
                out.push(Complex::new(self.t[(s, s)], 0.0));
            } else {
                let (a, b, c, d) = (self.t[(s, s)], self.t[(s, s + 1)], self.t[(s + 1, s)], self.t[(s + 1, s + 1)]);
                let mean = 0.5 * (a + d);
                let half = 0.5 * (a - d);
                let disc = half * half + b * c;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    out.push(Complex::new(mean - r, 0.0));
                    out.push(Complex::new(mean + r, 0.0));
                } else {
                    let im = (-disc).sqrt();
                    out.push(Complex::new(mean, -im));
                    out.push(Complex::new(mean, im));
                }
            }
        }
        out
    }

    /// Largest real part among the eigenvalues.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solve `T·X + X·Tᵀ = F` for upper quasi-triangular `T`.
fn solve_quasi_triangular(t: &DMatrix<f64>, blocks: &[(usize, usize)], f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let mut x = DMatrix::<f64>::zeros(n, n);
    for &(j0, sj) in blocks.iter().rev() {
        // rhs = F[:, J] - sum_{K > J} X[:, K] T[J, K]ᵀ
        let mut rhs = f.columns(j0, sj).into_owned();
        let tail = j0 + sj;
        if tail < n {
            let xk = x.columns(tail, n - tail);
            let tjk = t.view((j0, tail), (sj, n - tail));
            rhs -= xk * tjk.transpose();
        }
        let tjj = t.view((j0, j0), (sj, sj)).into_owned();
        let mut z = DMatrix::<f64>::zeros(n, sj);
        for &(i0, si) in blocks.iter().rev() {
            let mut r = rhs.rows(i0, si).into_owned();
            let tail_i = i0 + si;
            if tail_i < n {
                r -= t.view((i0, tail_i), (si, n - tail_i)) * z.rows(tail_i, n - tail_i);
            }
            let tii = t.view((i0, i0), (si, si));
            // (I ⊗ T_II + T_JJ ⊗ I) vec(Z) = vec(R), column-major vec.
            let dim = si * sj;
            let mut k = [[0.0f64; 4]; 4];
            let mut rv = [0.0f64; 4];
            for c in 0..sj {
                for a in 0..si {
                    let row = c * si + a;
                    rv[row] = r[(a, c)];
                    for b in 0..si {
                        k[row][c * si + b] += tii[(a, b)];
                    }
                    for d in 0..sj {
                        k[row][d * si + a] += tjj[(c, d)];
                    }
                }
            }
            let sol = solve_small(&mut k, &mut rv, dim)?;
            for c in 0..sj {
                for a in 0..si {
                    z[(i0 + a, c)] = sol[c * si + a];
                }
            }
        }
        x.columns_mut(j0, sj).copy_from(&z);
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting on a system of size ≤ 4.
fn solve_small(k: &mut [[f64; 4]; 4], r: &mut [f64; 4], dim: usize) -> Result<[f64; 4]> {
    let scale = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..dim {
        let p = (col..dim)
            .max_by(|&a, &b| k[a][col].abs().total_cmp(&k[b][col].abs()))
            .expect("non-empty pivot range");
        if k[p][col].abs() <= 1e-15 * scale {
            // T_II and -T_JJ share an eigenvalue: only possible on the imaginary axis here.
            return Err(Error::Unstable { real_part: 0.0 });
        }
        k.swap(col, p);
        r.swap(col, p);
        for row in col + 1..dim {
            let l = k[row][col] / k[col][col];
            for c in col..dim {
                k[row][c] -= l * k[col][c];
            }
            r[row] -= l * r[col];
        }
    }
    let mut x = [0.0f64; 4];
    for row in (0..dim).rev() {
        let mut acc = r[row];
        for c in row + 1..dim {
            acc -= k[row][c] * x[c];
        }
        x[row] = acc / k[row][row];
    }
    Ok(x)
}

/// Reusable solver for Lyapunov equations sharing the pencil `(A, E)`.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    n: usize,
    e_lu: Option<LuFactor<f64>>,
    schur: RealSchur,
    // Index-reversed transpose of T, used by the dual equation.
    reversed: RealSchur,
}

impl LyapunovSolver {
    /// Prepare for `(A, E)`; `E = None` means identity. Fails if the pencil
    /// has an eigenvalue with nonnegative real part.
    pub fn new(a: &DMatrix<f64>, e: Option<&DMatrix<f64>>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::dims("Lyapunov matrix A must be square"));
        }
        if n > MAX_DENSE_ORDER {
            return Err(Error::SizeLimit {
                size: n,
                limit: MAX_DENSE_ORDER,
            });
        }
        let (a_tilde, e_lu) = match e {
            Some(e) => {
                if e.nrows() != n || e.ncols() != n {
                    return Err(Error::dims("Lyapunov matrices A and E differ in shape"));
                }
                let lu = LuFactor::from_dense(e, DEFAULT_PIVOT_TOL)?;
                (lu.solve(a), Some(lu))
            }
            None => (a.clone(), None),
        };
        let schur = RealSchur::new(a_tilde)?;
        let abscissa = schur.spectral_abscissa();
        if !(abscissa < 0.0) {
            return Err(Error::Unstable { real_part: abscissa });
        }
        let reversed = reverse_transpose(&schur);
        Ok(Self {
            n,
            e_lu,
            schur,
            reversed,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn schur(&self) -> &RealSchur {
        &self.schur
    }

    /// Solve `A·P·Eᵀ + E·P·Aᵀ + Q = 0`.
    pub fn solve(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rhs(q)?;
        // Ã P + P Ãᵀ + E⁻¹ Q E⁻ᵀ = 0
        let q_tilde = match &self.e_lu {
            Some(lu) => {
                let left = lu.solve(q);
                lu.solve(&left.transpose()).transpose()
            }
            None => q.clone(),
        };
        let u = &self.schur.u;
        let f = -(u.tr_mul(&q_tilde) * u);
        let y = solve_quasi_triangular(&self.schur.t, &self.schur.blocks, &f)?;
        Ok(symmetrize(u * y * u.transpose()))
    }

    /// Solve the dual equation `Aᵀ·X·E + Eᵀ·X·A + Q = 0`.
    pub fn solve_dual(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rhs(q)?;
        // With X̂ = Eᵀ X E:  Ãᵀ X̂ + X̂ Ã + Q = 0, then reverse indexing turns
        // Tᵀ into an upper quasi-triangular matrix.
        let u = &self.schur.u;
        let n = self.n;
        let g = -(u.tr_mul(q) * u);
        let rev = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
        let y = solve_quasi_triangular(&self.reversed.t, &self.reversed.blocks, &rev(&g))?;
        let x_hat = u * rev(&y) * u.transpose();
        let x = match &self.e_lu {
            Some(lu) => {
                let left = lu.solve_transpose(&x_hat);
                lu.solve_transpose(&left.transpose()).transpose()
            }
            None => x_hat,
        };
        Ok(symmetrize(x))
    }

    /// Factor `Z` (complex, `n×n`) with `P = Z·Zᴴ` solving
    /// `A·P·Eᵀ + E·P·Aᵀ + B·Bᵀ = 0`, by Hammarling's method on a complex
    /// triangular Schur form. `‖C·Z‖_F` then gives an H₂ norm without the
    /// cancellation of `trace(C·P·Cᵀ)`.
    pub fn solve_factor(&self, b: &DMatrix<f64>) -> Result<DMatrix<Complex<f64>>> {
        let n = self.n;
        if b.nrows() != n {
            return Err(Error::dims(format!("Lyapunov factor input has {} rows, expected {n}", b.nrows())));
        }
        let b_tilde = match &self.e_lu {
            Some(lu) => lu.solve(b),
            None => b.clone(),
        };
        let (q, t) = complex_schur(&self.schur);
        let mut rhs = q.adjoint() * b_tilde.map(|v| Complex::new(v, 0.0));
        let m = rhs.ncols();
        let mut u = DMatrix::<Complex<f64>>::zeros(n, n);
        let mut w = vec![Complex::new(0.0, 0.0); n];
        for k in (0..n).rev() {
            let lambda = t[(k, k)];
            let beta: Vec<Complex<f64>> = (0..m).map(|j| rhs[(k, j)]).collect();
            let beta_norm = beta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if beta_norm == 0.0 {
                continue;
            }
            let tau = beta_norm / (-2.0 * lambda.re).sqrt();
            // (T₁ + λ̄I)·w = −a·τ² − B₁·βᴴ, then u = w/τ.
            for i in 0..k {
                let mut acc = -t[(i, k)] * tau * tau;
                for (j, bj) in beta.iter().enumerate() {
                    acc -= rhs[(i, j)] * bj.conj();
                }
                w[i] = acc;
            }
            for j in (0..k).rev() {
                let wj = w[j] / (t[(j, j)] + lambda.conj());
                w[j] = wj;
                for i in 0..j {
                    w[i] -= t[(i, j)] * wj;
                }
            }
            u[(k, k)] = Complex::new(tau, 0.0);
            for i in 0..k {
                let ui = w[i] / tau;
                u[(i, k)] = ui;
                for (j, bj) in beta.iter().enumerate() {
                    rhs[(i, j)] -= ui * bj / tau;
                }
            }
        }
        Ok(q * u)
    }

    fn check_rhs(&self, q: &DMatrix<f64>) -> Result<()> {
        if q.nrows() != self.n || q.ncols() != self.n {
            return Err(Error::dims(format!(
                "Lyapunov right-hand side is {}x{}, expected {}x{}",
                q.nrows(),
                q.ncols(),
                self.n,
                self.n
            )));
        }
        Ok(())
    }
}

/// Triangularize the 2×2 blocks of a real Schur form with complex rotations.
fn complex_schur(s: &RealSchur) -> (DMatrix<Complex<f64>>, DMatrix<Complex<f64>>) {
    let n = s.t.nrows();
    let mut q = s.u.map(|v| Complex::new(v, 0.0));
    let mut t = s.t.map(|v| Complex::new(v, 0.0));
    for &(k, size) in &s.blocks {
        if size != 2 {
            continue;
        }
        let (a, b, c, d) = (s.t[(k, k)], s.t[(k, k + 1)], s.t[(k + 1, k)], s.t[(k + 1, k + 1)]);
        let mean = 0.5 * (a + d);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        // Blocks may also hold a real pair that was never split.
        let lambda = if disc >= 0.0 {
            Complex::new(mean + disc.sqrt(), 0.0)
        } else {
            Complex::new(mean, (-disc).sqrt())
        };
        let (v1, v2) = if b.abs() >= c.abs() {
            (Complex::new(b, 0.0), lambda - a)
        } else {
            (lambda - d, Complex::new(c, 0.0))
        };
        let norm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
        let (g11, g21) = (v1 / norm, v2 / norm);
        let (g12, g22) = (-g21.conj(), g11.conj());
        for j in k..n {
            let (x, y) = (t[(k, j)], t[(k + 1, j)]);
            t[(k, j)] = g11.conj() * x + g21.conj() * y;
            t[(k + 1, j)] = g12.conj() * x + g22.conj() * y;
        }
        for i in 0..=k + 1 {
            let (x, y) = (t[(i, k)], t[(i, k + 1)]);
            t[(i, k)] = x * g11 + y * g21;
            t[(i, k + 1)] = x * g12 + y * g22;
        }
        t[(k + 1, k)] = Complex::new(0.0, 0.0);
        for i in 0..n {
            let (x, y) = (q[(i, k)], q[(i, k + 1)]);
            q[(i, k)] = x * g11 + y * g21;
            q[(i, k + 1)] = x * g12 + y * g22;
        }
    }
    (q, t)
}

fn reverse_transpose(s: &RealSchur) -> RealSchur {
    let n = s.t.nrows();
    let t = DMatrix::from_fn(n, n, |i, j| s.t[(n - 1 - j, n - 1 - i)]);
    let blocks = s
        .blocks
        .iter()
        .rev()
        .map(|&(start, size)| (n - start - size, size))
        .collect();
    RealSchur {
        u: DMatrix::zeros(0, 0),
        t,
        blocks,
    }
}

fn symmetrize(p: DMatrix<f64>) -> DMatrix<f64> {
    (&p + p.transpose()) * 0.5
}

/// Solve `A·P·Eᵀ + E·P·Aᵀ + Q = 0` for symmetric `Q`.
pub fn lyapunov_solve(a: &DMatrix<f64>, e: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if q.nrows() != a.nrows() || q.ncols() != a.ncols() {
        return Err(Error::dims("Lyapunov right-hand side shape"));
    }
    let scale = q.amax().max(f64::MIN_POSITIVE);
    if (q - q.transpose()).amax() > 1e-12 * scale {
        return Err(Error::invalid("Lyapunov right-hand side must be symmetric"));
    }
    LyapunovSolver::new(a, Some(e))?.solve(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &DMatrix<f64>, e: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
        (a * p * e.transpose() + e * p * a.transpose() + q).norm()
    }

    fn random_stable(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0f64..1.0));
        // shift the spectrum left of the Gershgorin bound
        let shift = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        for i in 0..n {
            a[(i, i)] -= shift + 0.1;
        }
        a
    }

    #[test]
    fn scalar_case() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let e = DMatrix::from_element(1, 1, 1.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let p = lyapunov_solve(&a, &e, &q).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decoupled_scalars() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0]));
        let e = DMatrix::identity(2, 2);
        let q = DMatrix::identity(2, 2);
        let p = lyapunov_solve(&a, &e, &q).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((p[(1, 1)] - 0.25).abs() < 1e-15);
        assert!(p[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn random_stable_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20;
        let a = random_stable(n, &mut rng);
        let e = DMatrix::identity(n, n);
        let b = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        let q = &b * b.transpose();
        let p = lyapunov_solve(&a, &e, &q).unwrap();
        assert!(residual(&a, &e, &p, &q) <= 1e-9 * q.norm());
        assert!((&p - p.transpose()).amax() == 0.0);
        let min_eig = p.clone().symmetric_eigen().eigenvalues.min();
        assert!(min_eig > -1e-12 * p.norm());
    }

    #[test]
    fn complex_spectrum_with_mass_matrix() {
        // Lightly damped oscillators give 2x2 Schur blocks.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n / 2 {
            let w = 1.0 + k as f64;
            a[(2 * k, 2 * k + 1)] = w;
            a[(2 * k + 1, 2 * k)] = -w;
            a[(2 * k, 2 * k)] = -0.05;
            a[(2 * k + 1, 2 * k + 1)] = -0.05;
        }
        let t = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { rng.random_range(-0.3..0.3) });
        let a = &t * a * t.clone().try_inverse().unwrap();
        let e = DMatrix::from_fn(n, n, |i, j| if i == j { 1.5 } else if i.abs_diff(j) == 1 { 0.25 } else { 0.0 });
        let a = &e * a;
        let b = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let q = &b * b.transpose();
        let solver = LyapunovSolver::new(&a, Some(&e)).unwrap();
        assert!(solver.schur().blocks.iter().any(|&(_, s)| s == 2));
        let p = solver.solve(&q).unwrap();
        assert!(residual(&a, &e, &p, &q) <= 1e-9 * q.norm());

        let c = DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0));
        let qo = c.tr_mul(&c);
        let x = solver.solve_dual(&qo).unwrap();
        let res = a.transpose() * &x * &e + e.transpose() * &x * &a + &qo;
        assert!(res.norm() <= 1e-9 * qo.norm());
    }

    #[test]
    fn unstable_rejected() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let e = DMatrix::from_element(1, 1, 1.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(lyapunov_solve(&a, &e, &q), Err(Error::Unstable { .. })));
        let marginal = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(LyapunovSolver::new(&marginal, None).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = DMatrix::from_element(2, 2, -1.0);
        let e = DMatrix::identity(2, 2);
        let q = DMatrix::identity(3, 3);
        assert!(matches!(lyapunov_solve(&a, &e, &q), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn factor_reproduces_gramian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 5, 17] {
            // rotation blocks give complex eigenvalues; the last block has a
            // real pair that a 2×2 Schur block may keep unsplit
            let mut a = random_stable(n, &mut rng);
            for i in (0..n.saturating_sub(1)).step_by(2) {
                a[(i, i + 1)] += 3.0;
                a[(i + 1, i)] -= 3.0;
            }
            let e = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else if i.abs_diff(j) == 1 { 0.3 } else { 0.0 });
            let b = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0f64..1.0));
            let solver = LyapunovSolver::new(&a, Some(&e)).unwrap();
            let p = solver.solve(&(&b * b.transpose())).unwrap();
            let z = solver.solve_factor(&b).unwrap();
            let pz = (&z * z.adjoint()).map(|v| v.re);
            assert!((&pz - &p).norm() <= 1e-12 * p.norm(), "n={n}");
        }
    }
}
