use serde::{Deserialize, Serialize};

use super::krylov::{rational_krylov_nested, KrylovFactors};
use super::pork::{pork_step, PorkStep};
use crate::error::{Error, Result};
use crate::lti::StateSpaceSystem;

/// Real positive shift pair for one order-2 reduction step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftPair {
    pub a: f64,
    pub b: f64,
}

impl ShiftPair {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("shift pair must be finite and positive, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    /// `(ω̂/e, ω̂·e)` with `ω̂ = √(‖A‖₁/‖E‖₁)`.
    pub fn default_for(sys: &StateSpaceSystem) -> Self {
        let w = (sys.a().norm1() / sys.e().norm1()).sqrt();
        let w = if w.is_finite() && w > 0.0 { w } else { 1.0 };
        Self {
            a: w * (-1.0f64).exp(),
            b: w * 1.0f64.exp(),
        }
    }

    /// Ascending order, so `(a, b)` and `(b, a)` are the same pair.
    pub fn sorted(self) -> Self {
        if self.a <= self.b {
            self
        } else {
            Self { a: self.b, b: self.a }
        }
    }

    pub fn as_vec(self) -> Vec<f64> {
        vec![self.a, self.b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparkOptions {
    pub max_evals: usize,
    /// Relative spread of objective values across the simplex at convergence.
    pub ftol: f64,
    /// Simplex diameter in log-shift space at convergence.
    pub xtol: f64,
    /// Half-width of the admissible log-shift box around `ln ω̂`.
    pub log_range: f64,
}

impl Default for SparkOptions {
    fn default() -> Self {
        Self {
            max_evals: 200,
            ftol: 1e-13,
            xtol: 1e-7,
            log_range: 23.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparkResult {
    pub shifts: ShiftPair,
    /// Captured energy `‖G_r‖²_H₂` at `shifts`.
    pub energy: f64,
    pub initial_energy: f64,
    pub evaluations: usize,
    /// False when the evaluation cap was hit first (best-so-far returned).
    pub converged: bool,
}

/// Orthonormalized order-2 factors for a shift pair (nested form, so equal
/// and nearly equal shifts need no special casing).
pub(crate) fn pair_factors(sys: &StateSpaceSystem, pair: ShiftPair) -> Result<KrylovFactors> {
    let p = pair.sorted();
    rational_krylov_nested(sys, &[p.a, p.b])?.orthonormalized()
}

pub(crate) fn pair_step(sys: &StateSpaceSystem, pair: ShiftPair) -> Result<(KrylovFactors, PorkStep)> {
    let factors = pair_factors(sys, pair)?;
    let step = pork_step(&factors, sys.c())?;
    Ok((factors, step))
}

/// `J(a, b) = ‖G_r‖²_H₂` of the order-2 pseudo-optimal ROM.
pub fn spark_objective(sys: &StateSpaceSystem, pair: ShiftPair) -> Result<f64> {
    Ok(pair_step(sys, pair)?.1.energy)
}

pub fn spark_optimize(sys: &StateSpaceSystem, init: ShiftPair) -> Result<SparkResult> {
    spark_optimize_with(sys, init, &SparkOptions::default())
}

/// Maximize `J` by Nelder–Mead over `(ln a, ln b)`.
pub fn spark_optimize_with(sys: &StateSpaceSystem, init: ShiftPair, opts: &SparkOptions) -> Result<SparkResult> {
    if sys.inputs() != 1 {
        return Err(Error::Unsupported("SPARK supports single-input systems only".into()));
    }
    let init = ShiftPair::new(init.a, init.b)?.sorted();
    let initial_energy = spark_objective(sys, init)?;
    let centre = ShiftPair::default_for(sys);
    let (lo_a, hi_a) = (centre.a.ln() + 1.0 - opts.log_range, centre.a.ln() + 1.0 + opts.log_range);
    let clamp = |x: f64| x.clamp(lo_a, hi_a);
    let mut f = |x: [f64; 2]| -> f64 {
        let pair = ShiftPair {
            a: clamp(x[0]).exp(),
            b: clamp(x[1]).exp(),
        };
        match spark_objective(sys, pair) {
            Ok(j) if j.is_finite() => -j,
            _ => f64::INFINITY,
        }
    };
    let x0 = [init.a.ln(), init.b.ln()];
    let nm = nelder_mead(&mut f, x0, -initial_energy, opts);
    let shifts = ShiftPair {
        a: clamp(nm.x[0]).exp(),
        b: clamp(nm.x[1]).exp(),
    }
    .sorted();
    let (shifts, energy) = if -nm.f >= initial_energy { (shifts, -nm.f) } else { (init, initial_energy) };
    Ok(SparkResult {
        shifts,
        energy,
        initial_energy,
        evaluations: nm.evals + 1,
        converged: nm.converged,
    })
}

struct Simplex {
    x: [f64; 2],
    f: f64,
    evals: usize,
    converged: bool,
}

fn nelder_mead(f: &mut impl FnMut([f64; 2]) -> f64, x0: [f64; 2], f0: f64, opts: &SparkOptions) -> Simplex {
    const STEP: f64 = 0.5;
    let add = |p: [f64; 2], q: [f64; 2], t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
    let mut evals = 0usize;
    let mut pts: Vec<([f64; 2], f64)> = vec![(x0, f0)];
    for d in 0..2 {
        let mut x = x0;
        x[d] += STEP;
        evals += 1;
        pts.push((x, f(x)));
    }
    let mut converged = false;
    while evals < opts.max_evals {
        pts.sort_by(|p, q| p.1.total_cmp(&q.1));
        let (best, worst) = (pts[0].1, pts[2].1);
        let diam = pts[1..]
            .iter()
            .map(|p| (p.0[0] - pts[0].0[0]).abs().max((p.0[1] - pts[0].0[1]).abs()))
            .fold(0.0, f64::max);
        let spread = worst - best;
        if best.is_finite() && spread <= opts.ftol * best.abs() && (diam <= opts.xtol || spread <= 4.0 * f64::EPSILON * best.abs()) {
            converged = true;
            break;
        }
        let c = [(pts[0].0[0] + pts[1].0[0]) * 0.5, (pts[0].0[1] + pts[1].0[1]) * 0.5];
        let xh = pts[2].0;
        let xr = add(c, xh, -1.0);
        let fr = f(xr);
        evals += 1;
        if fr < pts[0].1 {
            let xe = add(c, xh, -2.0);
            let fe = f(xe);
            evals += 1;
            pts[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < pts[1].1 {
            pts[2] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < pts[2].1 {
            let xc = add(c, xr, 0.5);
            let fc = f(xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = add(c, xh, 0.5);
            let fc = f(xc);
            (xc, fc, fc < pts[2].1)
        };
        evals += 1;
        if accept {
            pts[2] = (xc, fc);
            continue;
        }
        let xl = pts[0].0;
        for p in pts.iter_mut().skip(1) {
            p.0 = add(xl, p.0, 0.5);
            p.1 = f(p.0);
            evals += 1;
        }
    }
    pts.sort_by(|p, q| p.1.total_cmp(&q.1));
    Simplex {
        x: pts[0].0,
        f: pts[0].1,
        evals,
        converged,
    }
}
