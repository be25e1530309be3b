//! Output-error identification of network parameters.
//!
//! The fit is nonlinear least squares on simulated step responses:
//! Levenberg–Marquardt over log-parameters with a forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpm::{default_state_choice, generate_equations, CellComplex, ParamSet, StateVariable};
use crate::lti::{simulate, Excitation, StateSpaceSystem, TimeSeries};

/// Root-mean-square error over all samples and channels, divided by the
/// variation interval `max(y_ref) − min(y_ref)`.
pub fn nrmse(y_hat: &TimeSeries, y_ref: &TimeSeries) -> Result<f64> {
    if y_hat.len() != y_ref.len() || y_hat.channels() != y_ref.channels() {
        return Err(Error::dims(format!(
            "series shapes differ: {}×{} vs {}×{}",
            y_hat.len(),
            y_hat.channels(),
            y_ref.len(),
            y_ref.channels()
        )));
    }
    for (a, b) in y_hat.times().iter().zip(y_ref.times()) {
        if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1.0) {
            return Err(Error::invalid(format!("time grids differ ({a} vs {b})")));
        }
    }
    let range = variation(y_ref)?;
    let diff = y_hat.values() - y_ref.values();
    Ok((diff.norm_squared() / diff.len() as f64).sqrt() / range)
}

fn variation(y: &TimeSeries) -> Result<f64> {
    let v = y.values();
    if v.is_empty() {
        return Err(Error::invalid("reference series is empty"));
    }
    let range = v.max() - v.min();
    if !(range > 0.0) {
        return Err(Error::invalid("reference series is constant: normalization interval is zero"));
    }
    Ok(range)
}

/// Parameter estimation problem for a step-driven network.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub complex: CellComplex,
    /// Reference output; `t = 0` onwards.
    pub data: TimeSeries,
    /// Step magnitudes, one per input.
    pub step: Vec<f64>,
    /// Initial parameters; bounds are read from the entries.
    pub theta0: ParamSet,
    /// Names of the parameters being fitted; the rest stay fixed.
    pub free: Vec<String>,
    /// Inner simulation step.
    pub dt: f64,
    pub states: Vec<StateVariable>,
}

impl FitProblem {
    /// Fit every constitutive and transformer parameter of the complex.
    pub fn new(complex: CellComplex, data: TimeSeries, step: Vec<f64>, theta0: ParamSet, dt: f64) -> Self {
        let free = complex.fit_candidates();
        let states = default_state_choice(&complex);
        Self {
            complex,
            data,
            step,
            theta0,
            free,
            dt,
            states,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.complex.validate()?;
        self.complex.check_params(&self.theta0)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("simulation step must be positive, got {}", self.dt)));
        }
        if self.data.is_empty() {
            return Err(Error::invalid("reference data is empty"));
        }
        if self.data.times()[0] < 0.0 {
            return Err(Error::invalid("reference data starts before t = 0"));
        }
        variation(&self.data)?;
        if self.free.is_empty() {
            return Err(Error::invalid("no free parameters to fit"));
        }
        for name in &self.free {
            let v = self.theta0.value(name)?;
            if !(v > 0.0) {
                return Err(Error::invalid(format!("free parameter '{name}' must be positive for the log parametrization, got {v}")));
            }
        }
        Ok(())
    }

    /// Log-space box per free parameter; missing bounds default to `ln θ₀ ± range`.
    fn log_bounds(&self, range: f64) -> Vec<(f64, f64)> {
        self.free
            .iter()
            .map(|name| {
                let p = self.theta0.get(name).expect("validated");
                let z = p.value.ln();
                (p.lower.map_or(z - range, f64::ln), p.upper.map_or(z + range, f64::ln))
            })
            .collect()
    }

    fn params_at(&self, z: &DVector<f64>) -> ParamSet {
        let mut p = self.theta0.clone();
        for (name, zi) in self.free.iter().zip(z.iter()) {
            let entry = self.theta0.get(name).expect("validated");
            // exp(ln b) may round just past the bound b
            let v = zi.exp().clamp(entry.lower.unwrap_or(f64::MIN_POSITIVE), entry.upper.unwrap_or(f64::MAX));
            p.set(name, v);
        }
        p
    }

    /// Network equations at a parameter set.
    pub fn model(&self, params: &ParamSet) -> Result<StateSpaceSystem> {
        generate_equations(&self.complex, params, &self.states)
    }

    /// Simulated output of the network on the data grid.
    pub fn response(&self, params: &ParamSet) -> Result<TimeSeries> {
        let sys = self.model(params)?;
        if sys.outputs() != self.data.channels() {
            return Err(Error::dims(format!(
                "network has {} outputs, data has {} channels",
                sys.outputs(),
                self.data.channels()
            )));
        }
        let t_end = *self.data.times().last().expect("validated non-empty");
        let n_steps = (t_end / self.dt).ceil().max(1.0);
        let sim = simulate(&sys, &Excitation::Step(self.step.clone()), None, self.dt, n_steps * self.dt)?;
        sim.resample(self.data.times())
    }

    fn residuals(&self, z: &DVector<f64>, scale: f64) -> Result<DVector<f64>> {
        let y = self.response(&self.params_at(z))?;
        let r = (y.values() - self.data.values()) * scale;
        if let Some(bad) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "residual {bad} is not finite at parameters {:?}",
                self.free.iter().zip(z.iter().map(|v| v.exp())).collect::<Vec<_>>()
            )));
        }
        Ok(DVector::from_column_slice(r.as_slice()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop when an accepted step lowers the SSE by less than this fraction.
    pub ftol: f64,
    /// Stop when the gradient of ½·SSE (log space) is smaller than this.
    pub gtol: f64,
    /// Forward-difference step relative to `max(|ln θ|, 1)`.
    pub fd_step: f64,
    pub lambda0: f64,
    /// Number of starts; start 0 is θ₀ itself.
    pub starts: usize,
    pub seed: u64,
    /// Half-width of the uniform log-space perturbation for extra starts.
    pub spread: f64,
    /// Half-width of the log-space box for parameters without explicit bounds.
    pub log_range: f64,
    /// Largest change of any `ln θ` in one step; longer steps are scaled down.
    pub max_log_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            ftol: 1e-10,
            gtol: 1e-8,
            fd_step: 1e-6,
            lambda0: 1e-3,
            starts: 1,
            seed: 0,
            spread: 1.0,
            log_range: 20.0,
            max_log_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ZeroResidual,
    SmallGradient,
    SmallDecrease,
    /// No damped step decreases the SSE any more.
    NoImprovement,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ParamSet,
    pub nrmse: f64,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    /// NRMSE at the start and after every accepted step.
    pub residual_history: Vec<f64>,
    pub start_index: usize,
}

pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    fit_with(problem, &FitOptions::default())
}

/// Fit from every configured start and keep the lowest SSE (ties: lowest index).
pub fn fit_with(problem: &FitProblem, opts: &FitOptions) -> Result<FitResult> {
    problem.validate()?;
    if opts.starts == 0 {
        return Err(Error::invalid("at least one start is required"));
    }
    if !(opts.log_range > 0.0) || !(opts.max_log_step > 0.0) {
        return Err(Error::invalid("log_range and max_log_step must be positive"));
    }
    let bounds = problem.log_bounds(opts.log_range);
    let z0 = DVector::from_iterator(
        problem.free.len(),
        problem.free.iter().map(|n| problem.theta0.value(n).expect("validated").ln()),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<DVector<f64>> = (0..opts.starts)
        .map(|k| {
            if k == 0 {
                return z0.clone();
            }
            DVector::from_iterator(
                z0.len(),
                z0.iter()
                    .zip(&bounds)
                    .map(|(z, &(lo, hi))| (z + rng.random_range(-opts.spread..=opts.spread)).clamp(lo, hi)),
            )
        })
        .collect();
    let runs: Vec<Result<FitResult>> = if starts.len() == 1 {
        vec![levenberg_marquardt(problem, &starts[0], &bounds, opts, 0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = starts
                .iter()
                .enumerate()
                .map(|(k, z)| {
                    let bounds = &bounds;
                    scope.spawn(move || levenberg_marquardt(problem, z, bounds, opts, k))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("fit worker panicked")).collect()
        })
    };
    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.nrmse < b.nrmse) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one start ran"),
    }
}

fn levenberg_marquardt(
    problem: &FitProblem,
    z0: &DVector<f64>,
    bounds: &[(f64, f64)],
    opts: &FitOptions,
    start_index: usize,
) -> Result<FitResult> {
    // SSE of the scaled residuals equals nrmse².
    let scale = 1.0 / (variation(&problem.data)? * (problem.data.values().len() as f64).sqrt());
    let clamp = |z: DVector<f64>| DVector::from_iterator(z.len(), z.iter().zip(bounds).map(|(v, &(lo, hi))| v.clamp(lo, hi)));
    let p = z0.len();
    let mut z = clamp(z0.clone());
    let mut r = problem.residuals(&z, scale)?;
    let mut sse = r.norm_squared();
    let mut history = vec![sse.sqrt()];
    let mut lambda = opts.lambda0;
    let mut iterations = 0;
    let termination = loop {
        if sse == 0.0 {
            break Termination::ZeroResidual;
        }
        if iterations >= opts.max_iter {
            break Termination::IterationCap;
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(r.len(), p);
        for j in 0..p {
            let h = opts.fd_step * z[j].abs().max(1.0);
            let mut zp = z.clone();
            zp[j] += h;
            let rp = problem.residuals(&zp, scale)?;
            jac.set_column(j, &((rp - &r) / h));
        }
        let grad = jac.tr_mul(&r);
        if grad.amax() < opts.gtol {
            break Termination::SmallGradient;
        }
        let jtj = jac.tr_mul(&jac);
        let dmax = jtj.diagonal().max();
        let diag = jtj.diagonal().map(|d| d.max(1e-12 * dmax).max(f64::MIN_POSITIVE));
        let mut accepted = None;
        while lambda < 1e16 {
            let mut lhs = jtj.clone();
            for i in 0..p {
                lhs[(i, i)] += lambda * diag[i];
            }
            let mut step = match lhs.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let longest = step.amax();
            if longest > opts.max_log_step {
                step *= opts.max_log_step / longest;
            }
            let z_new = clamp(&z + step);
            // a trial point the network cannot be simulated at is a rejected step
            let Ok(r_new) = problem.residuals(&z_new, scale) else {
                lambda *= 10.0;
                continue;
            };
            let sse_new = r_new.norm_squared();
            if sse_new < sse {
                lambda = (lambda / 10.0).max(1e-12);
                accepted = Some((z_new, r_new, sse_new));
                break;
            }
            lambda *= 10.0;
        }
        let Some((z_new, r_new, sse_new)) = accepted else {
            break Termination::NoImprovement;
        };
        let decrease = (sse - sse_new) / sse;
        z = z_new;
        r = r_new;
        sse = sse_new;
        history.push(sse.sqrt());
        if decrease < opts.ftol {
            break Termination::SmallDecrease;
        }
    };
    Ok(FitResult {
        params: problem.params_at(&z),
        nrmse: sse.sqrt(),
        converged: termination != Termination::IterationCap,
        termination,
        iterations,
        residual_history: history,
        start_index,
    })
}
