use nalgebra::{DMatrix, DVector};

use super::{StateSpaceSystem, TimeSeries};
use crate::error::{Error, Result};
use crate::numerics::shifted_factor;

/// Input signal for [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Excitation {
    /// Constant input `u(t) = magnitudes` for `t ≥ 0`.
    Step(Vec<f64>),
    /// Piecewise-linear input sampled from a series with one channel per input.
    Series(TimeSeries),
}

impl Excitation {
    pub fn zero(inputs: usize) -> Self {
        Excitation::Step(vec![0.0; inputs])
    }

    fn channels(&self) -> usize {
        match self {
            Excitation::Step(u) => u.len(),
            Excitation::Series(ts) => ts.channels(),
        }
    }

    fn at(&self, t: f64) -> DVector<f64> {
        match self {
            Excitation::Step(u) => DVector::from_column_slice(u),
            Excitation::Series(ts) => DVector::from_vec(ts.sample(t)),
        }
    }
}

/// Implicit trapezoidal integration of `E·ẋ = A·x + B·u` on the grid `t_k = k·dt`,
/// `k = 0..=round(t_end/dt)`. Returns `y = C·x` at every grid point.
pub fn simulate(
    sys: &StateSpaceSystem,
    input: &Excitation,
    x0: Option<&DVector<f64>>,
    dt: f64,
    t_end: f64,
) -> Result<TimeSeries> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::invalid(format!("end time must be non-negative, got {t_end}")));
    }
    if input.channels() != sys.inputs() {
        return Err(Error::dims(format!(
            "excitation has {} channels, system has {} inputs",
            input.channels(),
            sys.inputs()
        )));
    }
    if let Excitation::Series(ts) = input {
        let (first, last) = (ts.times().first().copied(), ts.times().last().copied());
        match (first, last) {
            (Some(a), Some(b)) if a <= 0.0 && b >= t_end - 1e-9 * dt => {}
            _ => return Err(Error::invalid("input series must cover [0, t_end]")),
        }
    }
    let n = sys.order();
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::dims(format!("initial state has length {}, system order is {n}", x0.len())))
        }
        Some(x0) => DMatrix::from_column_slice(n, 1, x0.as_slice()),
        None => DMatrix::zeros(n, 1),
    };
    let steps = (t_end / dt).round() as usize;

    // E − dt/2·A = dt/2·(2/dt·E − A)
    let h = 2.0 / dt;
    let solver = shifted_factor(sys.e(), sys.a(), h).map_err(|err| match err {
        Error::Singular { .. } => Error::NotConverged(format!("trapezoidal step matrix is singular at dt = {dt}")),
        other => other,
    })?;

    let p = sys.outputs();
    let mut t = Vec::with_capacity(steps + 1);
    let mut y = DMatrix::zeros(steps + 1, p);
    let mut u_prev = input.at(0.0);
    let record = |x: &DMatrix<f64>, k: usize, y: &mut DMatrix<f64>| {
        let out = sys.c() * x;
        for j in 0..p {
            y[(k, j)] = out[(j, 0)];
        }
    };
    t.push(0.0);
    record(&x, 0, &mut y);
    for k in 1..=steps {
        let tk = k as f64 * dt;
        let u_next = input.at(tk);
        let mut rhs = sys.e().mul_dense(&x) * h + sys.a().mul_dense(&x);
        rhs += sys.b() * DMatrix::from_column_slice(u_prev.len(), 1, (&u_prev + &u_next).as_slice());
        x = solver.solve_real(&rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("state at t = {tk}")));
        }
        t.push(tk);
        record(&x, k, &mut y);
        u_prev = u_next;
    }
    TimeSeries::new(t, y)
}
