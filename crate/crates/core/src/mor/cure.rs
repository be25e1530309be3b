use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pork::residual_input;
use super::spark::{pair_step, spark_optimize_with, ShiftPair, SparkOptions};
use crate::error::{Error, Result};
use crate::lti::{h2_norm_squared, StateSpaceSystem};
use crate::numerics::SystemMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CureOptions {
    /// Target relative H₂ bound.
    pub tol: f64,
    /// Cap on the accumulated order (even).
    pub max_order: usize,
    /// SPARK start for every step; `None` uses [`ShiftPair::default_for`].
    pub init: Option<ShiftPair>,
    pub spark: SparkOptions,
}

impl CureOptions {
    pub fn new(tol: f64, max_order: usize) -> Self {
        Self {
            tol,
            max_order,
            init: None,
            spark: SparkOptions::default(),
        }
    }
}

/// One order-2 reduction step.
#[derive(Debug, Clone)]
pub struct CureStep {
    pub shifts: ShiftPair,
    pub rom: StateSpaceSystem,
    /// `L_V` of the step's Krylov factors; couples later steps to this one.
    pub l: DMatrix<f64>,
    pub energy: f64,
    pub spark_converged: bool,
    pub spark_evaluations: usize,
    /// Residual input `B⊥` left after this step.
    pub b_perp: DMatrix<f64>,
}

/// Family of step-ROMs produced by cumulative reduction.
#[derive(Debug, Clone)]
pub struct CureLedger {
    steps: Vec<CureStep>,
    accumulated: StateSpaceSystem,
    b_perp: DMatrix<f64>,
    captured_energy: f64,
    hfm_h2: f64,
    bound_history: Vec<(usize, f64)>,
}

impl CureLedger {
    pub fn steps(&self) -> &[CureStep] {
        &self.steps
    }

    pub fn step_roms(&self) -> Vec<&StateSpaceSystem> {
        self.steps.iter().map(|s| &s.rom).collect()
    }

    pub fn accumulated_rom(&self) -> &StateSpaceSystem {
        &self.accumulated
    }

    pub fn b_perp(&self) -> &DMatrix<f64> {
        &self.b_perp
    }

    pub fn captured_energy(&self) -> f64 {
        self.captured_energy
    }

    pub fn hfm_h2(&self) -> f64 {
        self.hfm_h2
    }

    /// `(order, ε̄)` after every step.
    pub fn bound_history(&self) -> &[(usize, f64)] {
        &self.bound_history
    }

    pub fn order(&self) -> usize {
        self.accumulated.order()
    }

    pub fn final_bound(&self) -> f64 {
        self.bound_history.last().map(|p| p.1).unwrap_or(1.0)
    }

    /// Accumulated ROM truncated after the first `steps` steps.
    pub fn accumulated_after(&self, steps: usize) -> Result<StateSpaceSystem> {
        accumulate(&self.steps[..steps.min(self.steps.len())])
    }

    /// JSON document: orders, bounds, shifts and step-ROM matrices as dense arrays.
    pub fn to_document(&self) -> LedgerDocument {
        LedgerDocument {
            hfm_h2: self.hfm_h2,
            captured_energy: self.captured_energy,
            final_order: self.order(),
            final_bound: self.final_bound(),
            b_perp_norm: self.b_perp.norm(),
            bounds: bound_table(self),
            steps: self
                .steps
                .iter()
                .map(|s| StepDocument {
                    shifts: s.shifts,
                    energy: s.energy,
                    spark_converged: s.spark_converged,
                    a: rows(&s.rom.a().to_dense()),
                    b: rows(s.rom.b()),
                    c: rows(s.rom.c()),
                    l: rows(&s.l),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDocument {
    pub shifts: ShiftPair,
    pub energy: f64,
    pub spark_converged: bool,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub l: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerDocument {
    pub hfm_h2: f64,
    pub captured_energy: f64,
    pub final_order: usize,
    pub final_bound: f64,
    pub b_perp_norm: f64,
    pub bounds: Vec<BoundRow>,
    pub steps: Vec<StepDocument>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn cure(sys: &StateSpaceSystem, tol: f64, max_order: usize) -> Result<CureLedger> {
    cure_with(sys, &CureOptions::new(tol, max_order))
}

/// Cumulative reduction: repeat SPARK → PORK on the residual input until the
/// a priori bound `ε̄ = √(1 − Σ‖G_rᵢ‖²/‖G‖²)` reaches `tol` or the order cap.
pub fn cure_with(sys: &StateSpaceSystem, opts: &CureOptions) -> Result<CureLedger> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::invalid(format!("tolerance must lie in (0, 1), got {}", opts.tol)));
    }
    if opts.max_order < 2 || !opts.max_order.is_multiple_of(2) {
        return Err(Error::invalid(format!("max_order must be a positive even number, got {}", opts.max_order)));
    }
    if sys.inputs() != 1 {
        return Err(Error::Unsupported("cumulative reduction supports single-input systems only".into()));
    }
    let g2 = h2_norm_squared(sys)?;
    if !(g2 > 0.0) {
        return Err(Error::invalid("system has zero H2 norm; nothing to reduce"));
    }
    let init = opts.init.unwrap_or_else(|| ShiftPair::default_for(sys));
    let cap = opts.max_order.min(sys.order() - sys.order() % 2);
    let mut residual = sys.clone();
    let mut steps: Vec<CureStep> = Vec::new();
    let mut captured = 0.0;
    let mut history = Vec::new();
    let mut bound = 1.0;
    while 2 * (steps.len() + 1) <= cap && bound > opts.tol {
        let spark = spark_optimize_with(&residual, init, &opts.spark)?;
        let (factors, step) = pair_step(&residual, spark.shifts)?;
        let b_perp = residual_input(&residual, &factors, &step.rom)?;
        captured += step.energy;
        bound = (1.0 - captured / g2).max(0.0).sqrt();
        steps.push(CureStep {
            shifts: spark.shifts,
            rom: step.rom,
            l: factors.l,
            energy: step.energy,
            spark_converged: spark.converged,
            spark_evaluations: spark.evaluations,
            b_perp: b_perp.clone(),
        });
        history.push((2 * steps.len(), bound));
        residual = residual.with_input(b_perp)?;
        if residual.b().norm() == 0.0 {
            break;
        }
    }
    let accumulated = accumulate(&steps)?;
    Ok(CureLedger {
        steps,
        accumulated,
        b_perp: residual.b().clone(),
        captured_energy: captured,
        hfm_h2: g2.sqrt(),
        bound_history: history,
    })
}

/// Chain the step-ROMs: step `i` is driven by `u + Σ_{j<i} L_j·x_j`, so
/// `A[i][j] = B_rᵢ·L_j` below the diagonal, `B` stacked, `C` concatenated.
fn accumulate(steps: &[CureStep]) -> Result<StateSpaceSystem> {
    let sizes: Vec<usize> = steps.iter().map(|s| s.rom.order()).collect();
    let offsets: Vec<usize> = sizes.iter().scan(0, |acc, &k| {
        let o = *acc;
        *acc += k;
        Some(o)
    }).collect();
    let n: usize = sizes.iter().sum();
    let (m, p) = steps.first().map(|s| (s.rom.inputs(), s.rom.outputs())).unwrap_or((1, 1));
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    let mut c = DMatrix::zeros(p, n);
    for (i, si) in steps.iter().enumerate() {
        let (oi, ki) = (offsets[i], sizes[i]);
        a.view_mut((oi, oi), (ki, ki)).copy_from(&si.rom.a().to_dense());
        for (j, sj) in steps.iter().enumerate().take(i) {
            a.view_mut((oi, offsets[j]), (ki, sizes[j])).copy_from(&(si.rom.b() * &sj.l));
        }
        b.view_mut((oi, 0), (ki, m)).copy_from(si.rom.b());
        c.view_mut((0, oi), (p, ki)).copy_from(si.rom.c());
    }
    StateSpaceSystem::new(SystemMatrix::Dense(DMatrix::identity(n, n)), SystemMatrix::Dense(a), b, c)
}

/// One row of the bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub order: usize,
    pub bound: f64,
    pub log10_bound: f64,
}

pub fn bound_table(ledger: &CureLedger) -> Vec<BoundRow> {
    ledger
        .bound_history
        .iter()
        .map(|&(order, bound)| BoundRow {
            order,
            bound,
            log10_bound: bound.log10(),
        })
        .collect()
}

/// CSV with header `order,bound,log10_bound`; floats in shortest round-trip form.
pub fn bound_table_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("order,bound,log10_bound\n");
    for r in rows {
        out.push_str(&format!("{},{:e},{:e}\n", r.order, r.bound, r.log10_bound));
    }
    out
}

pub fn parse_bound_table_csv(text: &str) -> Result<Vec<BoundRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "order,bound,log10_bound" => {}
        other => return Err(Error::Parse(format!("unexpected bound table header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse(format!("bound table row {}: {line:?}", i + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(BoundRow {
                order: f[0].parse().map_err(|_| bad())?,
                bound: f[1].parse().map_err(|_| bad())?,
                log10_bound: f[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
