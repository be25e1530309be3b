//! Reduce → simulate → fit → certify.
//!
//! A CURE ROM of the high-fidelity model produces step-response training data
//! for a lumped-parameter network. The network's error against the HFM is
//! bounded by `ε_total = ε_M + ε_rel`, where `ε_M` is the CURE bound and
//! `ε_rel = ‖G_rom − G_lpm‖/‖G_rom‖`. Since `‖G_rom‖ ≤ ‖G‖` for a
//! pseudo-optimal ROM, the triangle inequality makes `ε_total` an upper bound
//! of `‖G − G_lpm‖/‖G‖`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpm::{generate_equations, ParamSet, Topology};
use crate::lti::{difference_system, h2_norm, simulate, to_first_order, Excitation, SecondOrderSystem, StateSpaceSystem, TimeSeries};
use crate::mor::{cure_with, CureLedger, CureOptions};
use crate::sysid::{fit_with, FitOptions, FitProblem, FitResult};

/// `‖G_rom − G_lpm‖_H₂ / ‖G_rom‖_H₂`.
pub fn relative_h2(lpm: &StateSpaceSystem, rom: &StateSpaceSystem) -> Result<f64> {
    let diff = difference_system(rom, lpm)?;
    let denom = h2_norm(rom)?;
    if !(denom > 0.0) {
        return Err(Error::invalid("reference ROM has zero H2 norm"));
    }
    Ok(h2_norm(&diff)? / denom)
}

/// `ε_M + ε_rel`.
pub fn total_bound(eps_m: f64, eps_rel: f64) -> Result<f64> {
    for (name, v) in [("eps_m", eps_m), ("eps_rel", eps_rel)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    Ok(eps_m + eps_rel)
}

#[derive(Debug, Clone)]
pub enum HfmModel {
    FirstOrder(StateSpaceSystem),
    SecondOrder(SecondOrderSystem),
}

impl From<StateSpaceSystem> for HfmModel {
    fn from(s: StateSpaceSystem) -> Self {
        HfmModel::FirstOrder(s)
    }
}

impl From<SecondOrderSystem> for HfmModel {
    fn from(s: SecondOrderSystem) -> Self {
        HfmModel::SecondOrder(s)
    }
}

impl HfmModel {
    pub fn first_order(self) -> Result<StateSpaceSystem> {
        match self {
            HfmModel::FirstOrder(s) => Ok(s),
            HfmModel::SecondOrder(s) => to_first_order(&s),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HybridConfig {
    pub cure: CureOptions,
    /// Step magnitudes of the training excitation.
    pub step: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub fit: FitOptions,
    /// Largest HFM order for which `‖G − G_lpm‖/‖G‖` is also measured directly.
    pub measure_limit: usize,
}

impl HybridConfig {
    pub fn new(tol: f64, max_order: usize, dt: f64, t_end: f64) -> Self {
        Self {
            cure: CureOptions::new(tol, max_order),
            step: vec![1.0],
            dt,
            t_end,
            fit: FitOptions::default(),
            measure_limit: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridReport {
    /// CURE a priori relative H₂ bound of the ROM.
    pub eps_m: f64,
    /// Relative H₂ distance of the fitted network from the ROM.
    pub eps_rel: f64,
    pub eps_total: f64,
    pub nrmse: f64,
    pub rom_order: usize,
    pub lpm_order: usize,
    pub hfm_order: usize,
    /// `‖G − G_lpm‖/‖G‖` when the HFM is small enough to evaluate it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_total: Option<f64>,
    pub fit_converged: bool,
    pub fit_iterations: usize,
    pub params: ParamSet,
}

#[derive(Debug, Clone)]
pub struct HybridOutcome {
    pub report: HybridReport,
    pub ledger: CureLedger,
    pub lpm: StateSpaceSystem,
    pub fit: FitResult,
    /// ROM step response used as training data.
    pub training: TimeSeries,
    /// Fitted network's response on the same grid.
    pub lpm_response: TimeSeries,
}

pub fn pipeline(hfm: impl Into<HfmModel>, topology: &Topology, cfg: &HybridConfig) -> Result<HybridOutcome> {
    topology.validate().map_err(|e| e.in_stage("topology"))?;
    let hfm = hfm.into().first_order().map_err(|e| e.in_stage("hfm"))?;

    let ledger = cure_with(&hfm, &cfg.cure).map_err(|e| e.in_stage("cure"))?;
    let rom = ledger.accumulated_rom();
    let eps_m = ledger.final_bound();

    let training = simulate(rom, &Excitation::Step(cfg.step.clone()), None, cfg.dt, cfg.t_end)
        .map_err(|e| e.in_stage("simulate"))?;

    let problem = FitProblem::new(topology.complex(), training.clone(), cfg.step.clone(), topology.params.clone(), cfg.dt);
    let fit = fit_with(&problem, &cfg.fit).map_err(|e| e.in_stage("fit"))?;

    let lpm = generate_equations(&problem.complex, &fit.params, &problem.states).map_err(|e| e.in_stage("generate"))?;
    let lpm_response = problem.response(&fit.params).map_err(|e| e.in_stage("fit"))?;
    let eps_rel = relative_h2(&lpm, rom).map_err(|e| e.in_stage("relative_h2"))?;
    let eps_total = total_bound(eps_m, eps_rel).map_err(|e| e.in_stage("bound"))?;

    let measured_total = if hfm.order() <= cfg.measure_limit {
        let num = difference_system(&hfm, &lpm)
            .and_then(|d| h2_norm(&d))
            .map_err(|e| e.in_stage("measure"))?;
        Some(num / ledger.hfm_h2())
    } else {
        None
    };

    let report = HybridReport {
        eps_m,
        eps_rel,
        eps_total,
        nrmse: fit.nrmse,
        rom_order: rom.order(),
        lpm_order: lpm.order(),
        hfm_order: hfm.order(),
        measured_total,
        fit_converged: fit.converged,
        fit_iterations: fit.iterations,
        params: fit.params.clone(),
    };
    Ok(HybridOutcome {
        report,
        ledger,
        lpm,
        fit,
        training,
        lpm_response,
    })
}
