//! 1D finite-element rod models used as high-fidelity systems.
//!
//! Linear two-node elements on a uniform mesh over `[0, L]`. The node at
//! `x = 0` is clamped (and held at the reference temperature); loads act at
//! `x = L`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{to_first_order, SecondOrderSystem, StateSpaceSystem};
use crate::numerics::{SparseMatrix, SystemMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RodOutput {
    TipDisplacement,
    AverageDisplacement,
}

fn default_pressure() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.1
}

fn default_beta() -> f64 {
    1e-4
}

/// Elastic rod clamped at `x = 0`, loaded by a uniform end pressure at `x = L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RodSpec {
    pub n_elem: usize,
    pub length: f64,
    pub area: f64,
    pub youngs: f64,
    pub density: f64,
    #[serde(default = "default_alpha")]
    pub rayleigh_alpha: f64,
    #[serde(default = "default_beta")]
    pub rayleigh_beta: f64,
    pub output: RodOutput,
    /// End pressure per unit input (tension positive).
    #[serde(default = "default_pressure")]
    pub pressure: f64,
}

impl RodSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_elem == 0 {
            return Err(Error::invalid("n_elem must be at least 1"));
        }
        positive("length", self.length)?;
        positive("area", self.area)?;
        positive("youngs", self.youngs)?;
        positive("density", self.density)?;
        positive("rayleigh_alpha", self.rayleigh_alpha)?;
        positive("rayleigh_beta", self.rayleigh_beta)?;
        finite("pressure", self.pressure)
    }
}

/// Heat-conducting rod held at temperature 0 at `x = 0`, heated by a flux at `x = L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalRodSpec {
    pub n_elem: usize,
    pub length: f64,
    pub area: f64,
    pub conductivity: f64,
    pub vol_heat_capacity: f64,
    /// Heat input (W) at `x = L` per unit input.
    pub flux: f64,
}

impl ThermalRodSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_elem == 0 {
            return Err(Error::invalid("n_elem must be at least 1"));
        }
        positive("length", self.length)?;
        positive("area", self.area)?;
        positive("conductivity", self.conductivity)?;
        positive("vol_heat_capacity", self.vol_heat_capacity)?;
        finite("flux", self.flux)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupledInputs {
    /// One column: pressure and flux switched on together.
    #[default]
    Combined,
    /// Two columns `(pressure, flux)`.
    Separate,
}

/// One-way thermo-elastic rod: temperature drives the structure, not vice versa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledRodSpec {
    pub n_elem: usize,
    pub length: f64,
    pub area: f64,
    pub youngs: f64,
    pub density: f64,
    #[serde(default = "default_alpha")]
    pub rayleigh_alpha: f64,
    #[serde(default = "default_beta")]
    pub rayleigh_beta: f64,
    pub output: RodOutput,
    #[serde(default = "default_pressure")]
    pub pressure: f64,
    pub conductivity: f64,
    pub vol_heat_capacity: f64,
    pub flux: f64,
    pub thermal_expansion: f64,
    #[serde(default)]
    pub inputs: CoupledInputs,
}

impl CoupledRodSpec {
    pub fn mechanical(&self) -> RodSpec {
        RodSpec {
            n_elem: self.n_elem,
            length: self.length,
            area: self.area,
            youngs: self.youngs,
            density: self.density,
            rayleigh_alpha: self.rayleigh_alpha,
            rayleigh_beta: self.rayleigh_beta,
            output: self.output,
            pressure: self.pressure,
        }
    }

    pub fn thermal(&self) -> ThermalRodSpec {
        ThermalRodSpec {
            n_elem: self.n_elem,
            length: self.length,
            area: self.area,
            conductivity: self.conductivity,
            vol_heat_capacity: self.vol_heat_capacity,
            flux: self.flux,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mechanical().validate()?;
        self.thermal().validate()?;
        if !(self.thermal_expansion >= 0.0) || !self.thermal_expansion.is_finite() {
            return Err(Error::invalid("thermal_expansion must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Tagged spec file accepted by the CLI: `{"kind": "rod", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HfmSpec {
    Rod(RodSpec),
    ThermalRod(ThermalRodSpec),
    ThermoelasticRod(CoupledRodSpec),
}

impl HfmSpec {
    pub fn generate(&self) -> Result<StateSpaceSystem> {
        match self {
            HfmSpec::Rod(s) => to_first_order(&rod_elastic(s)?),
            HfmSpec::ThermalRod(s) => rod_heat(s),
            HfmSpec::ThermoelasticRod(s) => rod_thermoelastic(s),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite")))
    }
}

/// Assemble `c·((1,−1),(−1,1))` or `c·((2,1),(1,2))` stencils on the free
/// nodes `1..=n` (node 0 eliminated).
fn assemble(n: usize, coef: f64, diag: f64, off: f64) -> Result<SparseMatrix> {
    let mut t = Vec::with_capacity(4 * n);
    for e in 0..n {
        // element nodes e, e+1; free index = node − 1
        let (i, j) = (e as isize - 1, e as isize);
        for (a, b, v) in [(i, i, diag), (j, j, diag), (i, j, off), (j, i, off)] {
            if a >= 0 && b >= 0 {
                t.push((a as usize, b as usize, coef * v));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, t)
}

fn output_row(n: usize, output: RodOutput) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(1, n);
    match output {
        RodOutput::TipDisplacement => c[(0, n - 1)] = 1.0,
        RodOutput::AverageDisplacement => {
            // (1/L)∫u dx with u(0) = 0 and h/L = 1/n
            let w = 1.0 / n as f64;
            for j in 0..n {
                c[(0, j)] = w;
            }
            c[(0, n - 1)] = 0.5 * w;
        }
    }
    c
}

/// `M·q̈ + D·q̇ + K·q = F·u` for the clamped elastic rod, `D = α·M + β·K`.
pub fn rod_elastic(spec: &RodSpec) -> Result<SecondOrderSystem> {
    spec.validate()?;
    let n = spec.n_elem;
    let h = spec.length / n as f64;
    let k = assemble(n, spec.youngs * spec.area / h, 1.0, -1.0)?;
    let m = assemble(n, spec.density * spec.area * h / 6.0, 2.0, 1.0)?;
    let d = m.linear_combination(spec.rayleigh_alpha, &k, spec.rayleigh_beta)?;
    let mut f = DMatrix::zeros(n, 1);
    f[(n - 1, 0)] = spec.pressure * spec.area;
    SecondOrderSystem::new(m, d, k, f, output_row(n, spec.output))
}

struct Thermal {
    cap: SparseMatrix,
    cond: SparseMatrix,
    load: DMatrix<f64>,
}

fn thermal_matrices(spec: &ThermalRodSpec) -> Result<Thermal> {
    let n = spec.n_elem;
    let h = spec.length / n as f64;
    let cond = assemble(n, spec.conductivity * spec.area / h, 1.0, -1.0)?;
    let cap = assemble(n, spec.vol_heat_capacity * spec.area * h / 6.0, 2.0, 1.0)?;
    let mut load = DMatrix::zeros(n, 1);
    load[(n - 1, 0)] = spec.flux;
    Ok(Thermal { cap, cond, load })
}

/// `C_th·Ṫ = −K_th·T + f·u`, output = temperature at the heated end.
pub fn rod_heat(spec: &ThermalRodSpec) -> Result<StateSpaceSystem> {
    spec.validate()?;
    let th = thermal_matrices(spec)?;
    let n = spec.n_elem;
    let mut c = DMatrix::zeros(1, n);
    c[(0, n - 1)] = 1.0;
    StateSpaceSystem::new(SystemMatrix::Sparse(th.cap), SystemMatrix::Sparse(th.cond.scaled(-1.0)), th.load, c)
}

/// State `(q, q̇, T)`; the thermal-strain load `E·A·α·T̄_e·(−1, +1)` per element
/// couples temperature into the momentum equations only.
pub fn rod_thermoelastic(spec: &CoupledRodSpec) -> Result<StateSpaceSystem> {
    spec.validate()?;
    let n = spec.n_elem;
    let mech = rod_elastic(&spec.mechanical())?;
    let th = thermal_matrices(&spec.thermal())?;

    // coupling G (mechanical free dofs × thermal free dofs)
    let g = spec.youngs * spec.area * spec.thermal_expansion;
    let mut gt = Vec::new();
    for e in 0..n {
        let (i, j) = (e as isize - 1, e as isize);
        for (row, sign) in [(i, -1.0), (j, 1.0)] {
            if row < 0 {
                continue;
            }
            for col in [i, j] {
                if col >= 0 {
                    gt.push((row as usize, col as usize, sign * 0.5 * g));
                }
            }
        }
    }
    let coupling = SparseMatrix::from_triplets(n, n, gt)?;
    let id = SparseMatrix::identity(n);
    let e = SparseMatrix::block_diag(&[&id, mech.mass(), &th.cap]);
    let neg_k = mech.stiffness().scaled(-1.0);
    let neg_d = mech.damping().scaled(-1.0);
    let neg_kth = th.cond.scaled(-1.0);
    let a = SparseMatrix::from_blocks(
        &[n, n, n],
        &[n, n, n],
        &[(0, 1, &id), (1, 0, &neg_k), (1, 1, &neg_d), (1, 2, &coupling), (2, 2, &neg_kth)],
    )?;
    let mut bp = DMatrix::zeros(3 * n, 1);
    bp.view_mut((n, 0), (n, 1)).copy_from(mech.input_map());
    let mut bq = DMatrix::zeros(3 * n, 1);
    bq.view_mut((2 * n, 0), (n, 1)).copy_from(&th.load);
    let b = match spec.inputs {
        CoupledInputs::Combined => bp + bq,
        CoupledInputs::Separate => {
            let mut b = DMatrix::zeros(3 * n, 2);
            b.set_column(0, &bp.column(0));
            b.set_column(1, &bq.column(0));
            b
        }
    };
    let mut c = DMatrix::zeros(1, 3 * n);
    c.view_mut((0, 0), (1, n)).copy_from(mech.output_map());
    StateSpaceSystem::new(SystemMatrix::Sparse(e), SystemMatrix::Sparse(a), b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{eval_transfer, is_stable, poles};
    use crate::numerics::lu_solve;
    use nalgebra::Complex;

    fn unit_rod(n_elem: usize, output: RodOutput) -> RodSpec {
        RodSpec {
            n_elem,
            length: 1.0,
            area: 1.0,
            youngs: 1.0,
            density: 1.0,
            rayleigh_alpha: 0.1,
            rayleigh_beta: 1e-4,
            output,
            pressure: 1.0,
        }
    }

    fn unit_thermal(n_elem: usize) -> ThermalRodSpec {
        ThermalRodSpec {
            n_elem,
            length: 2.0,
            area: 0.5,
            conductivity: 3.0,
            vol_heat_capacity: 1.5,
            flux: 0.7,
        }
    }

    fn coupled(n_elem: usize, alpha_th: f64) -> CoupledRodSpec {
        let r = unit_rod(n_elem, RodOutput::TipDisplacement);
        let t = unit_thermal(n_elem);
        CoupledRodSpec {
            n_elem,
            length: r.length,
            area: r.area,
            youngs: r.youngs,
            density: r.density,
            rayleigh_alpha: r.rayleigh_alpha,
            rayleigh_beta: r.rayleigh_beta,
            output: r.output,
            pressure: r.pressure,
            conductivity: t.conductivity,
            vol_heat_capacity: t.vol_heat_capacity,
            flux: t.flux,
            thermal_expansion: alpha_th,
            inputs: CoupledInputs::Combined,
        }
    }

    #[test]
    fn single_element_by_hand() {
        let sos = rod_elastic(&unit_rod(1, RodOutput::TipDisplacement)).unwrap();
        assert_eq!(sos.stiffness().to_dense()[(0, 0)], 1.0);
        assert!((sos.mass().to_dense()[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(sos.input_map()[(0, 0)], 1.0);
    }

    #[test]
    fn static_tip_displacement_is_exact() {
        for n in [1, 3, 10, 37] {
            let mut spec = unit_rod(n, RodOutput::TipDisplacement);
            spec.youngs = 7.0;
            spec.area = 0.3;
            spec.pressure = 2.0;
            let sos = rod_elastic(&spec).unwrap();
            let q = lu_solve(&sos.stiffness().to_dense(), sos.input_map()).unwrap();
            let tip = (sos.output_map() * q)[(0, 0)];
            assert!((tip - 2.0 * 1.0 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn average_displacement_of_linear_profile() {
        // static u(x) = P·x/(E·A): mean over [0, L] is half the tip value
        let sos = rod_elastic(&unit_rod(8, RodOutput::AverageDisplacement)).unwrap();
        let q = lu_solve(&sos.stiffness().to_dense(), sos.input_map()).unwrap();
        assert!(((sos.output_map() * q)[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn first_order_rod_is_stable() {
        let sys = to_first_order(&rod_elastic(&unit_rod(20, RodOutput::TipDisplacement)).unwrap()).unwrap();
        assert_eq!(sys.order(), 40);
        assert!(is_stable(&sys).unwrap());
    }

    #[test]
    fn heat_rod_steady_state_and_poles() {
        let spec = unit_thermal(12);
        let sys = rod_heat(&spec).unwrap();
        let t = lu_solve(&(-sys.a().to_dense()), sys.b()).unwrap();
        let expect = spec.flux * spec.length / (spec.conductivity * spec.area);
        assert!(((sys.c() * t)[(0, 0)] - expect).abs() < 1e-10);
        assert!(poles(&sys).unwrap().iter().all(|p| p.re < 0.0 && p.im.abs() < 1e-9));
    }

    #[test]
    fn heat_rod_single_element() {
        let sys = rod_heat(&unit_thermal(1)).unwrap();
        // k·A/h = 3·0.5/2, ρc·A·h/6·2 = 1.5·0.5·2/3
        assert!((sys.a().to_dense()[(0, 0)] + 0.75).abs() < 1e-15);
        assert!((sys.e().to_dense()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_expansion_decouples() {
        let sys = rod_thermoelastic(&coupled(6, 0.0)).unwrap();
        let mut spec = unit_rod(6, RodOutput::TipDisplacement);
        spec.pressure = 1.0;
        let mech = to_first_order(&rod_elastic(&spec).unwrap()).unwrap();
        for w in [0.1, 1.0, 5.0] {
            let s = Complex::new(0.0, w);
            let d = eval_transfer(&sys, s).unwrap()[(0, 0)] - eval_transfer(&mech, s).unwrap()[(0, 0)];
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn thermal_steady_displacement() {
        let mut spec = coupled(16, 1e-3);
        spec.pressure = 0.0;
        let sys = rod_thermoelastic(&spec).unwrap();
        let x = lu_solve(&(-sys.a().to_dense()), sys.b()).unwrap();
        let dt = spec.flux * spec.length / (spec.conductivity * spec.area);
        let expect = spec.thermal_expansion * dt * spec.length / 2.0;
        assert!(((sys.c() * x)[(0, 0)] - expect).abs() < 1e-12);
    }

    #[test]
    fn one_way_zero_block() {
        let n = 5;
        let a = rod_thermoelastic(&coupled(n, 0.01)).unwrap().a().to_dense();
        assert!(a.view((2 * n, 0), (n, 2 * n)).iter().all(|&v| v == 0.0));
        assert!(a.view((n, 2 * n), (n, n)).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn spec_json_rejects_unknown_fields() {
        let ok = r#"{"kind":"rod","n_elem":4,"length":1,"area":1,"youngs":1,"density":1,"output":"tip_displacement"}"#;
        let spec: HfmSpec = serde_json::from_str(ok).unwrap();
        assert_eq!(spec.generate().unwrap().order(), 8);
        let bad = r#"{"kind":"rod","n_elem":4,"length":1,"area":1,"youngs":1,"density":1,"output":"tip_displacement","colour":3}"#;
        assert!(serde_json::from_str::<HfmSpec>(bad).is_err());
    }
}
