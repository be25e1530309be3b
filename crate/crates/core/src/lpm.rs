//! Lumped-parameter networks on oriented cell complexes.
//!
//! Nodes are 0-cells, components sit on directed 1-cells. Every network matrix
//! is a composition `∂·diag(p)·∂ᵀ` of the boundary operator with a diagonal
//! constitutive map, so the generated ODEs follow directly from the topology.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{to_first_order, SecondOrderSystem, StateSpaceSystem};
use crate::numerics::{SparseMatrix, SystemMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Mechanical,
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Mass,
    Spring,
    Damper,
    ForceSource,
    ThermalResistor,
    ThermalCapacitor,
    FluxSource,
}

impl Role {
    pub fn domain(self) -> Domain {
        match self {
            Role::Mass | Role::Spring | Role::Damper | Role::ForceSource => Domain::Mechanical,
            _ => Domain::Thermal,
        }
    }

    pub fn is_source(self) -> bool {
        matches!(self, Role::ForceSource | Role::FluxSource)
    }

    /// Storage elements must connect a node to ground.
    fn is_storage(self) -> bool {
        matches!(self, Role::Mass | Role::ThermalCapacitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub domain: Domain,
    #[serde(default)]
    pub is_ground: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: String,
    pub domain: Domain,
    pub role: Role,
    pub tail: String,
    pub head: String,
    /// Constitutive parameter; for sources an optional gain (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transformer {
    pub thermal_node: String,
    pub mech_node: String,
    pub ratio_param: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Displacement,
    Temperature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    /// Source edges driven together by the single scalar input.
    pub edges: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub node: String,
    pub quantity: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSpec {
    pub input: InputSpec,
    pub output: OutputSpec,
}

/// Oriented cell complex with component roles on its 1-cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellComplex {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub transformers: Vec<Transformer>,
    pub io: IoSpec,
}

/// One parameter value with optional positive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Param {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

impl Param {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            lower: None,
            upper: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ParamRepr {
    Plain(f64),
    Full(Param),
}

/// Named constitutive parameters (kg, N/m, N·s/m, K/W, J/K, N/K).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct ParamSet(pub BTreeMap<String, Param>);

impl<'de> Deserialize<'de> for ParamSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, ParamRepr>::deserialize(d)?;
        Ok(ParamSet(
            raw.into_iter()
                .map(|(k, v)| {
                    let p = match v {
                        ParamRepr::Plain(x) => Param::new(x),
                        ParamRepr::Full(p) => p,
                    };
                    (k, p)
                })
                .collect(),
        ))
    }
}

impl ParamSet {
    pub fn from_values<'a>(values: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        ParamSet(values.into_iter().map(|(k, v)| (k.to_string(), Param::new(v))).collect())
    }

    pub fn value(&self, name: &str) -> Result<f64> {
        self.0
            .get(name)
            .map(|p| p.value)
            .ok_or_else(|| Error::invalid(format!("parameter '{name}' is not defined")))
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0
            .entry(name.to_string())
            .and_modify(|p| p.value = value)
            .or_insert_with(|| Param::new(value));
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.0.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

/// Topology file: the complex plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub transformers: Vec<Transformer>,
    pub io: IoSpec,
    pub params: ParamSet,
}

impl Topology {
    pub fn complex(&self) -> CellComplex {
        CellComplex {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            transformers: self.transformers.clone(),
            io: self.io.clone(),
        }
    }

    pub fn from_parts(complex: CellComplex, params: ParamSet) -> Self {
        Self {
            nodes: complex.nodes,
            edges: complex.edges,
            transformers: complex.transformers,
            io: complex.io,
            params,
        }
    }

    /// Validate the complex and the parameter set against each other.
    pub fn validate(&self) -> Result<()> {
        let complex = self.complex();
        complex.validate()?;
        complex.check_params(&self.params)
    }
}

/// Signed node–edge incidence (boundary operator) restricted to one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub matrix: DMatrix<f64>,
}

impl CellComplex {
    fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn has_domain(&self, domain: Domain) -> bool {
        self.nodes.iter().any(|n| n.domain == domain && !n.is_ground)
    }

    /// Non-ground nodes of a domain in declaration order.
    pub fn free_nodes(&self, domain: Domain) -> Vec<&Node> {
        self.nodes.iter().filter(|n| n.domain == domain && !n.is_ground).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(Error::invalid(format!("duplicate node id '{}'", n.id)));
            }
        }
        let mut seen_e = HashSet::new();
        for e in &self.edges {
            if !seen_e.insert(e.id.as_str()) {
                return Err(Error::invalid(format!("duplicate edge id '{}'", e.id)));
            }
            if e.role.domain() != e.domain {
                return Err(Error::invalid(format!("edge '{}': role {:?} does not belong to the {:?} domain", e.id, e.role, e.domain)));
            }
            if e.tail == e.head {
                return Err(Error::invalid(format!("edge '{}' is a self-loop", e.id)));
            }
            for end in [&e.tail, &e.head] {
                let n = self
                    .node(end)
                    .ok_or_else(|| Error::invalid(format!("edge '{}' references unknown node '{end}'", e.id)))?;
                if n.domain != e.domain {
                    return Err(Error::invalid(format!("edge '{}' connects to node '{end}' of another domain", e.id)));
                }
            }
            if e.role.is_storage() {
                let grounded = [&e.tail, &e.head].iter().any(|id| self.node(id).is_some_and(|n| n.is_ground));
                if !grounded {
                    return Err(Error::invalid(format!("storage edge '{}' must be incident to the ground node", e.id)));
                }
            }
            if !e.role.is_source() && e.param_name.is_none() {
                return Err(Error::invalid(format!("edge '{}' has no param_name", e.id)));
            }
        }
        for domain in [Domain::Mechanical, Domain::Thermal] {
            let nodes: Vec<&Node> = self.nodes.iter().filter(|n| n.domain == domain).collect();
            if nodes.is_empty() {
                continue;
            }
            let grounds: Vec<&&Node> = nodes.iter().filter(|n| n.is_ground).collect();
            if grounds.len() != 1 {
                return Err(Error::invalid(format!(
                    "{domain:?} domain needs exactly one ground node, found {}",
                    grounds.len()
                )));
            }
            self.check_connected(domain, &grounds[0].id)?;
        }
        for t in &self.transformers {
            match self.node(&t.thermal_node) {
                Some(n) if n.domain == Domain::Thermal && !n.is_ground => {}
                _ => return Err(Error::invalid(format!("transformer references unknown thermal node '{}'", t.thermal_node))),
            }
            match self.node(&t.mech_node) {
                Some(n) if n.domain == Domain::Mechanical && !n.is_ground => {}
                _ => return Err(Error::invalid(format!("transformer references unknown mechanical node '{}'", t.mech_node))),
            }
        }
        if self.io.input.edges.is_empty() {
            return Err(Error::invalid("io.input.edges must name at least one source edge"));
        }
        for id in &self.io.input.edges {
            match self.edge(id) {
                Some(e) if e.role.is_source() => {}
                Some(_) => return Err(Error::invalid(format!("input edge '{id}' is not a source"))),
                None => return Err(Error::invalid(format!("input edge '{id}' does not exist"))),
            }
        }
        let out = self
            .node(&self.io.output.node)
            .ok_or_else(|| Error::invalid(format!("output node '{}' does not exist", self.io.output.node)))?;
        let expected = match self.io.output.quantity {
            Quantity::Displacement => Domain::Mechanical,
            Quantity::Temperature => Domain::Thermal,
        };
        if out.domain != expected || out.is_ground {
            return Err(Error::invalid(format!(
                "output node '{}' cannot carry a {:?} output",
                out.id, self.io.output.quantity
            )));
        }
        Ok(())
    }

    fn check_connected(&self, domain: Domain, ground: &str) -> Result<()> {
        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in self.edges.iter().filter(|e| e.domain == domain) {
            adj.entry(&e.tail).or_default().push(&e.head);
            adj.entry(&e.head).or_default().push(&e.tail);
        }
        let mut seen: HashSet<&str> = HashSet::from([ground]);
        let mut stack = vec![ground];
        while let Some(n) = stack.pop() {
            for &m in adj.get(n).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        for n in self.nodes.iter().filter(|n| n.domain == domain) {
            if !seen.contains(n.id.as_str()) {
                return Err(Error::invalid(format!("node '{}' is not connected to the {domain:?} ground", n.id)));
            }
        }
        Ok(())
    }

    /// Every referenced parameter exists; constitutive values are positive.
    pub fn check_params(&self, params: &ParamSet) -> Result<()> {
        for e in &self.edges {
            if let Some(name) = &e.param_name {
                let v = params.value(name).map_err(|_| {
                    Error::invalid(format!("edge '{}' references undefined parameter '{name}'", e.id))
                })?;
                if !v.is_finite() {
                    return Err(Error::invalid(format!("parameter '{name}' is not finite")));
                }
                if !e.role.is_source() && !(v > 0.0) {
                    return Err(Error::invalid(format!("parameter '{name}' of edge '{}' must be positive, got {v}", e.id)));
                }
            }
        }
        for t in &self.transformers {
            let v = params.value(&t.ratio_param).map_err(|_| {
                Error::invalid(format!("transformer references undefined parameter '{}'", t.ratio_param))
            })?;
            if !v.is_finite() {
                return Err(Error::invalid(format!("parameter '{}' is not finite", t.ratio_param)));
            }
        }
        for (name, p) in &params.0 {
            for b in [p.lower, p.upper].into_iter().flatten() {
                if !(b > 0.0) || !b.is_finite() {
                    return Err(Error::invalid(format!("bounds of '{name}' must be finite and positive")));
                }
            }
            if let (Some(lo), Some(hi)) = (p.lower, p.upper) {
                if lo > hi {
                    return Err(Error::invalid(format!("parameter '{name}' has lower bound above upper bound")));
                }
            }
            if p.lower.is_some_and(|lo| p.value < lo) || p.upper.is_some_and(|hi| p.value > hi) {
                return Err(Error::invalid(format!("parameter '{name}' = {} lies outside its bounds", p.value)));
            }
        }
        Ok(())
    }

    /// Parameters that enter constitutive laws or transformers (fit candidates).
    pub fn fit_candidates(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for name in self
            .edges
            .iter()
            .filter(|e| !e.role.is_source())
            .filter_map(|e| e.param_name.clone())
            .chain(self.transformers.iter().map(|t| t.ratio_param.clone()))
        {
            if !out.contains(&name) {
                out.push(name);
            }
        }
        out
    }
}

/// Boundary operator of one domain restricted to `roles` (all roles when empty).
/// `+1` at the head, `−1` at the tail; the ground row is removed.
pub fn incidence(complex: &CellComplex, domain: Domain, roles: &[Role]) -> IncidenceMatrix {
    full_incidence(complex, domain, roles, false)
}

/// As [`incidence`] but keeping the ground row.
pub fn incidence_with_ground(complex: &CellComplex, domain: Domain, roles: &[Role]) -> IncidenceMatrix {
    full_incidence(complex, domain, roles, true)
}

fn full_incidence(complex: &CellComplex, domain: Domain, roles: &[Role], keep_ground: bool) -> IncidenceMatrix {
    let rows: Vec<&Node> = complex
        .nodes
        .iter()
        .filter(|n| n.domain == domain && (keep_ground || !n.is_ground))
        .collect();
    let cols: Vec<&Edge> = complex
        .edges
        .iter()
        .filter(|e| e.domain == domain && (roles.is_empty() || roles.contains(&e.role)))
        .collect();
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (j, e) in cols.iter().enumerate() {
        for (i, n) in rows.iter().enumerate() {
            if n.id == e.head {
                m[(i, j)] += 1.0;
            }
            if n.id == e.tail {
                m[(i, j)] -= 1.0;
            }
        }
    }
    IncidenceMatrix {
        rows: rows.iter().map(|n| n.id.clone()).collect(),
        cols: cols.iter().map(|e| e.id.clone()).collect(),
        matrix: m,
    }
}

/// `∂·diag(p)·∂ᵀ` for one role.
fn network_matrix(complex: &CellComplex, params: &ParamSet, domain: Domain, role: Role, invert: bool) -> Result<DMatrix<f64>> {
    let inc = incidence(complex, domain, &[role]);
    let mut weights = Vec::with_capacity(inc.cols.len());
    for id in &inc.cols {
        let e = complex.edge(id).expect("incidence columns come from the complex");
        let name = e.param_name.as_deref().expect("validated: non-source edges carry a parameter");
        let v = params.value(name)?;
        if !(v > 0.0) {
            return Err(Error::invalid(format!("parameter '{name}' must be positive, got {v}")));
        }
        weights.push(if invert { 1.0 / v } else { v });
    }
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(weights));
    Ok(&inc.matrix * w * inc.matrix.transpose())
}

/// Source vector: `∂_src·gain` over the sources named in `io.input`.
fn source_vector(complex: &CellComplex, params: &ParamSet, domain: Domain) -> Result<DMatrix<f64>> {
    let inc = incidence(complex, domain, &[Role::ForceSource, Role::FluxSource]);
    let mut f = DMatrix::zeros(inc.rows.len(), 1);
    for (j, id) in inc.cols.iter().enumerate() {
        if !complex.io.input.edges.contains(id) {
            continue;
        }
        let e = complex.edge(id).expect("incidence columns come from the complex");
        let gain = match &e.param_name {
            Some(name) => params.value(name)?,
            None => 1.0,
        };
        for i in 0..inc.rows.len() {
            f[(i, 0)] += inc.matrix[(i, j)] * gain;
        }
    }
    Ok(f)
}

fn output_row(complex: &CellComplex, domain: Domain) -> DMatrix<f64> {
    let nodes = complex.free_nodes(domain);
    let mut c = DMatrix::zeros(1, nodes.len());
    let wanted = match complex.io.output.quantity {
        Quantity::Displacement => Domain::Mechanical,
        Quantity::Temperature => Domain::Thermal,
    };
    if wanted == domain {
        if let Some(i) = nodes.iter().position(|n| n.id == complex.io.output.node) {
            c[(0, i)] = 1.0;
        }
    }
    c
}

fn require_storage(m: &DMatrix<f64>, nodes: &[&Node], what: &str) -> Result<()> {
    for (i, n) in nodes.iter().enumerate() {
        if !(m[(i, i)] > 0.0) {
            return Err(Error::invalid(format!("node '{}' has no {what} attached (singular matrix)", n.id)));
        }
    }
    Ok(())
}

/// `M·q̈ + D·q̇ + K·q = F·u` over the non-ground mechanical nodes.
pub fn assemble_mechanical(complex: &CellComplex, params: &ParamSet) -> Result<SecondOrderSystem> {
    complex.validate()?;
    complex.check_params(params)?;
    let nodes = complex.free_nodes(Domain::Mechanical);
    if nodes.is_empty() {
        return Err(Error::invalid("complex has no mechanical nodes"));
    }
    let m = network_matrix(complex, params, Domain::Mechanical, Role::Mass, false)?;
    require_storage(&m, &nodes, "mass")?;
    let k = network_matrix(complex, params, Domain::Mechanical, Role::Spring, false)?;
    let d = network_matrix(complex, params, Domain::Mechanical, Role::Damper, false)?;
    let f = source_vector(complex, params, Domain::Mechanical)?;
    SecondOrderSystem::new(
        SparseMatrix::from_dense(&m),
        SparseMatrix::from_dense(&d),
        SparseMatrix::from_dense(&k),
        f,
        output_row(complex, Domain::Mechanical),
    )
}

/// `C_th·Ṫ = −G_th·T + q·u` over the non-ground thermal nodes, `G_th = ∂·diag(1/R)·∂ᵀ`.
pub fn assemble_thermal(complex: &CellComplex, params: &ParamSet) -> Result<StateSpaceSystem> {
    complex.validate()?;
    complex.check_params(params)?;
    let nodes = complex.free_nodes(Domain::Thermal);
    if nodes.is_empty() {
        return Err(Error::invalid("complex has no thermal nodes"));
    }
    let c_th = network_matrix(complex, params, Domain::Thermal, Role::ThermalCapacitor, false)?;
    require_storage(&c_th, &nodes, "thermal capacitance")?;
    let g_th = network_matrix(complex, params, Domain::Thermal, Role::ThermalResistor, true)?;
    let q = source_vector(complex, params, Domain::Thermal)?;
    StateSpaceSystem::new(
        SystemMatrix::Sparse(SparseMatrix::from_dense(&c_th)),
        SystemMatrix::Sparse(SparseMatrix::from_dense(&(-g_th))),
        q,
        output_row(complex, Domain::Thermal),
    )
}

/// Index pair `(mechanical dof, thermal state)` for a transformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformerLink {
    pub mech_index: usize,
    pub thermal_index: usize,
}

/// Combine a mechanical network and a thermal network over the state
/// `(q, q̇, T)`: each transformer adds the force `n·T(thermal)` at its
/// mechanical node; mechanical states never enter the thermal equations.
pub fn couple_transformer(
    mech: &SecondOrderSystem,
    thermal: &StateSpaceSystem,
    links: &[TransformerLink],
    ratios: &[f64],
) -> Result<StateSpaceSystem> {
    if links.len() != ratios.len() {
        return Err(Error::dims("one ratio per transformer is required"));
    }
    let n = mech.dofs();
    let nt = thermal.order();
    if thermal.inputs() != mech.input_map().ncols() || thermal.outputs() != mech.output_map().nrows() {
        return Err(Error::dims("mechanical and thermal networks differ in input/output counts"));
    }
    let mut coupling = Vec::new();
    for (link, &r) in links.iter().zip(ratios) {
        if link.mech_index >= n || link.thermal_index >= nt {
            return Err(Error::invalid(format!(
                "transformer references state ({}, {}) outside the networks ({n}, {nt})",
                link.mech_index, link.thermal_index
            )));
        }
        coupling.push((link.mech_index, link.thermal_index, r));
    }
    let coupling = SparseMatrix::from_triplets(n, nt, coupling)?;
    let id = SparseMatrix::identity(n);
    let e = SparseMatrix::block_diag(&[&id, mech.mass(), &thermal.e().to_sparse()]);
    let neg_k = mech.stiffness().scaled(-1.0);
    let neg_d = mech.damping().scaled(-1.0);
    let a_th = thermal.a().to_sparse();
    let a = SparseMatrix::from_blocks(
        &[n, n, nt],
        &[n, n, nt],
        &[(0, 1, &id), (1, 0, &neg_k), (1, 1, &neg_d), (1, 2, &coupling), (2, 2, &a_th)],
    )?;
    let m = thermal.inputs();
    let p = thermal.outputs();
    let mut b = DMatrix::zeros(2 * n + nt, m);
    b.view_mut((n, 0), (n, m)).copy_from(mech.input_map());
    b.view_mut((2 * n, 0), (nt, m)).copy_from(thermal.b());
    let mut c = DMatrix::zeros(p, 2 * n + nt);
    c.view_mut((0, 0), (p, n)).copy_from(mech.output_map());
    c.view_mut((0, 2 * n), (p, nt)).copy_from(thermal.c());
    StateSpaceSystem::new(SystemMatrix::Sparse(e), SystemMatrix::Sparse(a), b, c)
}

/// State-variable families. Only `Displacement` (mechanical) and
/// `Temperature` (thermal) have equation generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateVariable {
    Displacement,
    Temperature,
}

/// Recognised names of the state-variable options without a generator.
const UNSUPPORTED_STATES: [&str; 6] = ["velocity", "momentum", "force", "heat_flux", "entropy", "heat"];

impl FromStr for StateVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "displacement" => Ok(StateVariable::Displacement),
            "temperature" => Ok(StateVariable::Temperature),
            other if UNSUPPORTED_STATES.contains(&other) => Err(Error::Unsupported(format!(
                "state variable '{other}' is not implemented: of the 8 state-variable options only \
                 'displacement' and 'temperature' have equation generators"
            ))),
            other => Err(Error::Parse(format!("unknown state variable '{other}'"))),
        }
    }
}

impl fmt::Display for StateVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateVariable::Displacement => "displacement",
            StateVariable::Temperature => "temperature",
        })
    }
}

/// Parse a comma-separated list such as `"displacement,temperature"`.
pub fn parse_state_choice(s: &str) -> Result<Vec<StateVariable>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

/// State variables the complex needs: displacement per mechanical domain, temperature per thermal one.
pub fn default_state_choice(complex: &CellComplex) -> Vec<StateVariable> {
    let mut out = Vec::new();
    if complex.has_domain(Domain::Mechanical) {
        out.push(StateVariable::Displacement);
    }
    if complex.has_domain(Domain::Thermal) {
        out.push(StateVariable::Temperature);
    }
    out
}

/// Generate the first-order equations of a complex.
pub fn generate_equations(complex: &CellComplex, params: &ParamSet, states: &[StateVariable]) -> Result<StateSpaceSystem> {
    complex.validate()?;
    complex.check_params(params)?;
    let mech = complex.has_domain(Domain::Mechanical);
    let therm = complex.has_domain(Domain::Thermal);
    if mech && !states.contains(&StateVariable::Displacement) {
        return Err(Error::Unsupported(
            "mechanical networks are generated with displacement states only".into(),
        ));
    }
    if therm && !states.contains(&StateVariable::Temperature) {
        return Err(Error::Unsupported("thermal networks are generated with temperature states only".into()));
    }
    match (mech, therm) {
        (true, false) => to_first_order(&assemble_mechanical(complex, params)?),
        (false, true) => assemble_thermal(complex, params),
        (true, true) => {
            let m = assemble_mechanical(complex, params)?;
            let t = assemble_thermal(complex, params)?;
            let mech_nodes = complex.free_nodes(Domain::Mechanical);
            let th_nodes = complex.free_nodes(Domain::Thermal);
            let mut links = Vec::new();
            let mut ratios = Vec::new();
            for tr in &complex.transformers {
                links.push(TransformerLink {
                    mech_index: mech_nodes.iter().position(|n| n.id == tr.mech_node).expect("validated"),
                    thermal_index: th_nodes.iter().position(|n| n.id == tr.thermal_node).expect("validated"),
                });
                ratios.push(params.value(&tr.ratio_param)?);
            }
            couple_transformer(&m, &t, &links, &ratios)
        }
        (false, false) => Err(Error::invalid("complex has no non-ground nodes")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn node(id: &str, domain: Domain, ground: bool) -> Node {
        Node {
            id: id.into(),
            domain,
            is_ground: ground,
        }
    }

    pub(crate) fn edge(id: &str, role: Role, tail: &str, head: &str, param: Option<&str>) -> Edge {
        Edge {
            id: id.into(),
            domain: role.domain(),
            role,
            tail: tail.into(),
            head: head.into(),
            param_name: param.map(Into::into),
        }
    }

    fn spring_chain() -> CellComplex {
        use Domain::Mechanical as M;
        CellComplex {
            nodes: vec![node("g", M, true), node("1", M, false), node("2", M, false)],
            edges: vec![
                edge("k1", Role::Spring, "g", "1", Some("k1")),
                edge("k2", Role::Spring, "1", "2", Some("k2")),
                edge("m1", Role::Mass, "g", "1", Some("m1")),
                edge("m2", Role::Mass, "g", "2", Some("m2")),
                edge("f", Role::ForceSource, "g", "2", None),
            ],
            transformers: vec![],
            io: IoSpec {
                input: InputSpec { edges: vec!["f".into()] },
                output: OutputSpec {
                    node: "2".into(),
                    quantity: Quantity::Displacement,
                },
            },
        }
    }

    #[test]
    fn single_spring_incidence() {
        use Domain::Mechanical as M;
        let c = CellComplex {
            nodes: vec![node("g", M, true), node("1", M, false)],
            edges: vec![edge("k", Role::Spring, "g", "1", Some("k"))],
            transformers: vec![],
            io: IoSpec {
                input: InputSpec { edges: vec![] },
                output: OutputSpec {
                    node: "1".into(),
                    quantity: Quantity::Displacement,
                },
            },
        };
        assert_eq!(incidence(&c, M, &[]).matrix, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn chain_incidence_and_boundary_property() {
        let c = spring_chain();
        let inc = incidence(&c, Domain::Mechanical, &[Role::Spring]);
        assert_eq!(inc.matrix, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]));
        let full = incidence_with_ground(&c, Domain::Mechanical, &[]);
        for j in 0..full.matrix.ncols() {
            assert_eq!(full.matrix.column(j).sum(), 0.0);
        }
        let empty = incidence(&c, Domain::Mechanical, &[Role::Damper]);
        assert_eq!(empty.matrix.shape(), (2, 0));
    }

    #[test]
    fn unit_chain_frequencies() {
        let p = ParamSet::from_values([("k1", 1.0), ("k2", 1.0), ("m1", 1.0), ("m2", 1.0)]);
        let mut c = spring_chain();
        c.edges.push(edge("d", Role::Damper, "g", "1", Some("d")));
        let mut p2 = p.clone();
        p2.set("d", 1e-30);
        let sos = assemble_mechanical(&c, &p2).unwrap();
        let w2: Vec<f64> = sos.natural_frequencies().unwrap().iter().map(|w| w * w).collect();
        let s5 = 5.0f64.sqrt();
        assert!((w2[0] - (3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((w2[1] - (3.0 + s5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn missing_mass_rejected() {
        let mut c = spring_chain();
        c.edges.retain(|e| e.id != "m2");
        let p = ParamSet::from_values([("k1", 1.0), ("k2", 1.0), ("m1", 1.0)]);
        assert!(assemble_mechanical(&c, &p).is_err());
    }

    #[test]
    fn validation_errors() {
        let p = ParamSet::from_values([("k1", 1.0), ("k2", 1.0), ("m1", 1.0), ("m2", 1.0)]);
        let mut c = spring_chain();
        c.edges[0].head = "nowhere".into();
        assert!(c.validate().is_err());
        let mut c = spring_chain();
        c.edges[2].tail = "2".into();
        assert!(c.validate().is_err(), "floating mass");
        let c = spring_chain();
        let mut bad = p.clone();
        bad.set("k1", -1.0);
        assert!(assemble_mechanical(&c, &bad).is_err());
        let mut missing = p.clone();
        missing.0.remove("k2");
        assert!(assemble_mechanical(&c, &missing).is_err());
    }

    #[test]
    fn state_choice_parsing() {
        assert_eq!(parse_state_choice("displacement,temperature").unwrap().len(), 2);
        match "momentum".parse::<StateVariable>() {
            Err(Error::Unsupported(msg)) => assert!(msg.contains("8")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!("bogus".parse::<StateVariable>(), Err(Error::Parse(_))));
    }

    #[test]
    fn params_accept_plain_and_bounded_forms() {
        let p: ParamSet = serde_json::from_str(r#"{"a": 2.0, "b": {"value": 3.0, "lower": 1.0, "upper": 10.0}}"#).unwrap();
        assert_eq!(p.value("a").unwrap(), 2.0);
        assert_eq!(p.get("b").unwrap().upper, Some(10.0));
    }
}
