//! Residual and Jacobian of the Galerkin discretization.
//!
//! For test function `wᵢ` the steady residual is
//!
//! ```text
//! Rᵢ = ∫Ω d k(θ) ∇wᵢ·∇θ + h_T wᵢ (θ − θ_amb) + εσ wᵢ (θ⁴ − θ_amb⁴) − wᵢ f
//!    + ∫Σ χ wᵢ ∂θ/∂s + ∫Γq wᵢ qᵖ
//! ```
//!
//! and the transient residual adds `∫Ω d ρ c(θ) wᵢ θ̇`, with `θ̇` supplied by
//! the time integrator as a linear combination of the current iterate and
//! stored history. Properties are evaluated at quadrature points. The
//! Jacobian is the exact derivative, including the `k′(θ)` and `c′(θ)` terms.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{segment_rule, segment_shape, AffineMap, ReferenceTable};
use crate::geometry::Point;
use crate::materials::{heat_capacity_rate, Coolant, SolidMaterial, STEFAN_BOLTZMANN};
use crate::mesh::{Channel, ChannelMesh, ElementOrder, SideCondition};
use crate::sparse::CsrMatrix;

/// Scalar field of position and time.
pub type SpatialFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Applied heat flux on the bottom face, W/m².
#[derive(Clone)]
pub enum Source {
    Uniform(f64),
    Field(SpatialFn),
}

impl Source {
    pub fn eval(&self, x: Point, t: f64) -> f64 {
        match self {
            Source::Uniform(f) => *f,
            Source::Field(f) => f(x, t),
        }
    }

    pub fn uniform_value(&self) -> Option<f64> {
        match self {
            Source::Uniform(f) => Some(*f),
            Source::Field(_) => None,
        }
    }
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Uniform(v) => write!(f, "Uniform({v})"),
            Source::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// Convective and radiative exchange with the surroundings through the top face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceExchange {
    pub h_t: f64,
    pub emissivity: f64,
    pub sigma: f64,
    pub ambient: f64,
}

impl Default for SurfaceExchange {
    fn default() -> Self {
        Self {
            h_t: 21.0,
            emissivity: 0.97,
            sigma: STEFAN_BOLTZMANN,
            ambient: 296.42,
        }
    }
}

/// Switches for the individual residual contributions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Terms {
    pub conduction: bool,
    pub radiation: bool,
    pub channel: bool,
    pub mass: bool,
    /// Drops `k′(θ)` from the Jacobian only. Exists so tests can confirm the
    /// finite-difference check detects an inexact linearization.
    #[doc(hidden)]
    pub omit_conductivity_slope: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Self {
            conduction: true,
            radiation: true,
            channel: true,
            mass: true,
            omit_conductivity_slope: false,
        }
    }
}

impl Terms {
    /// Mask from the low four bits: conduction, radiation, channel, mass.
    pub fn from_mask(mask: u8) -> Self {
        Self {
            conduction: mask & 1 != 0,
            radiation: mask & 2 != 0,
            channel: mask & 4 != 0,
            mass: mask & 8 != 0,
            omit_conductivity_slope: false,
        }
    }
}

#[derive(Clone, Debug)]
pub enum InitialCondition {
    Uniform(f64),
    Nodal(Vec<f64>),
}

/// Complete scenario: mesh, materials, loads and boundary data.
#[derive(Clone, Debug)]
pub struct ThermalProblem {
    pub mesh: Arc<ChannelMesh>,
    pub solid: SolidMaterial,
    pub coolant: Coolant,
    pub source: Source,
    pub surface: SurfaceExchange,
    pub inlet_temperature: f64,
    /// Overrides the constant values of Dirichlet boundary edges when set.
    pub dirichlet_field: Option<DirichletField>,
    pub initial: InitialCondition,
    pub terms: Terms,
    pub inlet: InletTreatment,
}

/// How the coolant inlet temperature enters the discrete system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InletTreatment {
    /// The inlet node is constrained to the inlet temperature.
    #[default]
    Pinned,
    /// Inflow flux `χ (θ − θ_inlet)` at the inlet node; the inlet stays free.
    Upwind,
}

#[derive(Clone)]
pub struct DirichletField(pub Arc<dyn Fn(Point) -> f64 + Send + Sync>);

impl std::fmt::Debug for DirichletField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("DirichletField(..)")
    }
}

impl ThermalProblem {
    /// Problem with inlet and initial temperature at ambient.
    pub fn new(
        mesh: Arc<ChannelMesh>,
        solid: SolidMaterial,
        coolant: Coolant,
        source: Source,
        surface: SurfaceExchange,
    ) -> Self {
        Self {
            mesh,
            solid,
            coolant,
            source,
            inlet_temperature: surface.ambient,
            initial: InitialCondition::Uniform(surface.ambient),
            surface,
            dirichlet_field: None,
            terms: Terms::default(),
            inlet: InletTreatment::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.surface;
        if !(s.ambient.is_finite() && s.ambient > 0.0) {
            return Err(Error::InvalidInput(format!("ambient temperature must be positive, got {}", s.ambient)));
        }
        if !(s.h_t.is_finite() && s.h_t >= 0.0) {
            return Err(Error::InvalidInput(format!("h_T must be non-negative, got {}", s.h_t)));
        }
        if !(0.0..=1.0).contains(&s.emissivity) {
            return Err(Error::InvalidInput(format!("emissivity must lie in [0, 1], got {}", s.emissivity)));
        }
        if !(s.sigma.is_finite() && s.sigma >= 0.0) {
            return Err(Error::InvalidInput("Stefan-Boltzmann constant must be non-negative".into()));
        }
        if let Some(f) = self.source.uniform_value() {
            if !f.is_finite() {
                return Err(Error::InvalidInput("applied flux must be finite".into()));
            }
        }
        if !self.inlet_temperature.is_finite() {
            return Err(Error::InvalidInput("inlet temperature must be finite".into()));
        }
        for e in self.mesh.boundary_edges() {
            let v = match e.condition {
                SideCondition::Neumann { flux } => flux,
                SideCondition::Dirichlet { temperature } => temperature,
            };
            if !v.is_finite() {
                return Err(Error::InvalidInput("boundary data must be finite".into()));
            }
        }
        if let InitialCondition::Nodal(v) = &self.initial {
            if v.len() != self.mesh.n_nodes() {
                return Err(Error::InvalidInput(format!(
                    "initial field has {} values for {} nodes",
                    v.len(),
                    self.mesh.n_nodes()
                )));
            }
        }
        Ok(())
    }

    /// Heat capacity rate; zero without a channel.
    pub fn chi(&self) -> f64 {
        if self.mesh.channel().is_some() {
            heat_capacity_rate(&self.coolant)
        } else {
            0.0
        }
    }

    pub fn initial_field(&self) -> Vec<f64> {
        match &self.initial {
            InitialCondition::Uniform(v) => vec![*v; self.mesh.n_nodes()],
            InitialCondition::Nodal(v) => v.clone(),
        }
    }

    fn dirichlet_value(&self, node: usize, constant: f64) -> f64 {
        match &self.dirichlet_field {
            Some(f) => (f.0)(self.mesh.nodes()[node]),
            None => constant,
        }
    }

    /// Prescribed nodal values: the inlet node and every node of a Dirichlet edge.
    pub fn constraints(&self) -> Result<BTreeMap<usize, f64>> {
        let mut map = BTreeMap::new();
        let mut insert = |node: usize, value: f64| -> Result<()> {
            match map.insert(node, value) {
                Some(prev) if (prev - value).abs() > 1e-9 * prev.abs().max(1.0) => {
                    Err(Error::ConflictingConstraint {
                        node,
                        first: prev,
                        second: value,
                    })
                }
                _ => Ok(()),
            }
        };
        for e in self.mesh.boundary_edges() {
            if let SideCondition::Dirichlet { temperature } = e.condition {
                for node in e.nodes() {
                    insert(node, self.dirichlet_value(node, temperature))?;
                }
            }
        }
        // without flow the inlet carries no coolant and is left free
        let pinned = self.inlet == InletTreatment::Pinned && self.chi() > 0.0;
        if let Some(ch) = self.mesh.channel().filter(|_| pinned) {
            insert(ch.inlet_node, self.inlet_temperature)?;
        }
        Ok(map)
    }
}

/// Time-derivative coefficients supplied by the integrator:
/// `θ̇ ≈ current_weight · θ + history` at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTerm {
    pub current_weight: f64,
    pub history: Vec<f64>,
}

/// Residual, Jacobian, and the prescribed nodal values.
#[derive(Clone, Debug)]
pub struct DiscreteSystem {
    pub residual: Vec<f64>,
    pub jacobian: CsrMatrix,
    pub constrained: BTreeMap<usize, f64>,
}

const MAX_NODES: usize = 6;

/// Reference tables reused across assemblies.
#[derive(Clone, Debug)]
pub struct Assembler {
    table: ReferenceTable,
    order: ElementOrder,
}

impl Assembler {
    pub fn new(order: ElementOrder) -> Self {
        Self {
            table: ReferenceTable::for_order(order),
            order,
        }
    }

    /// Raw system without constraints. `rate` enables the transient mass term.
    pub fn assemble(&self, problem: &ThermalProblem, theta: &[f64], rate: Option<&RateTerm>, time: f64) -> Result<DiscreteSystem> {
        let mesh = &*problem.mesh;
        assert_eq!(mesh.order, self.order, "assembler built for a different element order");
        assert_eq!(theta.len(), mesh.n_nodes(), "temperature vector does not match the mesh");
        let mut residual = vec![0.0; mesh.n_nodes()];
        let mut jac = mesh.pattern().clone();
        let terms = problem.terms;
        let d = mesh.domain.thickness;
        let s = problem.surface;
        let amb4 = s.ambient.powi(4);
        let eps_sigma = if terms.radiation { s.emissivity * s.sigma } else { 0.0 };
        let mass_on = terms.mass && rate.is_some();
        let npe = self.order.nodes_per_triangle();

        for e in 0..mesh.n_triangles() {
            let el = mesh.element(e);
            let map = AffineMap::new(mesh.triangle_corners(e));
            let mut re = [0.0; MAX_NODES];
            let mut ke = [[0.0; MAX_NODES]; MAX_NODES];
            let mut te = [0.0; MAX_NODES];
            for (a, &id) in el.iter().enumerate() {
                te[a] = theta[id];
            }
            for (q, qp) in self.table.points.iter().enumerate() {
                let wdet = qp.weight * map.det;
                let phi = &self.table.phi[q];
                let mut grad = [[0.0; 2]; MAX_NODES];
                let mut th = 0.0;
                let mut gth = [0.0; 2];
                for a in 0..npe {
                    grad[a] = map.gradient(self.table.dphi[q][a]);
                    th += phi[a] * te[a];
                    gth[0] += grad[a][0] * te[a];
                    gth[1] += grad[a][1] * te[a];
                }
                let x = map.point(qp.xi, qp.eta);
                let f = problem.source.eval(x, time);

                // reaction: convection + radiation - source
                let react = s.h_t * (th - s.ambient) + eps_sigma * (th.powi(4) - amb4) - f;
                let dreact = s.h_t + 4.0 * eps_sigma * th.powi(3);

                let (k, dk) = if terms.conduction {
                    let k = problem.solid.conductivity.eval(th);
                    if !(k > 0.0) {
                        return Err(Error::EllipticityViolation { value: k, temperature: th });
                    }
                    let dk = if terms.omit_conductivity_slope {
                        0.0
                    } else {
                        problem.solid.conductivity.derivative(th)
                    };
                    (d * k, d * dk)
                } else {
                    (0.0, 0.0)
                };

                let (cap, dcap, rate_q, rate_w) = match (mass_on, rate) {
                    (true, Some(r)) => {
                        let mut hist = 0.0;
                        for a in 0..npe {
                            hist += phi[a] * r.history[el[a]];
                        }
                        let rq = r.current_weight * th + hist;
                        (
                            d * problem.solid.density * problem.solid.specific_heat.eval(th),
                            d * problem.solid.density * problem.solid.specific_heat.derivative(th),
                            rq,
                            r.current_weight,
                        )
                    }
                    _ => (0.0, 0.0, 0.0, 0.0),
                };

                for i in 0..npe {
                    let gi_gth = grad[i][0] * gth[0] + grad[i][1] * gth[1];
                    re[i] += wdet * (k * gi_gth + phi[i] * (react + cap * rate_q));
                    for j in 0..npe {
                        let gi_gj = grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1];
                        ke[i][j] += wdet
                            * (k * gi_gj
                                + dk * phi[j] * gi_gth
                                + phi[i] * phi[j] * (dreact + cap * rate_w + dcap * rate_q));
                    }
                }
            }
            for i in 0..npe {
                residual[el[i]] += re[i];
                for j in 0..npe {
                    jac.add(el[i], el[j], ke[i][j]);
                }
            }
        }

        if terms.channel {
            if let Some(ch) = mesh.channel() {
                let chi = problem.chi();
                for edge in channel_edge_terms(ch, self.order, theta, chi) {
                    for (i, &ni) in edge.nodes.iter().enumerate() {
                        residual[ni] += edge.residual[i];
                        for (j, &nj) in edge.nodes.iter().enumerate() {
                            jac.add(ni, nj, edge.jacobian[i][j]);
                        }
                    }
                }
                if problem.inlet == InletTreatment::Upwind {
                    let i = ch.inlet_node;
                    residual[i] += chi * (theta[i] - problem.inlet_temperature);
                    jac.add(i, i, chi);
                }
            }
        }

        for e in mesh.boundary_edges() {
            if let SideCondition::Neumann { flux } = e.condition {
                if flux == 0.0 {
                    continue;
                }
                let nodes: Vec<usize> = e.nodes().collect();
                for &(z, w) in segment_rule(2) {
                    let (n, _) = segment_shape(self.order, z);
                    for (i, &ni) in nodes.iter().enumerate() {
                        residual[ni] += w * e.length * n[i] * flux;
                    }
                }
            }
        }

        Ok(DiscreteSystem {
            residual,
            jacobian: jac,
            constrained: BTreeMap::new(),
        })
    }
}

/// Local contribution of one channel edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeContribution {
    /// `(a, b)` or `(a, b, mid)`.
    pub nodes: Vec<usize>,
    pub residual: Vec<f64>,
    pub jacobian: Vec<Vec<f64>>,
}

/// Per-edge terms of `∫Σ χ w ∂θ/∂s`, using the 1-point rule for linear
/// and the 2-point Gauss rule for quadratic elements.
pub fn channel_line_term(channel: &Channel, order: ElementOrder, theta: &[f64], chi: f64) -> Result<Vec<EdgeContribution>> {
    if let Some(e) = channel.edges.iter().find(|e| !(e.length > 0.0)) {
        return Err(Error::Mesh(format!("zero-length channel edge {} -> {}", e.a, e.b)));
    }
    Ok(channel_edge_terms(channel, order, theta, chi))
}

fn channel_edge_terms(channel: &Channel, order: ElementOrder, theta: &[f64], chi: f64) -> Vec<EdgeContribution> {
    let rule = segment_rule(order.degree());
    channel
        .edges
        .iter()
        .map(|e| {
            let nodes: Vec<usize> = [e.a, e.b].into_iter().chain(e.mid).collect();
            let m = nodes.len();
            let mut residual = vec![0.0; m];
            let mut jacobian = vec![vec![0.0; m]; m];
            for &(z, w) in rule {
                let (n, dn) = segment_shape(order, z);
                // ∂θ/∂s ds = (dθ/dζ) dζ, so the edge length cancels
                let dtheta: f64 = nodes.iter().zip(&dn).map(|(&id, d)| d * theta[id]).sum();
                for i in 0..m {
                    residual[i] += w * chi * n[i] * dtheta;
                    for j in 0..m {
                        jacobian[i][j] += w * chi * n[i] * dn[j];
                    }
                }
            }
            EdgeContribution {
                nodes,
                residual,
                jacobian,
            }
        })
        .collect()
}

/// Replaces constrained rows by `θᵢ − θᵖ` and folds constrained columns into the residual.
pub fn apply_constraints(mut system: DiscreteSystem, problem: &ThermalProblem, theta: &[f64]) -> Result<DiscreteSystem> {
    let constrained = problem.constraints()?;
    let n = system.residual.len();
    let mut is_fixed = vec![false; n];
    let mut delta = vec![0.0; n];
    for (&node, &value) in &constrained {
        is_fixed[node] = true;
        delta[node] = value - theta[node];
    }
    let jac = &mut system.jacobian;
    for i in 0..n {
        let (lo, hi) = (jac.row_ptr()[i], jac.row_ptr()[i + 1]);
        if is_fixed[i] {
            for k in lo..hi {
                let j = jac.col_idx()[k];
                jac.values_mut()[k] = if j == i { 1.0 } else { 0.0 };
            }
            system.residual[i] = -delta[i];
        } else {
            for k in lo..hi {
                let j = jac.col_idx()[k];
                if is_fixed[j] {
                    let v = jac.values()[k];
                    system.residual[i] += v * delta[j];
                    jac.values_mut()[k] = 0.0;
                }
            }
        }
    }
    system.constrained = constrained;
    Ok(system)
}

pub fn assemble_steady(problem: &ThermalProblem, theta: &[f64]) -> Result<DiscreteSystem> {
    let raw = Assembler::new(problem.mesh.order).assemble(problem, theta, None, 0.0)?;
    apply_constraints(raw, problem, theta)
}

pub fn assemble_transient(problem: &ThermalProblem, theta: &[f64], rate: &RateTerm, time: f64) -> Result<DiscreteSystem> {
    let raw = Assembler::new(problem.mesh.order).assemble(problem, theta, Some(rate), time)?;
    apply_constraints(raw, problem, theta)
}

/// Edge Péclet number `χ / (2 d k(θ))` for each channel edge, evaluated at the edge midpoint temperature.
pub fn channel_peclet(problem: &ThermalProblem, theta: &[f64]) -> Vec<f64> {
    let chi = problem.chi();
    let d = problem.mesh.domain.thickness;
    problem
        .mesh
        .channel()
        .map(|ch| {
            ch.edges
                .iter()
                .map(|e| {
                    let th = 0.5 * (theta[e.a] + theta[e.b]);
                    chi / (2.0 * d * problem.solid.conductivity.eval(th))
                })
                .collect()
        })
        .unwrap_or_default()
}
