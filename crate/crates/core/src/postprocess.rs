//! Observables, bound checks, and the global energy balance.

use serde::Serialize;

use crate::assembly::{Assembler, InletTreatment, RateTerm, Source, ThermalProblem};
use crate::error::{Error, Result};
use crate::fem::{segment_shape, AffineMap, ReferenceTable};
use crate::mesh::{ChannelMesh, SideCondition};

/// Integrates `g(θ_h, x)` over the mesh with the element-order quadrature.
fn integrate(mesh: &ChannelMesh, field: &[f64], mut g: impl FnMut(f64, [f64; 2]) -> f64) -> f64 {
    let table = ReferenceTable::for_order(mesh.order);
    let mut total = 0.0;
    for e in 0..mesh.n_triangles() {
        let el = mesh.element(e);
        let map = AffineMap::new(mesh.triangle_corners(e));
        for (q, qp) in table.points.iter().enumerate() {
            let th: f64 = el.iter().zip(&table.phi[q]).map(|(&id, p)| p * field[id]).sum();
            total += qp.weight * map.det * g(th, map.point(qp.xi, qp.eta));
        }
    }
    total
}

/// Domain average of θ.
pub fn mean_surface_temperature(field: &[f64], mesh: &ChannelMesh) -> f64 {
    integrate(mesh, field, |th, _| th) / mesh.domain.area()
}

/// Nodal value at the outlet, `None` without a channel.
pub fn outlet_temperature(field: &[f64], mesh: &ChannelMesh) -> Option<f64> {
    mesh.channel().map(|ch| field[ch.outlet_node])
}

/// Efficiency for a uniform load `f₀` over `area`.
pub fn efficiency(theta_outlet: f64, theta_inlet: f64, chi: f64, f0: f64, area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::InvalidInput(format!("area must be positive, got {area}")));
    }
    efficiency_general(theta_outlet, theta_inlet, chi, f0 * area)
}

/// Coolant-extracted power over supplied power `∫f dΩ`.
pub fn efficiency_general(theta_outlet: f64, theta_inlet: f64, chi: f64, supplied: f64) -> Result<f64> {
    if supplied == 0.0 || !supplied.is_finite() {
        return Err(Error::InvalidInput("efficiency is undefined for zero applied load".into()));
    }
    Ok(chi * (theta_outlet - theta_inlet) / supplied)
}

/// `∫Ω f dΩ` at time `t`.
pub fn supplied_power(problem: &ThermalProblem, t: f64) -> f64 {
    match &problem.source {
        Source::Uniform(f) => f * problem.mesh.domain.area(),
        src => {
            let zeros = vec![0.0; problem.mesh.n_nodes()];
            integrate(&problem.mesh, &zeros, |_, x| src.eval(x, t))
        }
    }
}

/// θ sampled at `n_samples` equispaced arc-length positions from inlet to outlet.
pub fn arc_length_profile(field: &[f64], mesh: &ChannelMesh, n_samples: usize) -> Result<Vec<(f64, f64)>> {
    let ch = mesh
        .channel()
        .ok_or_else(|| Error::InvalidInput("arc-length profile needs a channel".into()))?;
    if n_samples < 2 {
        return Err(Error::InvalidInput("arc-length profile needs at least two samples".into()));
    }
    let total = ch.arc_length();
    let mut out = Vec::with_capacity(n_samples);
    let mut edge = 0;
    let mut start = 0.0;
    for k in 0..n_samples {
        let s = total * k as f64 / (n_samples - 1) as f64;
        while edge + 1 < ch.edges.len() && s > start + ch.edges[edge].length {
            start += ch.edges[edge].length;
            edge += 1;
        }
        let e = &ch.edges[edge];
        let value = if k == 0 {
            field[ch.inlet_node]
        } else if k == n_samples - 1 {
            field[ch.outlet_node]
        } else {
            let z = ((s - start) / e.length).clamp(0.0, 1.0);
            let (n, _) = segment_shape(mesh.order, z);
            [e.a, e.b].into_iter().chain(e.mid).zip(&n).map(|(id, w)| w * field[id]).sum()
        };
        out.push((s, value));
    }
    Ok(out)
}

/// Outcome of the discrete min/max principle check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub phi_min: f64,
    pub phi_max: f64,
    pub observed_min: f64,
    pub observed_max: f64,
    pub min_violation: f64,
    pub max_violation: f64,
    pub tolerance: f64,
    /// Hypotheses of the lower bound (f ≥ 0, q ≤ 0, θ_amb > 0, θ ≥ 0 unless ε = 0).
    pub min_hypotheses_met: bool,
    /// Hypotheses of the upper bound (f ≤ 0, q ≥ 0, θ_amb > 0, θ ≥ 0 unless ε = 0).
    pub max_hypotheses_met: bool,
    pub pass_min: bool,
    pub pass_max: bool,
    pub notes: Vec<String>,
}

/// Default tolerance `1e-6 θ_amb`.
pub fn default_bounds_tolerance(problem: &ThermalProblem) -> f64 {
    1e-6 * problem.surface.ambient
}

/// Compares the field against `Φ_min = min(θ_amb, θ_inlet, min θᵖ)` and the matching `Φ_max`.
///
/// Pass flags are informational when the corresponding hypotheses fail.
pub fn check_bounds(field: &[f64], problem: &ThermalProblem, tol: f64) -> Result<BoundsReport> {
    let mut refs = vec![problem.surface.ambient];
    if problem.mesh.channel().is_some() {
        refs.push(problem.inlet_temperature);
    }
    refs.extend(problem.constraints()?.values().copied());
    let phi_min = refs.iter().copied().fold(f64::INFINITY, f64::min);
    let phi_max = refs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let observed_min = field.iter().copied().fold(f64::INFINITY, f64::min);
    let observed_max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (f_lo, f_hi) = source_range(problem);
    let (q_lo, q_hi) = problem
        .mesh
        .boundary_edges()
        .iter()
        .filter_map(|e| match e.condition {
            SideCondition::Neumann { flux } => Some(flux),
            SideCondition::Dirichlet { .. } => None,
        })
        .fold((0.0f64, 0.0f64), |(lo, hi), q| (lo.min(q), hi.max(q)));

    let mut notes = Vec::new();
    let ambient_ok = problem.surface.ambient > 0.0;
    let radiative = problem.terms.radiation && problem.surface.emissivity * problem.surface.sigma > 0.0;
    let nonneg_ok = !radiative || observed_min >= 0.0;
    if !radiative {
        notes.push("no radiation: non-negativity hypothesis waived".to_string());
    }
    let min_hypotheses_met = f_lo >= 0.0 && q_hi <= 0.0 && ambient_ok && nonneg_ok;
    let max_hypotheses_met = f_hi <= 0.0 && q_lo >= 0.0 && ambient_ok && nonneg_ok;
    if !min_hypotheses_met {
        notes.push("lower-bound hypotheses unmet: pass_min is informational".to_string());
    }
    if !max_hypotheses_met {
        notes.push("upper-bound hypotheses unmet: pass_max is informational".to_string());
    }
    let min_violation = (phi_min - observed_min).max(0.0);
    let max_violation = (observed_max - phi_max).max(0.0);
    Ok(BoundsReport {
        phi_min,
        phi_max,
        observed_min,
        observed_max,
        min_violation,
        max_violation,
        tolerance: tol,
        min_hypotheses_met,
        max_hypotheses_met,
        pass_min: min_violation <= tol,
        pass_max: max_violation <= tol,
        notes,
    })
}

/// Range of the source over quadrature points (exact for uniform loads).
fn source_range(problem: &ThermalProblem) -> (f64, f64) {
    if let Some(f) = problem.source.uniform_value() {
        return (f, f);
    }
    let mesh = &problem.mesh;
    let table = ReferenceTable::for_order(mesh.order);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for e in 0..mesh.n_triangles() {
        let map = AffineMap::new(mesh.triangle_corners(e));
        for qp in &table.points {
            let v = problem.source.eval(map.point(qp.xi, qp.eta), 0.0);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        for &p in &mesh.triangle_corners(e) {
            let v = problem.source.eval(p, 0.0);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Terms of the global power balance, all in W.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBalance {
    pub supplied: f64,
    pub convected: f64,
    pub radiated: f64,
    pub coolant: f64,
    pub boundary: f64,
    pub stored: f64,
    /// Heat leaving through held-temperature edges, from their nodal reactions.
    pub dirichlet_outflow: f64,
    /// Heat absorbed by a pinned inlet node. Not part of the physical balance,
    /// so it shows up in `residual`; zero for the upwind inlet.
    pub inlet_reaction: f64,
    pub residual: f64,
}

/// Supplied power minus convection, radiation, coolant uptake, boundary outflow
/// and (when `rate` is given) the storage rate `∫ d ρ c θ̇`.
///
/// The coolant term is `χ (θ_outlet − θ_inlet)` with the prescribed inlet
/// temperature.
pub fn energy_balance(field: &[f64], problem: &ThermalProblem, rate: Option<&[f64]>, t: f64) -> EnergyBalance {
    let mesh = &*problem.mesh;
    let s = problem.surface;
    let supplied = supplied_power(problem, t);
    let convected = integrate(mesh, field, |th, _| s.h_t * (th - s.ambient));
    let radiated = if problem.terms.radiation {
        let amb4 = s.ambient.powi(4);
        integrate(mesh, field, |th, _| s.emissivity * s.sigma * (th.powi(4) - amb4))
    } else {
        0.0
    };
    let coolant = match (problem.terms.channel, mesh.channel()) {
        (true, Some(ch)) => problem.chi() * (field[ch.outlet_node] - problem.inlet_temperature),
        _ => 0.0,
    };
    let mut boundary = 0.0;
    for e in mesh.boundary_edges() {
        if let SideCondition::Neumann { flux } = e.condition {
            boundary += flux * e.length;
        }
    }
    let stored = match rate {
        Some(r) if problem.terms.mass => stored_power(problem, field, r),
        _ => 0.0,
    };
    let (dirichlet_outflow, inlet_reaction) = reactions(field, problem, rate, t);
    EnergyBalance {
        supplied,
        convected,
        radiated,
        coolant,
        boundary,
        stored,
        dirichlet_outflow,
        inlet_reaction,
        residual: supplied - convected - radiated - coolant - boundary - stored - dirichlet_outflow,
    }
}

/// Minus the unconstrained residual summed over held boundary nodes, and at a pinned inlet.
fn reactions(field: &[f64], problem: &ThermalProblem, rate: Option<&[f64]>, t: f64) -> (f64, f64) {
    let mesh = &*problem.mesh;
    let held: std::collections::BTreeSet<usize> = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.condition.is_dirichlet())
        .flat_map(|e| e.nodes())
        .collect();
    let inlet = mesh
        .channel()
        .map(|c| c.inlet_node)
        .filter(|n| problem.inlet == InletTreatment::Pinned && problem.chi() > 0.0 && !held.contains(n));
    if held.is_empty() && inlet.is_none() {
        return (0.0, 0.0);
    }
    let rate = rate.filter(|_| problem.terms.mass).map(|r| RateTerm {
        current_weight: 0.0,
        history: r.to_vec(),
    });
    match Assembler::new(mesh.order).assemble(problem, field, rate.as_ref(), t) {
        Ok(sys) => (
            -held.iter().map(|&n| sys.residual[n]).sum::<f64>(),
            inlet.map_or(0.0, |n| -sys.residual[n]),
        ),
        Err(_) => (f64::NAN, f64::NAN),
    }
}

fn stored_power(problem: &ThermalProblem, field: &[f64], rate: &[f64]) -> f64 {
    let mesh = &*problem.mesh;
    let table = ReferenceTable::for_order(mesh.order);
    let d = mesh.domain.thickness;
    let mut total = 0.0;
    for e in 0..mesh.n_triangles() {
        let el = mesh.element(e);
        let map = AffineMap::new(mesh.triangle_corners(e));
        for (q, qp) in table.points.iter().enumerate() {
            let phi = &table.phi[q];
            let th: f64 = el.iter().zip(phi).map(|(&id, p)| p * field[id]).sum();
            let dth: f64 = el.iter().zip(phi).map(|(&id, p)| p * rate[id]).sum();
            total += qp.weight * map.det * d * problem.solid.density * problem.solid.specific_heat.eval(th) * dth;
        }
    }
    total
}

/// `q = −k(θ) ∇θ` per element, evaluated at the centroid.
pub fn heat_flux_field(field: &[f64], problem: &ThermalProblem) -> Vec<[f64; 2]> {
    let mesh = &*problem.mesh;
    let order = mesh.order;
    let (phi, dphi) = crate::fem::triangle_shape(order, 1.0 / 3.0, 1.0 / 3.0);
    (0..mesh.n_triangles())
        .map(|e| {
            let el = mesh.element(e);
            let map = AffineMap::new(mesh.triangle_corners(e));
            let mut g = [0.0; 2];
            let mut th = 0.0;
            for (a, &id) in el.iter().enumerate() {
                let ga = map.gradient(dphi[a]);
                g[0] += ga[0] * field[id];
                g[1] += ga[1] * field[id];
                th += phi[a] * field[id];
            }
            let k = problem.solid.conductivity.eval(th);
            [-k * g[0], -k * g[1]]
        })
        .collect()
}

/// Area-weighted average of element fluxes at each node.
pub fn nodal_heat_flux(field: &[f64], problem: &ThermalProblem) -> Vec<[f64; 2]> {
    let mesh = &*problem.mesh;
    let q = heat_flux_field(field, problem);
    let mut acc = vec![[0.0; 2]; mesh.n_nodes()];
    let mut weight = vec![0.0; mesh.n_nodes()];
    for (e, qe) in q.iter().enumerate() {
        let a = mesh.triangle_area(e);
        for &id in mesh.element(e) {
            acc[id][0] += a * qe[0];
            acc[id][1] += a * qe[1];
            weight[id] += a;
        }
    }
    acc.iter().zip(&weight).map(|(v, w)| [v[0] / w, v[1] / w]).collect()
}

/// One row of the observables table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub t: f64,
    pub mst: f64,
    pub theta_outlet: Option<f64>,
    /// `None` when the applied load integrates to zero.
    pub eta: Option<f64>,
    pub energy_residual: f64,
}

/// Observables of one field; `rate` is the nodal θ̇ for transient states.
pub fn observables(field: &[f64], problem: &ThermalProblem, rate: Option<&[f64]>, t: f64) -> Observables {
    let mesh = &*problem.mesh;
    let theta_outlet = outlet_temperature(field, mesh);
    let supplied = supplied_power(problem, t);
    let eta = theta_outlet.and_then(|out| efficiency_general(out, problem.inlet_temperature, problem.chi(), supplied).ok());
    Observables {
        t,
        mst: mean_surface_temperature(field, mesh),
        theta_outlet,
        eta,
        energy_residual: energy_balance(field, problem, rate, t).residual,
    }
}
