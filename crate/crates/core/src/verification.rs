//! Independent oracles: manufactured solutions, the uniform scalar ODE, and
//! finite-difference Jacobian checks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{
    Assembler, DirichletField, InitialCondition, InletTreatment, RateTerm, Source, SurfaceExchange, Terms, ThermalProblem,
};
use crate::error::{Error, Result};
use crate::fem::{AffineMap, ReferenceTable, TRI_RULE_6};
use crate::geometry::{generate_layout, Domain2D, LayoutKind, LayoutParams, Point};
use crate::materials::{builtin_material, BuiltinMaterial, Coolant, PropertyMode, SolidMaterial};
use crate::mesh::{build_structured_mesh, embed_vasculature, tag_boundary, BoundarySpec, ChannelMesh, ElementOrder, SideCondition};
use crate::solvers::{solve_steady, NewtonSettings, TransientSettings};

/// Polynomial exact fields, in the unit coordinates `ξ = x/W`, `η = y/H`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MmsField {
    /// θ* = 320.
    Constant,
    /// θ* = 300 + 40 ξ η.
    Bilinear,
    /// θ* = 300 + 30 ξ² + 20 ξ η + 25 η².
    Quadratic,
    /// θ* = 300 + 40 (ξ − ½)² (1 + η), constant on the line ξ = ½.
    ChannelCompatible,
}

impl MmsField {
    /// Value, gradient and Laplacian at `x`.
    ///
    /// With `a = 1/W`, `b = 1/H`:
    /// - bilinear: ∇θ = 40 (a η, b ξ), Δθ = 0
    /// - quadratic: ∇θ = (a (60 ξ + 20 η), b (20 ξ + 50 η)), Δθ = 60 a² + 50 b²
    /// - channel: ∇θ = (80 a (ξ − ½)(1 + η), 40 b (ξ − ½)²), Δθ = 80 a² (1 + η)
    pub fn eval(self, domain: &Domain2D, x: Point) -> (f64, [f64; 2], f64) {
        let (a, b) = (1.0 / domain.width, 1.0 / domain.height);
        let (xi, eta) = (x[0] * a, x[1] * b);
        match self {
            MmsField::Constant => (320.0, [0.0, 0.0], 0.0),
            MmsField::Bilinear => (300.0 + 40.0 * xi * eta, [40.0 * a * eta, 40.0 * b * xi], 0.0),
            MmsField::Quadratic => (
                300.0 + 30.0 * xi * xi + 20.0 * xi * eta + 25.0 * eta * eta,
                [a * (60.0 * xi + 20.0 * eta), b * (20.0 * xi + 50.0 * eta)],
                60.0 * a * a + 50.0 * b * b,
            ),
            MmsField::ChannelCompatible => {
                let u = xi - 0.5;
                (
                    300.0 + 40.0 * u * u * (1.0 + eta),
                    [80.0 * a * u * (1.0 + eta), 40.0 * b * u * u],
                    80.0 * a * a * (1.0 + eta),
                )
            }
        }
    }
}

/// A manufactured-solution problem: exact field, material, and optional straight channel.
#[derive(Clone, Debug)]
pub struct MmsCase {
    pub name: String,
    pub field: MmsField,
    pub material: SolidMaterial,
    pub surface: SurfaceExchange,
    pub channel: bool,
    pub order: ElementOrder,
}

impl MmsCase {
    pub fn new(name: &str, field: MmsField, material: SolidMaterial) -> Self {
        Self {
            name: name.to_string(),
            field,
            material,
            surface: SurfaceExchange {
                emissivity: 0.0,
                ..SurfaceExchange::default()
            },
            channel: false,
            order: ElementOrder::Linear,
        }
    }

    /// The standard battery: constant, bilinear (CMP), quadratic with
    /// linear-in-θ conductivity, and the straight-channel variant.
    pub fn standard() -> Vec<MmsCase> {
        let cmp = builtin_material(BuiltinMaterial::CfrpLike, PropertyMode::Constant);
        let tdmp = builtin_material(BuiltinMaterial::CfrpLike, PropertyMode::TemperatureDependent);
        let mut channel = MmsCase::new(
            "straight_channel_tdmp",
            MmsField::ChannelCompatible,
            tdmp.clone(),
        );
        channel.channel = true;
        vec![
            MmsCase::new("constant", MmsField::Constant, cmp.clone()),
            MmsCase::new("bilinear_cmp", MmsField::Bilinear, cmp),
            MmsCase::new("quadratic_tdmp", MmsField::Quadratic, tdmp),
            channel,
        ]
    }

    /// Source `f* = −d (k(θ*) Δθ* + k′(θ*) |∇θ*|²) + h_T (θ* − θ_amb) + εσ (θ*⁴ − θ_amb⁴)`.
    pub fn source_at(&self, domain: &Domain2D, x: Point) -> f64 {
        let (th, g, lap) = self.field.eval(domain, x);
        let k = self.material.conductivity.eval(th);
        let dk = self.material.conductivity.derivative(th);
        let s = &self.surface;
        -domain.thickness * (k * lap + dk * (g[0] * g[0] + g[1] * g[1]))
            + s.h_t * (th - s.ambient)
            + s.emissivity * s.sigma * (th.powi(4) - s.ambient.powi(4))
    }

    /// Problem on an `n × n` grid with Dirichlet data from θ* on every side.
    pub fn problem(&self, n: usize) -> Result<ThermalProblem> {
        let domain = Domain2D::default();
        let grid = build_structured_mesh(&domain, n)?;
        let mesh = if self.channel {
            // a single vertical pass through the middle, inlet on top
            let params = LayoutParams {
                pass_count: 1,
                ..LayoutParams::for_kind(LayoutKind::Serpentine)
            };
            let path = generate_layout(&domain, &params)?;
            embed_vasculature(&grid, &path, self.order)?
        } else {
            ChannelMesh::without_channel(&grid, self.order)
        };
        let mesh = tag_boundary(&mesh, &BoundarySpec::all_dirichlet(0.0));
        let case = self.clone();
        let src_case = self.clone();
        let mut p = ThermalProblem::new(
            Arc::new(mesh),
            self.material.clone(),
            Coolant::water(1.0)?,
            Source::Field(Arc::new(move |x, _| src_case.source_at(&domain, x))),
            self.surface,
        );
        p.dirichlet_field = Some(DirichletField(Arc::new(move |x| case.field.eval(&domain, x).0)));
        if let Some(ch) = p.mesh.channel() {
            p.inlet_temperature = self.field.eval(&domain, p.mesh.nodes()[ch.inlet_node]).0;
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub l2_error: f64,
    pub max_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub case: String,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log L2 error against log h; `None` when every error vanishes.
    pub slope: Option<f64>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("case,n,h,l2_error,max_error\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.6e},{:.6e},{:.6e}\n", self.case, r.n, r.h, r.l2_error, r.max_error));
        }
        s
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// L2 norm of `θ_h − θ*`, integrated with the degree-4 rule.
pub fn l2_error(mesh: &ChannelMesh, theta: &[f64], exact: impl Fn(Point) -> f64) -> f64 {
    let table = ReferenceTable::new(mesh.order, &TRI_RULE_6);
    let mut sum = 0.0;
    for e in 0..mesh.n_triangles() {
        let el = mesh.element(e);
        let map = AffineMap::new(mesh.triangle_corners(e));
        for (q, qp) in table.points.iter().enumerate() {
            let th: f64 = el.iter().zip(&table.phi[q]).map(|(&id, p)| p * theta[id]).sum();
            let d = th - exact(map.point(qp.xi, qp.eta));
            sum += qp.weight * map.det * d * d;
        }
    }
    sum.sqrt()
}

/// Solves `case` on each mesh size and fits the L2 convergence slope.
pub fn mms_convergence(case: &MmsCase, mesh_sizes: &[usize]) -> Result<ConvergenceTable> {
    if mesh_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("mesh sizes must be strictly increasing".into()));
    }
    let domain = Domain2D::default();
    let mut rows = Vec::with_capacity(mesh_sizes.len());
    for &n in mesh_sizes {
        let p = case.problem(n)?;
        let sol = solve_steady(&p, &NewtonSettings::default(), None)?;
        let exact = |x: Point| case.field.eval(&domain, x).0;
        let max_error = p
            .mesh
            .nodes()
            .iter()
            .zip(&sol.theta)
            .map(|(x, t)| (t - exact(*x)).abs())
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow {
            n,
            h: domain.width.max(domain.height) / n as f64,
            l2_error: l2_error(&p.mesh, &sol.theta, exact),
            max_error,
        });
    }
    let scale = rows.iter().map(|r| r.l2_error).fold(0.0, f64::max);
    // errors at round-off level carry no rate information
    let slope = if scale > 1e-9 {
        let x: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.l2_error.ln()).collect();
        Some(fitted_slope(&x, &y))
    } else {
        None
    };
    Ok(ConvergenceTable {
        case: case.name.clone(),
        rows,
        slope,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JacobianCheck {
    pub trials: usize,
    pub max_rel_error: f64,
}

/// Compares `J v` against central differences of `R` at random states in
/// `[290, 420]` K along random directions. The mass term is exercised with a
/// random BDF history whenever it is switched on.
pub fn jacobian_check(problem: &ThermalProblem, trials: usize, seed: u64) -> Result<JacobianCheck> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.mesh.n_nodes();
    let asm = Assembler::new(problem.mesh.order);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(290.0..420.0)).collect();
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rate = problem.terms.mass.then(|| RateTerm {
            current_weight: 1.5,
            history: (0..n).map(|_| rng.gen_range(-600.0..-400.0)).collect(),
        });
        let sys = asm.assemble(problem, &theta, rate.as_ref(), 0.0)?;
        let jv = sys.jacobian.mul_vec(&dir);
        let shifted = |sign: f64| -> Result<Vec<f64>> {
            let t: Vec<f64> = theta.iter().zip(&dir).map(|(a, d)| a + sign * h * d).collect();
            Ok(asm.assemble(problem, &t, rate.as_ref(), 0.0)?.residual)
        };
        let (rp, rm) = (shifted(1.0)?, shifted(-1.0)?);
        let scale = jv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = jv
            .iter()
            .zip(rp.iter().zip(&rm))
            .map(|(j, (p, m))| (j - (p - m) / (2.0 * h)).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(if scale > 0.0 { err / scale } else { err });
    }
    Ok(JacobianCheck {
        trials,
        max_rel_error: worst,
    })
}

/// Uniform-state energy balance `d ρ c(θ) θ̇ = f₀ − h_T (θ − θ_amb) − εσ (θ⁴ − θ_amb⁴)`.
#[derive(Clone, Debug)]
pub struct ScalarOde {
    pub thickness: f64,
    pub density: f64,
    pub material: SolidMaterial,
    pub flux: f64,
    pub surface: SurfaceExchange,
    pub initial: f64,
}

impl ScalarOde {
    /// Reduction of a problem with uniform data, no channel, and adiabatic edges.
    pub fn from_problem(problem: &ThermalProblem) -> Result<Self> {
        let flux = problem
            .source
            .uniform_value()
            .ok_or_else(|| Error::InvalidInput("scalar reference needs a uniform source".into()))?;
        if problem.mesh.channel().is_some() && problem.terms.channel && problem.chi() > 0.0 {
            return Err(Error::InvalidInput("scalar reference needs a problem without coolant flow".into()));
        }
        if problem
            .mesh
            .boundary_edges()
            .iter()
            .any(|e| e.condition != SideCondition::Neumann { flux: 0.0 })
        {
            return Err(Error::InvalidInput("scalar reference needs adiabatic edges".into()));
        }
        let initial = match &problem.initial {
            InitialCondition::Uniform(v) => *v,
            InitialCondition::Nodal(v) => {
                let first = v[0];
                if v.iter().any(|x| *x != first) {
                    return Err(Error::InvalidInput("scalar reference needs a uniform initial state".into()));
                }
                first
            }
        };
        let mut surface = problem.surface;
        if !problem.terms.radiation {
            surface.emissivity = 0.0;
        }
        Ok(Self {
            thickness: problem.mesh.domain.thickness,
            density: problem.solid.density,
            material: problem.solid.clone(),
            flux,
            surface,
            initial,
        })
    }

    /// Net power per unit area at temperature `θ`.
    pub fn net_flux(&self, theta: f64) -> f64 {
        let s = &self.surface;
        self.flux - s.h_t * (theta - s.ambient) - s.emissivity * s.sigma * (theta.powi(4) - s.ambient.powi(4))
    }

    pub fn rate(&self, theta: f64) -> f64 {
        self.net_flux(theta) / (self.thickness * self.density * self.material.specific_heat.eval(theta))
    }

    /// Classical RK4 with step `dt`, sampled every `sample_every` steps (including t = 0).
    pub fn rk4(&self, total_time: f64, dt: f64, sample_every: usize) -> Vec<(f64, f64)> {
        let steps = (total_time / dt).round() as usize;
        let mut th = self.initial;
        let mut out = vec![(0.0, th)];
        for k in 1..=steps {
            let k1 = self.rate(th);
            let k2 = self.rate(th + 0.5 * dt * k1);
            let k3 = self.rate(th + 0.5 * dt * k2);
            let k4 = self.rate(th + dt * k3);
            th += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if k % sample_every == 0 {
                out.push((k as f64 * dt, th));
            }
        }
        out
    }

    /// Steady root of the balance by bisection, to `1e-10` K.
    pub fn steady_root(&self) -> Result<f64> {
        let s = &self.surface;
        let (mut lo, mut hi) = if self.flux >= 0.0 {
            let hi = if s.h_t > 0.0 {
                s.ambient + self.flux / s.h_t
            } else {
                // pure radiation bound
                (s.ambient.powi(4) + self.flux / (s.emissivity * s.sigma)).powf(0.25)
            };
            (s.ambient, hi)
        } else {
            (0.0, s.ambient)
        };
        if !(hi.is_finite()) || self.net_flux(lo) < 0.0 || self.net_flux(hi) > 0.0 {
            return Err(Error::InvalidInput("no positive steady temperature for this balance".into()));
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.net_flux(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// RK4 reference (Δt = 0.01 s) at the BDF output times of `tsettings`, plus the steady root.
#[derive(Clone, Debug)]
pub struct ScalarReference {
    pub trajectory: Vec<(f64, f64)>,
    pub steady: f64,
}

pub fn scalar_reference(problem: &ThermalProblem, tsettings: &TransientSettings) -> Result<ScalarReference> {
    let ode = ScalarOde::from_problem(problem)?;
    let fine = 0.01;
    let every = (tsettings.dt / fine).round() as usize;
    if every == 0 || ((every as f64) * fine - tsettings.dt).abs() > 1e-9 * tsettings.dt {
        return Err(Error::InvalidInput("time step must be a multiple of 0.01 s".into()));
    }
    Ok(ScalarReference {
        trajectory: ode.rk4(tsettings.steps() as f64 * tsettings.dt, fine, every),
        steady: ode.steady_root()?,
    })
}

/// Observed temporal order from three runs with steps `Δt, Δt/2, Δt/4`.
pub fn observed_order(coarse: f64, medium: f64, fine: f64) -> f64 {
    ((coarse - medium).abs() / (medium - fine).abs()).log2()
}

/// Jacobian checks over all sixteen term masks on a small paper-like problem,
/// worst case over both inlet treatments.
pub fn jacobian_mask_sweep(states: usize, seed: u64) -> Result<Vec<(u8, f64)>> {
    let domain = Domain2D::default();
    let grid = build_structured_mesh(&domain, 8)?;
    let path = generate_layout(&domain, &LayoutParams::u_shape())?;
    let mesh = Arc::new(tag_boundary(
        &embed_vasculature(&grid, &path, ElementOrder::Linear)?,
        &BoundarySpec::adiabatic(),
    ));
    let mut out = Vec::with_capacity(16);
    for mask in 0u8..16 {
        let mut p = ThermalProblem::new(
            mesh.clone(),
            builtin_material(BuiltinMaterial::CfrpLike, PropertyMode::TemperatureDependent),
            Coolant::water(1.0)?,
            Source::Uniform(1000.0),
            SurfaceExchange::default(),
        );
        p.terms = Terms::from_mask(mask);
        let mut worst: f64 = 0.0;
        for inlet in [InletTreatment::Pinned, InletTreatment::Upwind] {
            p.inlet = inlet;
            worst = worst.max(jacobian_check(&p, states, seed + mask as u64)?.max_rel_error);
        }
        out.push((mask, worst));
    }
    Ok(out)
}
