//! Damped Newton for the steady system and fixed-step BDF for the transient one.

use serde::{Deserialize, Serialize};

use crate::assembly::{apply_constraints, Assembler, DiscreteSystem, RateTerm, ThermalProblem};
use crate::error::{Error, Result};
use crate::linalg::{LinearMethod, LinearSolver};
use crate::sparse::norm2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonSettings {
    /// Absolute residual tolerance, W.
    pub abs_tol: f64,
    /// Relative reduction of the residual norm.
    pub rel_tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    /// Halve the step until the residual norm decreases.
    pub line_search: bool,
    #[serde(skip)]
    pub linear: LinearMethod,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_iters: 30,
            damping: 1.0,
            line_search: true,
            linear: LinearMethod::Direct,
        }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidInput("Newton tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransientSettings {
    pub dt: f64,
    pub total_time: f64,
    pub bdf_order: u8,
}

impl Default for TransientSettings {
    fn default() -> Self {
        Self {
            dt: 1.0,
            total_time: 1500.0,
            bdf_order: 2,
        }
    }
}

impl TransientSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.total_time >= self.dt) {
            return Err(Error::InvalidInput("total time must be at least one time step".into()));
        }
        if !matches!(self.bdf_order, 1 | 2) {
            return Err(Error::InvalidInput(format!("BDF order must be 1 or 2, got {}", self.bdf_order)));
        }
        Ok(())
    }

    /// Number of steps; `total_time` is rounded to a whole multiple of `dt`.
    pub fn steps(&self) -> usize {
        (self.total_time / self.dt).round() as usize
    }
}

/// One Newton iteration, as written to the solver log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NewtonRecord {
    pub step: usize,
    pub iter: usize,
    pub residual_norm: f64,
    pub damping: f64,
}

#[derive(Clone, Debug)]
pub struct SteadySolution {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub log: Vec<NewtonRecord>,
}

/// Newton driver shared by the steady and transient solves.
struct Newton<'a> {
    problem: &'a ThermalProblem,
    settings: NewtonSettings,
    assembler: Assembler,
    linear: LinearSolver,
}

impl<'a> Newton<'a> {
    fn new(problem: &'a ThermalProblem, settings: NewtonSettings) -> Self {
        Self {
            problem,
            settings,
            assembler: Assembler::new(problem.mesh.order),
            linear: LinearSolver::new(settings.linear),
        }
    }

    fn system(&self, theta: &[f64], rate: Option<&RateTerm>, time: f64) -> Result<DiscreteSystem> {
        let raw = self.assembler.assemble(self.problem, theta, rate, time)?;
        apply_constraints(raw, self.problem, theta)
    }

    fn solve(&mut self, mut theta: Vec<f64>, rate: Option<&RateTerm>, time: f64, step: usize) -> Result<SteadySolution> {
        for (&node, &value) in &self.problem.constraints()? {
            theta[node] = value;
        }
        let s = self.settings;
        let mut sys = self.system(&theta, rate, time)?;
        let mut norm = norm2(&sys.residual);
        let initial = norm;
        let mut log = vec![NewtonRecord {
            step,
            iter: 0,
            residual_norm: norm,
            damping: 0.0,
        }];
        let converged = |n: f64| n <= s.abs_tol || n <= s.rel_tol * initial;
        let mut iter = 0;
        while !converged(norm) {
            if iter == s.max_iters {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    residual: norm,
                });
            }
            iter += 1;
            let delta = self.linear.newton_update(&sys)?;
            let mut lambda = s.damping;
            let mut halvings = 0;
            loop {
                let trial: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + lambda * d).collect();
                let next = self.system(&trial, rate, time);
                let accept = match &next {
                    Ok(n) => {
                        let tn = norm2(&n.residual);
                        tn.is_finite() && (!s.line_search || tn < norm || halvings >= 20)
                    }
                    // a trial outside the admissible range is retried with a shorter step
                    Err(_) => !s.line_search || halvings >= 20,
                };
                if accept {
                    sys = next?;
                    theta = trial;
                    norm = norm2(&sys.residual);
                    break;
                }
                lambda *= 0.5;
                halvings += 1;
            }
            log.push(NewtonRecord {
                step,
                iter,
                residual_norm: norm,
                damping: lambda,
            });
        }
        check_kelvin(&theta)?;
        Ok(SteadySolution {
            theta,
            iterations: iter,
            residual_norm: norm,
            log,
        })
    }
}

/// Rejects fields that are not strictly positive in kelvin.
pub fn check_kelvin(theta: &[f64]) -> Result<()> {
    match theta.iter().enumerate().find(|(_, t)| !(**t > 0.0)) {
        Some((node, &value)) => Err(Error::NonPositiveTemperature { node, value }),
        None => Ok(()),
    }
}

/// Steady solve from `guess`, or from the ambient temperature when `None`.
pub fn solve_steady(problem: &ThermalProblem, settings: &NewtonSettings, guess: Option<&[f64]>) -> Result<SteadySolution> {
    problem.validate()?;
    settings.validate()?;
    let theta = match guess {
        Some(g) => {
            if g.len() != problem.mesh.n_nodes() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("initial guess must be finite and match the mesh".into()));
            }
            g.to_vec()
        }
        None => vec![problem.surface.ambient; problem.mesh.n_nodes()],
    };
    Newton::new(problem, *settings).solve(theta, None, 0.0, 0)
}

/// Nodal fields at `t_k = k Δt` with per-step Newton diagnostics. Index 0 is the initial state.
#[derive(Clone, Debug, Default)]
pub struct SolutionSeries {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub residual_norms: Vec<f64>,
    pub log: Vec<NewtonRecord>,
}

impl SolutionSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.times.last().map(|&t| (t, self.fields.last().unwrap().as_slice()))
    }
}

/// A transient run that stopped early; `partial` holds every accepted step.
#[derive(Debug)]
pub struct TransientFailure {
    pub partial: SolutionSeries,
    pub error: Error,
}

impl std::fmt::Display for TransientFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} accepted states)", self.error, self.partial.len())
    }
}

impl std::error::Error for TransientFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<TransientFailure> for Error {
    fn from(f: TransientFailure) -> Self {
        f.error
    }
}

/// BDF1 startup, then BDF2 when `bdf_order == 2`, with a fixed step.
pub fn solve_transient(
    problem: &ThermalProblem,
    tsettings: &TransientSettings,
    nsettings: &NewtonSettings,
) -> std::result::Result<SolutionSeries, TransientFailure> {
    let fail = |error| TransientFailure {
        partial: SolutionSeries::default(),
        error,
    };
    problem.validate().map_err(fail)?;
    tsettings.validate().map_err(fail)?;
    nsettings.validate().map_err(fail)?;

    let mut series = SolutionSeries::default();
    let theta0 = problem.initial_field();
    series.times.push(0.0);
    series.fields.push(theta0);
    series.iterations.push(0);
    series.residual_norms.push(0.0);

    let dt = tsettings.dt;
    let mut newton = Newton::new(problem, *nsettings);
    for k in 1..=tsettings.steps() {
        let t = k as f64 * dt;
        let cur = &series.fields[k - 1];
        let rate = if tsettings.bdf_order == 1 || k == 1 {
            RateTerm {
                current_weight: 1.0 / dt,
                history: cur.iter().map(|v| -v / dt).collect(),
            }
        } else {
            let prev = &series.fields[k - 2];
            RateTerm {
                current_weight: 1.5 / dt,
                history: cur.iter().zip(prev).map(|(c, p)| (-2.0 * c + 0.5 * p) / dt).collect(),
            }
        };
        match newton.solve(cur.clone(), Some(&rate), t, k) {
            Ok(sol) => {
                series.times.push(t);
                series.fields.push(sol.theta);
                series.iterations.push(sol.iterations);
                series.residual_norms.push(sol.residual_norm);
                series.log.extend(sol.log);
            }
            Err(e) => {
                return Err(TransientFailure {
                    partial: series,
                    error: Error::StepFailure {
                        step: k,
                        time: t,
                        source: Box::new(e),
                    },
                })
            }
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{Source, SurfaceExchange};
    use crate::geometry::Domain2D;
    use crate::materials::{builtin_material, BuiltinMaterial, Coolant, PropertyMode};
    use crate::mesh::{build_structured_mesh, tag_boundary, BoundarySpec, ChannelMesh, ElementOrder};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn plain_problem(n: usize, flux: f64, emissivity: f64) -> ThermalProblem {
        let grid = build_structured_mesh(&Domain2D::default(), n).unwrap();
        let mesh = tag_boundary(&ChannelMesh::without_channel(&grid, ElementOrder::Linear), &BoundarySpec::adiabatic());
        let surface = SurfaceExchange {
            emissivity,
            ..SurfaceExchange::default()
        };
        ThermalProblem::new(
            Arc::new(mesh),
            builtin_material(BuiltinMaterial::CfrpLike, PropertyMode::Constant),
            Coolant::water(1.0).unwrap(),
            Source::Uniform(flux),
            surface,
        )
    }

    #[test]
    fn equilibrium_needs_no_iterations() {
        let p = plain_problem(4, 0.0, 0.97);
        let sol = solve_steady(&p, &NewtonSettings::default(), None).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.theta.iter().all(|&t| t == 296.42));
    }

    #[test]
    fn linear_balance_in_one_iteration() {
        let p = plain_problem(3, 1000.0, 0.0);
        let sol = solve_steady(&p, &NewtonSettings::default(), None).unwrap();
        assert_eq!(sol.iterations, 1);
        for t in &sol.theta {
            assert_relative_eq!(*t, 296.42 + 1000.0 / 21.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn radiation_converges_quadratically() {
        let p = plain_problem(4, 2000.0, 0.97);
        let sol = solve_steady(&p, &NewtonSettings::default(), None).unwrap();
        assert!(sol.iterations <= 8);
        let r: Vec<f64> = sol.log.iter().map(|r| r.residual_norm).collect();
        let k = r.len() - 2;
        assert!(r[k] / r[k - 1].powi(2) < 1e3, "{r:?}");
    }

    #[test]
    fn invalid_settings_rejected() {
        let p = plain_problem(2, 0.0, 0.0);
        let bad = NewtonSettings {
            damping: 0.0,
            ..NewtonSettings::default()
        };
        assert!(matches!(solve_steady(&p, &bad, None), Err(Error::InvalidInput(_))));
        let t = TransientSettings {
            bdf_order: 3,
            ..TransientSettings::default()
        };
        assert!(solve_transient(&p, &t, &NewtonSettings::default()).is_err());
    }

    #[test]
    fn iteration_limit_reports_non_convergence() {
        let p = plain_problem(3, 2000.0, 0.97);
        let s = NewtonSettings {
            max_iters: 1,
            ..NewtonSettings::default()
        };
        assert!(matches!(
            solve_steady(&p, &s, None),
            Err(Error::NonConvergence { iterations: 1, .. })
        ));
    }

    #[test]
    fn transient_equilibrium_is_fixed_point() {
        let p = plain_problem(3, 0.0, 0.97);
        let t = TransientSettings {
            dt: 5.0,
            total_time: 50.0,
            bdf_order: 2,
        };
        let s = solve_transient(&p, &t, &NewtonSettings::default()).unwrap();
        assert_eq!(s.len(), 11);
        assert_relative_eq!(s.times[10], 50.0);
        assert!(s.fields.iter().flatten().all(|&v| v == 296.42));
    }

    #[test]
    fn failed_step_keeps_partial_series() {
        let p = plain_problem(3, 2000.0, 0.97);
        let t = TransientSettings {
            dt: 1.0,
            total_time: 5.0,
            bdf_order: 2,
        };
        let s = NewtonSettings {
            max_iters: 1,
            ..NewtonSettings::default()
        };
        let err = solve_transient(&p, &t, &s).unwrap_err();
        assert!(matches!(err.error, Error::StepFailure { step: 1, .. }));
        assert_eq!(err.partial.len(), 1);
    }

    #[test]
    fn kelvin_check() {
        assert!(check_kelvin(&[1.0, 2.0]).is_ok());
        assert!(matches!(check_kelvin(&[1.0, -2.0]), Err(Error::NonPositiveTemperature { node: 1, .. })));
    }
}
