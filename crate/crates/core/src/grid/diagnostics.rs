use rayon::prelude::*;
use serde::Serialize;

use super::boundary::{cell_gradients, field_odd, Extended, PAR_MIN};
use super::solver::Problem;
use super::{FluidState, Grid, SolverError, ThermalBc};
use crate::constitutive::{dissipation_terms, sym_grad, TensorPoint};
use crate::eos::ThermoPoint;
use crate::numerics::pairwise_sum;
use crate::tensor::{curl_from_gradient, dot, norm2, Vec3};

/// Midpoint-rule integrals of the conserved quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Totals {
    pub mass: f64,
    pub momentum: Vec3,
    /// Kinetic plus internal plus magnetic energy.
    pub energy: f64,
    pub entropy: f64,
}

pub fn totals(problem: &Problem, state: &FluidState) -> Result<Totals, SolverError> {
    let grid = &problem.grid;
    let theta = state.temperatures(grid, problem.eos.as_ref())?;
    let vol = grid.cell_volume();
    let n = state.len();
    let entropy_density: Vec<f64> = (0..n)
        .into_par_iter()
        .with_min_len(PAR_MIN)
        .map(|i| Ok(state.rho[i] * problem.eos.entropy(ThermoPoint { rho: state.rho[i], theta: theta[i] })?))
        .collect::<Result<_, SolverError>>()?;
    let energy: Vec<f64> = (0..n)
        .map(|i| 0.5 * dot(state.mom[i], state.mom[i]) / state.rho[i] + state.eps[i] + 0.5 * norm2(state.b[i]))
        .collect();
    let mom = |k: usize| vol * pairwise_sum(&state.mom.iter().map(|m| m[k]).collect::<Vec<_>>());
    Ok(Totals {
        mass: vol * pairwise_sum(&state.rho),
        momentum: [mom(0), mom(1), mom(2)],
        energy: vol * pairwise_sum(&energy),
        entropy: vol * pairwise_sum(&entropy_density),
    })
}

/// Pointwise entropy production with the solver's cell stencils.
pub fn production_field(problem: &Problem, state: &FluidState) -> Result<Vec<f64>, SolverError> {
    let grid = &problem.grid;
    let ext = Extended::build(grid, problem.eos.as_ref(), &problem.boundary, state)?;
    Ok(production_from(problem, &ext))
}

fn production_from(problem: &Problem, ext: &Extended) -> Vec<f64> {
    let grid = &problem.grid;
    let grads = cell_gradients(grid, ext);
    (0..grid.len())
        .into_par_iter()
        .with_min_len(PAR_MIN)
        .map(|i| {
            let e = ext.interior(grid.coords(i));
            let theta = ext.theta[e];
            let c = problem.transport.at(ext.rho[e], theta);
            let tp = TensorPoint {
                d: sym_grad(&grads.u[i]),
                grad_theta: grads.theta[i],
                curl_b: curl_from_gradient(&grads.b[i]),
            };
            let (v, h, r) = dissipation_terms(&c, theta, &tp);
            (v + h + r) / theta
        })
        .collect()
}

/// Entropy leaving through the temperature-controlled faces, the integral
/// of (q . n) / theta_B with the solver's one-sided wall gradient.
fn boundary_entropy_flux(problem: &Problem, ext: &Extended) -> f64 {
    let grid = &problem.grid;
    let n = grid.cells();
    let h = grid.spacing();
    let mut parts = Vec::new();
    for (d, side) in grid.boundary_faces() {
        if grid.face(d, side).thermal != ThermalBc::Dirichlet {
            continue;
        }
        let tb = problem.boundary.theta_b[d][side];
        let area: f64 = (0..grid.dim()).filter(|&a| a != d).map(|a| h[a]).product();
        for i in 0..grid.len() {
            let c = grid.coords(i);
            if c[d] != if side == 0 { 0 } else { n[d] - 1 } {
                continue;
            }
            let e = ext.interior(c);
            let kappa = problem.transport.at(ext.rho[e], tb).kappa;
            let qn = 2.0 * kappa * (ext.theta[e] - tb) / h[d];
            parts.push(area * qn / tb);
        }
    }
    pairwise_sum(&parts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditInterval {
    pub t0: f64,
    pub t1: f64,
    pub entropy_rate: f64,
    pub boundary_flux: f64,
    pub production: f64,
    /// d/dt S + boundary flux - production; negative values contradict the
    /// entropy inequality.
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyAudit {
    pub tolerance: f64,
    pub intervals: Vec<AuditInterval>,
    /// Smallest (most negative) residual.
    pub worst: f64,
    /// Smallest pointwise production over all frames.
    pub production_min: f64,
    pub passed: bool,
}

/// Entropy balance between consecutive frames, with the flux and production
/// integrated by the trapezoidal rule in time.
pub fn entropy_audit(problem: &Problem, frames: &[FluidState], c_audit: f64) -> Result<EntropyAudit, SolverError> {
    let grid = &problem.grid;
    let tolerance = c_audit * grid.h_min();
    let vol = grid.cell_volume();
    let mut samples = Vec::with_capacity(frames.len());
    let mut production_min = f64::INFINITY;
    for f in frames {
        let ext = Extended::build(grid, problem.eos.as_ref(), &problem.boundary, f)?;
        let prod = production_from(problem, &ext);
        production_min = prod.iter().fold(production_min, |m, &v| m.min(v));
        let s = totals(problem, f)?.entropy;
        samples.push((f.t, s, boundary_entropy_flux(problem, &ext), vol * pairwise_sum(&prod)));
    }
    let intervals: Vec<AuditInterval> = samples
        .windows(2)
        .map(|w| {
            let (t0, s0, f0, p0) = w[0];
            let (t1, s1, f1, p1) = w[1];
            let entropy_rate = (s1 - s0) / (t1 - t0);
            let boundary_flux = 0.5 * (f0 + f1);
            let production = 0.5 * (p0 + p1);
            let residual = entropy_rate + boundary_flux - production;
            AuditInterval { t0, t1, entropy_rate, boundary_flux, production, residual, passed: residual >= -tolerance }
        })
        .collect();
    let worst = intervals.iter().map(|i| i.residual).fold(f64::INFINITY, f64::min);
    let passed = intervals.iter().all(|i| i.passed) && production_min >= 0.0;
    Ok(EntropyAudit { tolerance, intervals, worst, production_min, passed })
}

const ADMISSIBILITY_TOL: f64 = 1e-8;

/// Check that a temperature test field is positive and matches the boundary
/// temperature on the Dirichlet faces (sampled at boundary face centers).
pub fn admissible_theta_tilde(problem: &Problem, theta_tilde: &dyn Fn([f64; 3]) -> f64) -> Result<(), SolverError> {
    let grid = &problem.grid;
    for i in 0..grid.len() {
        let v = theta_tilde(grid.center(i));
        if !(v > 0.0) {
            return Err(SolverError::Constraint(format!("test temperature {v} at cell {:?}", grid.coords(i))));
        }
    }
    for (d, side, x) in boundary_face_centers(grid) {
        if grid.face(d, side).thermal == ThermalBc::Dirichlet {
            let gap = (theta_tilde(x) - problem.boundary.theta_b[d][side]).abs();
            if gap > ADMISSIBILITY_TOL {
                return Err(SolverError::Constraint(format!(
                    "test temperature differs from the boundary value by {gap:e} on face ({d}, {side})"
                )));
            }
        }
    }
    Ok(())
}

fn admissible_b_tilde(problem: &Problem, b_tilde: &dyn Fn([f64; 3]) -> Vec3) -> Result<(), SolverError> {
    let grid = &problem.grid;
    for (d, side, x) in boundary_face_centers(grid) {
        let tag = grid.face(d, side).magnetic;
        let v = b_tilde(x);
        for k in 0..3 {
            if field_odd(tag, d, k) {
                let gap = (v[k] - problem.boundary.b_b[k]).abs();
                if gap > ADMISSIBILITY_TOL {
                    return Err(SolverError::Constraint(format!(
                        "test field component {k} misses its boundary value by {gap:e} on face ({d}, {side})"
                    )));
                }
            }
        }
    }
    // Fourth-order central differences of the closure at cell centers.
    let step = 1e-3 * grid.h_min();
    for i in 0..grid.len() {
        let x = grid.center(i);
        let mut div = 0.0;
        for d in 0..grid.dim() {
            let at = |s: f64| {
                let mut y = x;
                y[d] += s * step;
                b_tilde(y)[d]
            };
            div += (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * step);
        }
        if div.abs() > ADMISSIBILITY_TOL {
            return Err(SolverError::Constraint(format!("test field divergence {div:e} at cell {:?}", grid.coords(i))));
        }
    }
    Ok(())
}

/// Centers of the boundary faces, as (axis, side, point).
fn boundary_face_centers(grid: &Grid) -> Vec<(usize, usize, [f64; 3])> {
    let n = grid.cells();
    let len = grid.extent();
    let mut out = Vec::new();
    for (d, side) in grid.boundary_faces() {
        for i in 0..grid.len() {
            let c = grid.coords(i);
            if c[d] != if side == 0 { 0 } else { n[d] - 1 } {
                continue;
            }
            let mut x = grid.center(i);
            x[d] = if side == 0 { 0.0 } else { len[d] };
            out.push((d, side, x));
        }
    }
    out
}

/// Integral of 1/2 rho |u|^2 + rho e + 1/2 |B|^2 - theta~ rho s - B~ . B.
pub fn ballistic_energy(
    problem: &Problem,
    state: &FluidState,
    theta_tilde: &dyn Fn([f64; 3]) -> f64,
    b_tilde: &dyn Fn([f64; 3]) -> Vec3,
) -> Result<f64, SolverError> {
    admissible_theta_tilde(problem, theta_tilde)?;
    admissible_b_tilde(problem, b_tilde)?;
    let grid = &problem.grid;
    let theta = state.temperatures(grid, problem.eos.as_ref())?;
    let vals: Vec<f64> = (0..state.len())
        .map(|i| {
            let x = grid.center(i);
            let s = problem.eos.entropy(ThermoPoint { rho: state.rho[i], theta: theta[i] })?;
            Ok(0.5 * dot(state.mom[i], state.mom[i]) / state.rho[i] + state.eps[i] + 0.5 * norm2(state.b[i])
                - theta_tilde(x) * state.rho[i] * s
                - dot(b_tilde(x), state.b[i]))
        })
        .collect::<Result<_, SolverError>>()?;
    Ok(grid.cell_volume() * pairwise_sum(&vals))
}
