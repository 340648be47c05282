use std::sync::Arc;

use rayon::prelude::*;

use super::boundary::{cell_gradients, field_odd, CellGradients, Extended, PAR_MIN};
use super::divb;
use super::{BoundaryData, DivControl, FluidState, Grid, MagneticBc, Primitive, SolverConfig, SolverError, ThermalBc};
use crate::constitutive::{stress_from, sym_grad, viscous_dissipation, TransportModel};
use crate::eos::{ThermoPoint, Thermodynamics};
use crate::tensor::{cross, curl_from_gradient, trace, Vec3, ZERO33};

/// Conserved components per cell: rho, m_x, m_y, m_z, eps, B_x, B_y, B_z.
pub(crate) const NVAR: usize = 8;
type Cons = [f64; NVAR];

/// Everything a run needs besides the state.
#[derive(Clone)]
pub struct Problem {
    pub grid: Grid,
    pub eos: Arc<dyn Thermodynamics>,
    pub transport: TransportModel,
    pub boundary: BoundaryData,
    pub config: SolverConfig,
}

impl Problem {
    pub fn new(
        grid: Grid,
        eos: Arc<dyn Thermodynamics>,
        transport: TransportModel,
        boundary: BoundaryData,
        config: SolverConfig,
    ) -> Result<Self, SolverError> {
        transport.validate()?;
        boundary.validate(&grid)?;
        config.validate(&grid)?;
        Ok(Self { grid, eos, transport, boundary, config })
    }

    /// The boundary temperature if every Dirichlet face carries the same value.
    pub fn uniform_boundary_temperature(&self) -> Option<f64> {
        let mut vals = self
            .grid
            .boundary_faces()
            .filter(|&(d, s)| self.grid.face(d, s).thermal == ThermalBc::Dirichlet)
            .map(|(d, s)| self.boundary.theta_b[d][s]);
        let first = vals.next()?;
        vals.all(|v| v == first).then_some(first)
    }
}

/// Time derivatives of the conserved variables (and of the vector potential
/// under constrained transport).
#[derive(Debug, Clone)]
pub struct StageRates {
    pub cells: Vec<[f64; NVAR]>,
    pub potential: Option<Vec<f64>>,
}

/// Rest state (rho, theta, b) and the boundary data that keeps it at rest.
pub fn make_equilibrium(
    grid: &Grid,
    eos: &dyn Thermodynamics,
    rho: f64,
    theta: f64,
    b: Vec3,
) -> Result<(FluidState, BoundaryData), SolverError> {
    if !(rho > 0.0 && theta > 0.0) || !rho.is_finite() || !theta.is_finite() {
        return Err(SolverError::Domain(format!("equilibrium needs positive rho and theta, got ({rho}, {theta})")));
    }
    let state = FluidState::from_primitives(grid, eos, |_| Primitive { rho, u: [0.0; 3], theta, b })?;
    Ok((state, BoundaryData::uniform(theta, b)))
}

/// CFL-limited step: hyperbolic limit from the fast magnetosonic speed and
/// parabolic limit from the largest diffusivity.
pub fn compute_dt(problem: &Problem, state: &FluidState) -> Result<f64, SolverError> {
    let ext = Extended::build(&problem.grid, problem.eos.as_ref(), &problem.boundary, state)?;
    dt_from(problem, &ext)
}

pub(crate) fn dt_from(problem: &Problem, ext: &Extended) -> Result<f64, SolverError> {
    let grid = &problem.grid;
    let h = grid.spacing();
    let dim = grid.dim();
    let limits: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .with_min_len(PAR_MIN)
        .map(|i| {
            let e = ext.interior(grid.coords(i));
            let cf = ext.fast_speed(e);
            let inv_hyp: f64 = (0..dim).map(|d| (ext.u[e][d].abs() + cf) / h[d]).sum();
            let (rho, theta) = (ext.rho[e], ext.theta[e]);
            let c = problem.transport.at(rho, theta);
            let cv = problem.eos.heat_capacity(ThermoPoint { rho, theta })?;
            let visc = c.mu.max((4.0 * c.mu + c.eta) / 3.0) / rho;
            let diff = visc.max(c.kappa / (rho * cv)).max(c.zeta);
            Ok((inv_hyp, diff))
        })
        .collect::<Result<_, SolverError>>()?;
    let inv_hyp = limits.iter().map(|l| l.0).fold(0.0, f64::max);
    let diff = limits.iter().map(|l| l.1).fold(0.0, f64::max);
    let hmin = grid.h_min();
    let hyp = if inv_hyp > 0.0 { 1.0 / inv_hyp } else { f64::INFINITY };
    let par = if diff > 0.0 { hmin * hmin / (2.0 * dim as f64 * diff) } else { f64::INFINITY };
    let dt = problem.config.cfl * hyp.min(par);
    if !dt.is_finite() || dt < 1e-14 {
        return Err(SolverError::Cfl(format!("admissible step {dt:e} is unusable")));
    }
    Ok(dt)
}

fn face_shape(grid: &Grid, d: usize) -> [usize; 3] {
    let mut s = grid.cells();
    s[d] += 1;
    s
}

fn physical_flux(ext: &Extended, i: usize, d: usize) -> Cons {
    let rho = ext.rho[i];
    let u = ext.u[i];
    let b = ext.b[i];
    let ud = u[d];
    let mut f = [0.0; NVAR];
    f[0] = rho * ud;
    for k in 0..3 {
        f[1 + k] = rho * u[k] * ud;
        f[5 + k] = ud * b[k] - b[d] * u[k];
    }
    f[1 + d] += ext.p[i];
    f[4] = ext.eps[i] * ud;
    f
}

fn conserved(ext: &Extended, i: usize) -> Cons {
    let rho = ext.rho[i];
    let u = ext.u[i];
    let b = ext.b[i];
    [rho, rho * u[0], rho * u[1], rho * u[2], ext.eps[i], b[0], b[1], b[2]]
}

/// Rusanov flux plus the parabolic (viscous, heat, resistive) flux across
/// one face.
fn face_flux(problem: &Problem, ext: &Extended, grads: &CellGradients, d: usize, fc: [usize; 3]) -> Cons {
    let grid = &problem.grid;
    let n = grid.cells();
    let h = grid.spacing();
    let mut cl = [fc[0] + ext.ghost[0], fc[1] + ext.ghost[1], fc[2] + ext.ghost[2]];
    cl[d] = fc[d];
    let mut cr = cl;
    cr[d] = fc[d] + 1;
    let (l, r) = (ext.index(cl), ext.index(cr));

    let fl = physical_flux(ext, l, d);
    let fr = physical_flux(ext, r, d);
    let (ql, qr) = (conserved(ext, l), conserved(ext, r));
    let a = (ext.u[l][d].abs() + ext.fast_speed(l)).max(ext.u[r][d].abs() + ext.fast_speed(r));
    let mut f = [0.0; NVAR];
    for k in 0..NVAR {
        f[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * a * (qr[k] - ql[k]);
    }
    // The normal field component has no flux along its own axis.
    f[5 + d] = 0.0;

    // Face gradients: normal part from the jump, tangential parts averaged
    // from the adjacent cells (on walls, from the interior cell with the
    // reflection parity of each component).
    let inv = 1.0 / h[d];
    let mut gu = ZERO33;
    let mut gb = ZERO33;
    let mut gt = [0.0; 3];
    for k in 0..3 {
        gu[k][d] = (ext.u[r][k] - ext.u[l][k]) * inv;
        gb[k][d] = (ext.b[r][k] - ext.b[l][k]) * inv;
    }
    gt[d] = (ext.theta[r] - ext.theta[l]) * inv;

    let left = (fc[d] >= 1).then(|| {
        let mut c = fc;
        c[d] -= 1;
        grid.index(c)
    });
    let right = (fc[d] < n[d]).then(|| grid.index(fc));
    match (left, right) {
        (Some(li), Some(ri)) => {
            for t in (0..grid.dim()).filter(|&t| t != d) {
                for k in 0..3 {
                    gu[k][t] = 0.5 * (grads.u[li][k][t] + grads.u[ri][k][t]);
                    gb[k][t] = 0.5 * (grads.b[li][k][t] + grads.b[ri][k][t]);
                }
                gt[t] = 0.5 * (grads.theta[li][t] + grads.theta[ri][t]);
            }
        }
        (Some(q), None) | (None, Some(q)) => {
            let side = usize::from(right.is_none());
            let tags = grid.face(d, side);
            for t in (0..grid.dim()).filter(|&t| t != d) {
                for k in 0..3 {
                    if !field_odd(tags.magnetic, d, k) {
                        gb[k][t] = grads.b[q][k][t];
                    }
                }
                if tags.thermal == ThermalBc::Neumann {
                    gt[t] = grads.theta[q][t];
                }
            }
        }
        (None, None) => unreachable!("a face borders at least one cell"),
    }

    let rho_f = 0.5 * (ext.rho[l] + ext.rho[r]);
    let theta_f = 0.5 * (ext.theta[l] + ext.theta[r]);
    let c = problem.transport.at(rho_f, theta_f);
    let stress = stress_from(&c, &sym_grad(&gu));
    for k in 0..3 {
        f[1 + k] -= stress[k][d];
    }
    f[4] -= c.kappa * gt[d];
    let j = curl_from_gradient(&gb);
    // Resistive flux of B_k along d is zeta eps_{k d m} J_m.
    for k in 0..3 {
        if k == d {
            continue;
        }
        let m = 3 - k - d;
        let sign = if (k + 1) % 3 == d { 1.0 } else { -1.0 };
        f[5 + k] += c.zeta * sign * j[m];
    }
    f
}

/// Semi-discrete right-hand side.
pub fn rhs(problem: &Problem, state: &FluidState) -> Result<StageRates, SolverError> {
    let ext = Extended::build(&problem.grid, problem.eos.as_ref(), &problem.boundary, state)?;
    Ok(rhs_from(problem, state, &ext))
}

pub(crate) fn rhs_from(problem: &Problem, state: &FluidState, ext: &Extended) -> StageRates {
    let grid = &problem.grid;
    let dim = grid.dim();
    let h = grid.spacing();
    let grads = cell_gradients(grid, ext);

    let fluxes: Vec<Vec<Cons>> = (0..dim)
        .map(|d| {
            let shape = face_shape(grid, d);
            let count = shape[0] * shape[1] * shape[2];
            (0..count)
                .into_par_iter()
                .with_min_len(PAR_MIN)
                .map(|f| {
                    let fc = [f % shape[0], (f / shape[0]) % shape[1], f / (shape[0] * shape[1])];
                    face_flux(problem, ext, &grads, d, fc)
                })
                .collect()
        })
        .collect();

    let flip = problem.config.flip_resistive_heating;
    let cells: Vec<Cons> = (0..grid.len())
        .into_par_iter()
        .with_min_len(PAR_MIN)
        .map(|i| {
            let c = grid.coords(i);
            let mut out = [0.0; NVAR];
            for (d, flux) in fluxes.iter().enumerate() {
                let shape = face_shape(grid, d);
                let lo = (c[2] * shape[1] + c[1]) * shape[0] + c[0];
                let mut hi_c = c;
                hi_c[d] += 1;
                let hi = (hi_c[2] * shape[1] + hi_c[1]) * shape[0] + hi_c[0];
                for k in 0..NVAR {
                    out[k] -= (flux[hi][k] - flux[lo][k]) / h[d];
                }
            }
            let e = ext.interior(c);
            let j = curl_from_gradient(&grads.b[i]);
            let lorentz = cross(j, ext.b[e]);
            for k in 0..3 {
                out[1 + k] += lorentz[k];
            }
            let coef = problem.transport.at(ext.rho[e], ext.theta[e]);
            let d = sym_grad(&grads.u[i]);
            let j2 = j[0] * j[0] + j[1] * j[1] + j[2] * j[2];
            let resist = if flip { -coef.zeta * j2 } else { coef.zeta * j2 };
            out[4] += -ext.p[e] * trace(&grads.u[i]) + viscous_dissipation(&coef, &d) + resist;
            out
        })
        .collect();

    let potential = state.ct.as_ref().map(|_| potential_rate(grid, &fluxes));
    StageRates { cells, potential }
}

/// dA_z/dt = -E_z at vertices, E_z averaged from the face fluxes of the
/// in-plane field. Vertices on faces with a prescribed normal field are held.
fn potential_rate(grid: &Grid, fluxes: &[Vec<Cons>]) -> Vec<f64> {
    let [nx, ny, _] = grid.cells();
    let mut rate = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            let mut sum = 0.0;
            let mut count = 0.0;
            // x-faces: index (i, row) in an (nx+1) x ny array; E_z = -F(B_y).
            for row in [j.wrapping_sub(1), j] {
                if row < ny {
                    sum -= fluxes[0][row * (nx + 1) + i][6];
                    count += 1.0;
                }
            }
            // y-faces: index (col, j) in an nx x (ny+1) array; E_z = F(B_x).
            for col in [i.wrapping_sub(1), i] {
                if col < nx {
                    sum += fluxes[1][j * nx + col][5];
                    count += 1.0;
                }
            }
            let held = (i == 0 && grid.face(0, 0).magnetic == MagneticBc::Normal)
                || (i == nx && grid.face(0, 1).magnetic == MagneticBc::Normal)
                || (j == 0 && grid.face(1, 0).magnetic == MagneticBc::Normal)
                || (j == ny && grid.face(1, 1).magnetic == MagneticBc::Normal);
            rate[j * (nx + 1) + i] = if held { 0.0 } else { -sum / count };
        }
    }
    rate
}

fn combine(base: &FluidState, a: f64, other: &FluidState, b: f64, rates: &StageRates, dt: f64) -> FluidState {
    let n = base.len();
    let mut out = base.clone();
    for i in 0..n {
        let r = &rates.cells[i];
        out.rho[i] = a * base.rho[i] + b * (other.rho[i] + dt * r[0]);
        for k in 0..3 {
            out.mom[i][k] = a * base.mom[i][k] + b * (other.mom[i][k] + dt * r[1 + k]);
            out.b[i][k] = a * base.b[i][k] + b * (other.b[i][k] + dt * r[5 + k]);
        }
        out.eps[i] = a * base.eps[i] + b * (other.eps[i] + dt * r[4]);
    }
    if let (Some(ct), Some(rate)) = (out.ct.as_mut(), rates.potential.as_ref()) {
        let a0 = &base.ct.as_ref().expect("potential present").a;
        let a1 = &other.ct.as_ref().expect("potential present").a;
        for (k, v) in ct.a.iter_mut().enumerate() {
            *v = a * a0[k] + b * (a1[k] + dt * rate[k]);
        }
    }
    out
}

/// One SSP-RK2 step of size `dt`, followed by the configured divergence
/// control.
pub fn step(problem: &Problem, state: &FluidState, dt: f64) -> Result<FluidState, SolverError> {
    let ext = Extended::build(&problem.grid, problem.eos.as_ref(), &problem.boundary, state)?;
    step_from(problem, state, &ext, dt)
}

pub(crate) fn step_from(
    problem: &Problem,
    state: &FluidState,
    ext: &Extended,
    dt: f64,
) -> Result<FluidState, SolverError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SolverError::Cfl(format!("step size {dt} must be positive")));
    }
    let grid = &problem.grid;
    let r0 = rhs_from(problem, state, ext);
    let mut u1 = combine(state, 0.0, state, 1.0, &r0, dt);
    u1.t = state.t + dt;
    if u1.ct.is_some() {
        divb::sync_cell_field(grid, &mut u1);
    }
    let r1 = rhs(problem, &u1)?;
    let mut u2 = combine(state, 0.5, &u1, 0.5, &r1, dt);
    u2.t = state.t + dt;
    match problem.config.div_control {
        DivControl::None => {}
        DivControl::ConstrainedTransport => divb::sync_cell_field(grid, &mut u2),
        DivControl::Projection => {
            divb::project_div_b(grid, &problem.boundary, &mut u2, problem.config.div_tol)?;
        }
    }
    Ok(u2)
}
