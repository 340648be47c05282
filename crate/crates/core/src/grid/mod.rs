//! Finite-volume evolution of density, momentum, internal energy and
//! magnetic field on a box with no-slip walls and mixed thermal/magnetic
//! boundary conditions, plus conservation and entropy diagnostics.

mod boundary;
mod diagnostics;
mod divb;
mod io;
mod run;
mod solver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::ConstitutiveError;
use crate::eos::{EosError, ThermoPoint, Thermodynamics};
use crate::tensor::Vec3;

pub use boundary::{cell_gradients, CellGradients, Extended};
pub use diagnostics::{
    admissible_theta_tilde, ballistic_energy, entropy_audit, production_field, totals, AuditInterval, EntropyAudit,
    Totals,
};
pub use divb::{divergence, max_divergence, project_div_b, ProjectionReport};
pub use io::{read_snapshot, write_snapshot, write_time_series, Snapshot, TimeSeriesRow, TIME_SERIES_COLUMNS};
pub use run::{run, run_aligned, time_series, Trajectory};
pub use solver::{compute_dt, make_equilibrium, rhs, step, Problem, StageRates};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("positivity lost at cell {cell:?}, t = {t}: {detail}")]
    Positivity { cell: [usize; 3], t: f64, detail: String },
    #[error("time step rejected: {0}")]
    Cfl(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("divergence projection did not converge: residual {residual:e} after {iterations} iterations")]
    Solve { iterations: usize, residual: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalBc {
    /// theta = theta_B on the face.
    Dirichlet,
    /// Zero heat flux through the face.
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagneticBc {
    /// Tangential components prescribed.
    Tangential,
    /// Normal component prescribed, zero tangential current.
    Normal,
}

/// Boundary tags of one face; the velocity always vanishes on walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceTags {
    pub thermal: ThermalBc,
    pub magnetic: MagneticBc,
}

impl FaceTags {
    pub const fn new(thermal: ThermalBc, magnetic: MagneticBc) -> Self {
        Self { thermal, magnetic }
    }
}

/// A box of cells; axes beyond `dim` carry a single cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    lo: [f64; 3],
    len: [f64; 3],
    h: [f64; 3],
    /// faces[axis][side], side 0 at the lower coordinate.
    faces: [[FaceTags; 2]; 3],
}

impl Grid {
    pub fn new(dim: usize, cells: &[usize], extent: &[f64], faces: [[FaceTags; 2]; 3]) -> Result<Self, SolverError> {
        if !(1..=3).contains(&dim) || cells.len() != dim || extent.len() != dim {
            return Err(SolverError::Config(format!("dimension {dim} does not match cells/extent")));
        }
        let mut n = [1; 3];
        let mut len = [1.0; 3];
        for d in 0..dim {
            if cells[d] < 2 {
                return Err(SolverError::Config(format!("need at least two cells along axis {d}")));
            }
            if !(extent[d] > 0.0) || !extent[d].is_finite() {
                return Err(SolverError::Config(format!("extent along axis {d} must be positive")));
            }
            n[d] = cells[d];
            len[d] = extent[d];
        }
        let h = [len[0] / n[0] as f64, len[1] / n[1] as f64, len[2] / n[2] as f64];
        let grid = Self { dim, n, lo: [0.0; 3], len, h, faces };
        if !grid.boundary_faces().any(|(d, s)| grid.faces[d][s].thermal == ThermalBc::Dirichlet) {
            return Err(SolverError::Config("at least one face must carry a temperature condition".into()));
        }
        Ok(grid)
    }

    /// Unit-length box with identical tags on every face.
    pub fn uniform(dim: usize, cells: usize, tags: FaceTags) -> Result<Self, SolverError> {
        Self::new(dim, &vec![cells; dim], &vec![1.0; dim], [[tags; 2]; 3])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> [usize; 3] {
        self.n
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.h
    }

    pub fn extent(&self) -> [f64; 3] {
        self.len
    }

    pub fn faces(&self) -> &[[FaceTags; 2]; 3] {
        &self.faces
    }

    pub fn face(&self, axis: usize, side: usize) -> FaceTags {
        self.faces[axis][side]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest spacing over the active axes.
    pub fn h_min(&self) -> f64 {
        (0..self.dim).map(|d| self.h[d]).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|d| self.h[d]).product()
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.n[1] + c[1]) * self.n[0] + c[0]
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let j = (idx / self.n[0]) % self.n[1];
        let k = idx / (self.n[0] * self.n[1]);
        [i, j, k]
    }

    /// Cell center; inactive axes sit at the middle of their unit extent.
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for d in 0..3 {
            x[d] = self.lo[d] + (c[d] as f64 + 0.5) * self.h[d];
        }
        x
    }

    /// Active (axis, side) pairs.
    pub fn boundary_faces(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim).flat_map(|d| [(d, 0), (d, 1)])
    }

    /// Same shape and spacing.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.len == other.len && self.faces == other.faces
    }

    /// The same box refined by an integer factor along every active axis.
    pub fn refined(&self, factor: usize) -> Self {
        let cells: Vec<usize> = (0..self.dim).map(|d| self.n[d] * factor).collect();
        let extent: Vec<f64> = (0..self.dim).map(|d| self.len[d]).collect();
        Self::new(self.dim, &cells, &extent, self.faces).expect("refinement of a valid grid")
    }
}

/// Boundary values: a temperature per face and a constant background field
/// supplying both the tangential and the normal magnetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    /// theta_B[axis][side]; only read on faces tagged Dirichlet.
    pub theta_b: [[f64; 2]; 3],
    /// Stationary background field; constant fields are divergence and curl free.
    pub b_b: Vec3,
}

impl BoundaryData {
    pub fn uniform(theta: f64, b: Vec3) -> Self {
        Self { theta_b: [[theta; 2]; 3], b_b: b }
    }

    pub fn validate(&self, grid: &Grid) -> Result<(), SolverError> {
        for (d, s) in grid.boundary_faces() {
            if grid.face(d, s).thermal == ThermalBc::Dirichlet && !(self.theta_b[d][s] > 0.0) {
                return Err(SolverError::Config(format!("boundary temperature on face ({d}, {s}) must be positive")));
            }
        }
        if self.b_b.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Config("boundary field must be finite".into()));
        }
        Ok(())
    }
}

/// Magnetic divergence control applied after every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DivControl {
    #[default]
    None,
    Projection,
    ConstrainedTransport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    /// Hard cap on the number of steps (0 = unlimited).
    pub max_steps: usize,
    pub div_control: DivControl,
    /// Tolerance of the divergence projection.
    pub div_tol: f64,
    /// Record a frame every this many steps.
    pub snapshot_every: usize,
    /// Fault injection: subtract the resistive heating instead of adding it.
    pub flip_resistive_heating: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            t_end: 0.1,
            max_steps: 0,
            div_control: DivControl::None,
            div_tol: 1e-10,
            snapshot_every: 1,
            flip_resistive_heating: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, grid: &Grid) -> Result<(), SolverError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::Config(format!("CFL {} outside (0, 1]", self.cfl)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(SolverError::Config("end time must be positive".into()));
        }
        if self.snapshot_every == 0 {
            return Err(SolverError::Config("snapshot cadence must be at least one step".into()));
        }
        if self.div_control == DivControl::ConstrainedTransport && grid.dim() != 2 {
            return Err(SolverError::Config("constrained transport is available in 2D only".into()));
        }
        Ok(())
    }
}

/// Vertex-centered vector potential A_z of the in-plane field (2D).
#[derive(Debug, Clone, PartialEq)]
pub struct CtPotential {
    /// (nx + 1) x (ny + 1) nodes, x fastest.
    pub a: Vec<f64>,
}

/// Conserved cell averages.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub mom: Vec<Vec3>,
    /// Internal energy density rho e.
    pub eps: Vec<f64>,
    pub b: Vec<Vec3>,
    /// Present only under constrained transport.
    pub ct: Option<CtPotential>,
}

/// Density, velocity, temperature and field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: Vec3,
    pub theta: f64,
    pub b: Vec3,
}

impl FluidState {
    /// Sample primitive variables at cell centers.
    pub fn from_primitives<E, F>(grid: &Grid, eos: &E, f: F) -> Result<Self, SolverError>
    where
        E: Thermodynamics + ?Sized,
        F: Fn([f64; 3]) -> Primitive,
    {
        let n = grid.len();
        let mut s = Self {
            t: 0.0,
            rho: Vec::with_capacity(n),
            mom: Vec::with_capacity(n),
            eps: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
            ct: None,
        };
        for idx in 0..n {
            let p = f(grid.center(idx));
            let pt = ThermoPoint::new(p.rho, p.theta).map_err(|_| SolverError::Positivity {
                cell: grid.coords(idx),
                t: 0.0,
                detail: format!("initial rho = {}, theta = {}", p.rho, p.theta),
            })?;
            s.rho.push(p.rho);
            s.mom.push([p.rho * p.u[0], p.rho * p.u[1], p.rho * p.u[2]]);
            s.eps.push(p.rho * eos.internal_energy(pt)?);
            s.b.push(p.b);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn velocity(&self, idx: usize) -> Vec3 {
        let r = self.rho[idx];
        [self.mom[idx][0] / r, self.mom[idx][1] / r, self.mom[idx][2] / r]
    }

    /// Recover primitive variables of one cell.
    pub fn primitive<E: Thermodynamics + ?Sized>(&self, eos: &E, idx: usize) -> Result<Primitive, EosError> {
        let rho = self.rho[idx];
        let theta = eos.temperature(rho, self.eps[idx] / rho)?;
        Ok(Primitive { rho, u: self.velocity(idx), theta, b: self.b[idx] })
    }

    /// Temperatures of all cells, failing with a cell report.
    pub fn temperatures<E: Thermodynamics + ?Sized>(&self, grid: &Grid, eos: &E) -> Result<Vec<f64>, SolverError> {
        (0..self.len())
            .map(|i| {
                if !(self.rho[i] > 0.0) {
                    return Err(SolverError::Positivity {
                        cell: grid.coords(i),
                        t: self.t,
                        detail: format!("rho = {}", self.rho[i]),
                    });
                }
                eos.temperature(self.rho[i], self.eps[i] / self.rho[i]).map_err(|e| SolverError::Positivity {
                    cell: grid.coords(i),
                    t: self.t,
                    detail: e.to_string(),
                })
            })
            .collect()
    }

    /// Attach a vector potential for constrained transport and set the
    /// in-plane cell fields to the face averages it implies.
    pub fn attach_potential<F: Fn(f64, f64) -> f64>(&mut self, grid: &Grid, potential: F) -> Result<(), SolverError> {
        if grid.dim() != 2 {
            return Err(SolverError::Config("vector potential requires a 2D grid".into()));
        }
        let [nx, ny, _] = grid.cells();
        let [hx, hy, _] = grid.spacing();
        let mut a = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                a.push(potential(i as f64 * hx, j as f64 * hy));
            }
        }
        self.ct = Some(CtPotential { a });
        divb::sync_cell_field(grid, self);
        Ok(())
    }
}
