//! Empirical Young measures built from ensembles of runs, and audits of the
//! weak identities a dissipative measure-valued solution must satisfy.

mod audit;
mod dictionary;

use serde::Serialize;
use thiserror::Error;

use crate::constitutive::{sym_grad, ConstitutiveError};
use crate::eos::EosError;
use crate::grid::{cell_gradients, Extended, FluidState, Grid, Problem, SolverError, Trajectory};
use crate::tensor::{curl_from_gradient, Mat3, Vec3};

pub use audit::{audit, AuditConfig, Auditor, BallisticAudit, DefectRow, DmvAudit, IdentityReport, TestOutcome};
pub use dictionary::{
    base_temperature, check_compact, check_curl_test, check_entropy_test, check_field, check_heat_test,
    check_induction_test, check_momentum_test, check_temperature, poly_mul, BallisticPair, BaseTemperature, CurlTest,
    Dictionary, Factor, FieldTest, HeatTest, ScalarEval, ScalarTest, TemperatureTest, TensorTest, VectorEval,
    VectorTest,
};

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum YoungMeasureError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid weights: {0}")]
    Weight(String),
    #[error("trajectories are not aligned: {0}")]
    Alignment(String),
    #[error("state outside the admissible domain: {0}")]
    Domain(String),
    #[error("test function violates its constraint: {0}")]
    Constraint(String),
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A point of the extended phase space: state plus gradient slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub rho: f64,
    pub u: Vec3,
    pub theta: f64,
    pub b: Vec3,
    /// Symmetric velocity gradient.
    pub d_u: Mat3,
    pub d_theta: Vec3,
    pub c_b: Vec3,
}

impl Atom {
    /// Finite entries, nonnegative density and temperature.
    pub fn validate(&self) -> Result<(), YoungMeasureError> {
        let finite = [self.rho, self.theta]
            .iter()
            .chain(&self.u)
            .chain(&self.b)
            .chain(&self.d_theta)
            .chain(&self.c_b)
            .chain(self.d_u.iter().flatten())
            .all(|v| v.is_finite());
        if !finite || self.rho < 0.0 || self.theta < 0.0 {
            return Err(YoungMeasureError::Domain(format!("atom with rho = {}, theta = {}", self.rho, self.theta)));
        }
        if (0..3)
            .any(|i| (0..i).any(|j| (self.d_u[i][j] - self.d_u[j][i]).abs() > 1e-12 * (1.0 + self.d_u[i][j].abs())))
        {
            return Err(YoungMeasureError::Domain("velocity-gradient slot is not symmetric".into()));
        }
        Ok(())
    }
}

/// A finite convex combination of atoms in every cell at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalYoungMeasure {
    pub t: f64,
    cells: Vec<Vec<(f64, Atom)>>,
}

impl EmpiricalYoungMeasure {
    /// Weights must be nonnegative and sum to one in every cell.
    pub fn new(t: f64, cells: Vec<Vec<(f64, Atom)>>) -> Result<Self, YoungMeasureError> {
        for (i, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(YoungMeasureError::Weight(format!("cell {i} carries no atoms")));
            }
            if let Some((w, _)) = cell.iter().find(|(w, _)| !(*w >= 0.0) || !w.is_finite()) {
                return Err(YoungMeasureError::Weight(format!("cell {i} has weight {w}")));
            }
            for (_, a) in cell {
                a.validate()?;
            }
            let total: f64 = cell.iter().map(|(w, _)| w).sum();
            if (total - 1.0).abs() > WEIGHT_TOL {
                return Err(YoungMeasureError::Weight(format!("weights in cell {i} sum to {total}")));
            }
        }
        Ok(Self { t, cells })
    }

    /// One atom per cell.
    pub fn dirac(t: f64, atoms: Vec<Atom>) -> Self {
        Self { t, cells: atoms.into_iter().map(|a| vec![(1.0, a)]).collect() }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, i: usize) -> &[(f64, Atom)] {
        &self.cells[i]
    }

    /// Cellwise <nu, f>.
    pub fn expectation<F: Fn(&Atom) -> f64>(&self, f: F) -> Vec<f64> {
        self.cells.iter().map(|c| c.iter().map(|(w, a)| w * f(a)).sum()).collect()
    }

    fn map_atoms<F: Fn(&mut Atom, usize)>(&self, f: F) -> Self {
        let mut out = self.clone();
        for (i, cell) in out.cells.iter_mut().enumerate() {
            for (_, a) in cell.iter_mut() {
                f(a, i);
            }
        }
        out
    }
}

/// Atoms of a single state: cell values with centred-difference gradients.
pub fn atoms_of(problem: &Problem, state: &FluidState) -> Result<Vec<Atom>, YoungMeasureError> {
    let grid = &problem.grid;
    let ext = Extended::build(grid, problem.eos.as_ref(), &problem.boundary, state)?;
    let g = cell_gradients(grid, &ext);
    Ok((0..grid.len())
        .map(|i| {
            let e = ext.interior(grid.coords(i));
            Atom {
                rho: ext.rho[e],
                u: ext.u[e],
                theta: ext.theta[e],
                b: ext.b[e],
                d_u: sym_grad(&g.u[i]),
                d_theta: g.theta[i],
                c_b: curl_from_gradient(&g.b[i]),
            }
        })
        .collect())
}

/// Deliberate corruptions used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeasureFault {
    /// Density drains linearly to half its value.
    MassLoss,
    /// Velocity gains a spatially uniform increment growing in time.
    MomentumKick,
    /// A field component with nonzero divergence is added.
    Monopole,
    /// Temperature drains so that the entropy falls.
    EntropyDrain,
    /// The velocity-gradient slot is reversed.
    CorruptStrain,
}

/// Time-indexed empirical measures on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSeries {
    pub grid: Grid,
    pub frames: Vec<EmpiricalYoungMeasure>,
}

impl MeasureSeries {
    pub fn new(grid: Grid, frames: Vec<EmpiricalYoungMeasure>) -> Result<Self, YoungMeasureError> {
        if frames.is_empty() {
            return Err(YoungMeasureError::Config("a measure series needs at least one frame".into()));
        }
        for f in &frames {
            if f.len() != grid.len() {
                return Err(YoungMeasureError::GridMismatch(format!(
                    "{} cells on a {}-cell grid",
                    f.len(),
                    grid.len()
                )));
            }
        }
        if frames.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(YoungMeasureError::Alignment("frame times must increase".into()));
        }
        Ok(Self { grid, frames })
    }

    /// Dirac measures of one trajectory.
    pub fn from_trajectory(problem: &Problem, traj: &Trajectory) -> Result<Self, YoungMeasureError> {
        Self::from_ensemble(problem, std::slice::from_ref(traj), &[1.0])
    }

    /// Weighted ensemble of time-aligned trajectories on the problem grid.
    pub fn from_ensemble(
        problem: &Problem,
        members: &[Trajectory],
        weights: &[f64],
    ) -> Result<Self, YoungMeasureError> {
        if members.is_empty() || members.len() != weights.len() {
            return Err(YoungMeasureError::Weight(format!("{} members with {} weights", members.len(), weights.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(YoungMeasureError::Weight("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(YoungMeasureError::Weight(format!("weights sum to {total}")));
        }
        let grid = &problem.grid;
        let frames = members[0].frames.len();
        for (m, traj) in members.iter().enumerate() {
            if traj.frames.len() != frames {
                return Err(YoungMeasureError::Alignment(format!(
                    "member {m} has {} frames, member 0 has {frames}",
                    traj.frames.len()
                )));
            }
            for (k, f) in traj.frames.iter().enumerate() {
                if f.len() != grid.len() {
                    return Err(YoungMeasureError::GridMismatch(format!(
                        "member {m} frame {k} has {} cells on a {}-cell grid",
                        f.len(),
                        grid.len()
                    )));
                }
                let t0 = members[0].frames[k].t;
                if (f.t - t0).abs() > 1e-12 * t0.abs().max(1.0) {
                    return Err(YoungMeasureError::Alignment(format!(
                        "member {m} frame {k} at t = {}, member 0 at {t0}",
                        f.t
                    )));
                }
            }
        }
        let mut out = Vec::with_capacity(frames);
        for k in 0..frames {
            let atoms = members.iter().map(|tr| atoms_of(problem, &tr.frames[k])).collect::<Result<Vec<_>, _>>()?;
            let cells =
                (0..grid.len()).map(|i| weights.iter().zip(&atoms).map(|(&w, a)| (w, a[i])).collect()).collect();
            out.push(EmpiricalYoungMeasure::new(members[0].frames[k].t, cells)?);
        }
        Self::new(grid.clone(), out)
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// A corrupted copy for negative controls.
    pub fn with_fault(&self, fault: MeasureFault) -> Self {
        let (t0, t1) = (self.frames[0].t, self.frames[self.frames.len() - 1].t);
        let span = (t1 - t0).max(f64::MIN_POSITIVE);
        let ext = self.grid.extent();
        let grid = &self.grid;
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let s = (f.t - t0) / span;
                match fault {
                    MeasureFault::MassLoss => f.map_atoms(|a, _| a.rho *= 1.0 - 0.5 * s),
                    MeasureFault::MomentumKick => f.map_atoms(|a, _| a.u[0] += 2.0 * s),
                    MeasureFault::Monopole => f.map_atoms(|a, i| a.b[0] += 0.5 * (grid.center(i)[0] / ext[0] - 0.5)),
                    MeasureFault::EntropyDrain => f.map_atoms(|a, _| a.theta *= 1.0 - 0.5 * s),
                    MeasureFault::CorruptStrain => f.map_atoms(|a, _| {
                        for row in a.d_u.iter_mut() {
                            for v in row.iter_mut() {
                                *v = -*v;
                            }
                        }
                    }),
                }
            })
            .collect();
        Self { grid: self.grid.clone(), frames }
    }
}
