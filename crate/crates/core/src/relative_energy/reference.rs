use crate::grid::{cell_gradients, Extended, FluidState, Grid, Problem, Trajectory};
use crate::tensor::{trace, Mat3, Vec3};

use super::{RefPoint, RelEnergyError};

const ZERO_M: Mat3 = [[0.0; 3]; 3];
const DIV_TOL: f64 = 1e-8;

/// Reference fields and their spatial derivatives at one instant, cell-centred.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFrame {
    pub t: f64,
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub u: Vec<Vec3>,
    pub h: Vec<Vec3>,
    /// grad_u[i][k][d] = d U_k / d x_d.
    pub grad_u: Vec<Mat3>,
    pub grad_theta: Vec<Vec3>,
    pub grad_h: Vec<Mat3>,
}

impl ReferenceFrame {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn point(&self, i: usize) -> RefPoint {
        RefPoint { r: self.r[i], theta: self.theta[i], u: self.u[i], h: self.h[i] }
    }

    fn validate(&self) -> Result<(), RelEnergyError> {
        if let Some(i) = (0..self.len()).find(|&i| !(self.r[i] > 0.0 && self.theta[i] > 0.0)) {
            return Err(RelEnergyError::Domain(format!(
                "reference at t = {} has r = {}, Theta = {} in cell {i}",
                self.t, self.r[i], self.theta[i]
            )));
        }
        let div = self.grad_h.iter().map(|g| trace(g).abs()).fold(0.0, f64::max);
        if div > DIV_TOL {
            return Err(RelEnergyError::Constraint(format!(
                "reference field has divergence {div:e} at t = {}",
                self.t
            )));
        }
        Ok(())
    }
}

/// A smooth comparison solution, either stationary or tabulated at the
/// output times of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSolution {
    Stationary(ReferenceFrame),
    Tabulated(Vec<ReferenceFrame>),
}

impl ReferenceSolution {
    /// Constant state (r, Theta, 0, H); all derivatives vanish.
    pub fn equilibrium(grid: &Grid, r: f64, theta: f64, h: Vec3) -> Result<Self, RelEnergyError> {
        let n = grid.len();
        let frame = ReferenceFrame {
            t: 0.0,
            r: vec![r; n],
            theta: vec![theta; n],
            u: vec![[0.0; 3]; n],
            h: vec![h; n],
            grad_u: vec![ZERO_M; n],
            grad_theta: vec![[0.0; 3]; n],
            grad_h: vec![ZERO_M; n],
        };
        frame.validate()?;
        Ok(Self::Stationary(frame))
    }

    /// Restrict a trajectory computed on a refinement of `coarse` by averaging
    /// fields and centred-difference gradients over the fine cells of each
    /// coarse cell.
    pub fn from_fine(coarse: &Grid, fine_problem: &Problem, fine: &Trajectory) -> Result<Self, RelEnergyError> {
        let fg = &fine_problem.grid;
        let (nc, nf) = (coarse.cells(), fg.cells());
        if coarse.dim() != fg.dim() || coarse.extent() != fg.extent() {
            return Err(RelEnergyError::GridMismatch("fine grid does not cover the coarse grid".into()));
        }
        let mut factor = [1usize; 3];
        for d in 0..coarse.dim() {
            if nf[d] % nc[d] != 0 {
                return Err(RelEnergyError::GridMismatch(format!(
                    "{} fine cells do not refine {} coarse cells along axis {d}",
                    nf[d], nc[d]
                )));
            }
            factor[d] = nf[d] / nc[d];
        }
        let frames =
            fine.frames.iter().map(|f| restrict(coarse, fine_problem, f, factor)).collect::<Result<Vec<_>, _>>()?;
        for f in &frames {
            f.validate()?;
        }
        Ok(Self::Tabulated(frames))
    }

    /// Frame k of a run whose k-th output time is t.
    pub fn frame(&self, k: usize, t: f64) -> Result<&ReferenceFrame, RelEnergyError> {
        match self {
            Self::Stationary(f) => Ok(f),
            Self::Tabulated(frames) => {
                let f = frames.get(k).ok_or_else(|| {
                    RelEnergyError::Alignment(format!("reference has {} frames, frame {k} requested", frames.len()))
                })?;
                if (f.t - t).abs() > 1e-9 * t.abs().max(1.0) {
                    return Err(RelEnergyError::Alignment(format!("frame {k}: reference t = {}, state t = {t}", f.t)));
                }
                Ok(f)
            }
        }
    }

    pub fn check_alignment(&self, times: &[f64]) -> Result<(), RelEnergyError> {
        if let Self::Tabulated(frames) = self {
            if frames.len() != times.len() {
                return Err(RelEnergyError::Alignment(format!(
                    "{} reference frames against {} states",
                    frames.len(),
                    times.len()
                )));
            }
        }
        for (k, &t) in times.iter().enumerate() {
            self.frame(k, t)?;
        }
        Ok(())
    }
}

fn restrict(
    coarse: &Grid,
    fp: &Problem,
    state: &FluidState,
    factor: [usize; 3],
) -> Result<ReferenceFrame, RelEnergyError> {
    let fg = &fp.grid;
    let ext = Extended::build(fg, fp.eos.as_ref(), &fp.boundary, state)?;
    let grads = cell_gradients(fg, &ext);
    let theta = state.temperatures(fg, fp.eos.as_ref())?;
    let n = coarse.len();
    let weight = 1.0 / (factor[0] * factor[1] * factor[2]) as f64;
    let mut out = ReferenceFrame {
        t: state.t,
        r: vec![0.0; n],
        theta: vec![0.0; n],
        u: vec![[0.0; 3]; n],
        h: vec![[0.0; 3]; n],
        grad_u: vec![ZERO_M; n],
        grad_theta: vec![[0.0; 3]; n],
        grad_h: vec![ZERO_M; n],
    };
    for j in 0..fg.len() {
        let c = fg.coords(j);
        let i = coarse.index([c[0] / factor[0], c[1] / factor[1], c[2] / factor[2]]);
        let u = state.velocity(j);
        out.r[i] += weight * state.rho[j];
        out.theta[i] += weight * theta[j];
        for k in 0..3 {
            out.u[i][k] += weight * u[k];
            out.h[i][k] += weight * state.b[j][k];
            out.grad_theta[i][k] += weight * grads.theta[j][k];
            for d in 0..3 {
                out.grad_u[i][k][d] += weight * grads.u[j][k][d];
                out.grad_h[i][k][d] += weight * grads.b[j][k][d];
            }
        }
    }
    Ok(out)
}
