use rayon::prelude::*;

use super::{BoundaryData, FluidState, Grid, MagneticBc, SolverError, ThermalBc};
use crate::eos::{ThermoPoint, Thermodynamics};
use crate::tensor::{Mat3, Vec3, ZERO33};

pub(crate) const PAR_MIN: usize = 512;

/// Primitive fields on the grid padded by one ghost layer along every
/// active axis.
#[derive(Debug, Clone)]
pub struct Extended {
    pub dims: [usize; 3],
    pub ghost: [usize; 3],
    pub rho: Vec<f64>,
    pub u: Vec<Vec3>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub eps: Vec<f64>,
    pub b: Vec<Vec3>,
    /// Squared adiabatic sound speed.
    pub c2: Vec<f64>,
}

impl Extended {
    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Padded index of an interior cell.
    pub fn interior(&self, c: [usize; 3]) -> usize {
        self.index([c[0] + self.ghost[0], c[1] + self.ghost[1], c[2] + self.ghost[2]])
    }

    /// Fast magnetosonic speed.
    pub fn fast_speed(&self, i: usize) -> f64 {
        let b2 = self.b[i][0] * self.b[i][0] + self.b[i][1] * self.b[i][1] + self.b[i][2] * self.b[i][2];
        (self.c2[i] + b2 / self.rho[i]).sqrt()
    }

    /// Recover primitives and fill ghosts (walls reflect velocity, temperature
    /// and field ghosts follow the face tags).
    pub fn build<E: Thermodynamics + ?Sized>(
        grid: &Grid,
        eos: &E,
        bd: &BoundaryData,
        state: &FluidState,
    ) -> Result<Self, SolverError> {
        let n = grid.cells();
        let ghost = [0, 1, 2].map(|d| usize::from(d < grid.dim()));
        let dims = [0, 1, 2].map(|d| n[d] + 2 * ghost[d]);
        let total = dims[0] * dims[1] * dims[2];

        let cells: Vec<(f64, Vec3, f64, f64, f64, Vec3, f64)> = (0..grid.len())
            .into_par_iter()
            .with_min_len(PAR_MIN)
            .map(|i| {
                let rho = state.rho[i];
                let fail = |detail: String| SolverError::Positivity { cell: grid.coords(i), t: state.t, detail };
                if !(rho > 0.0) || !rho.is_finite() {
                    return Err(fail(format!("rho = {rho}")));
                }
                let u = state.velocity(i);
                let theta = eos.temperature(rho, state.eps[i] / rho).map_err(|e| fail(e.to_string()))?;
                let pt = ThermoPoint { rho, theta };
                let p = eos.pressure(pt)?;
                let c2 = eos.sound_speed_sq(pt)?;
                if !(c2 > 0.0) || !c2.is_finite() {
                    return Err(fail(format!("sound speed squared {c2}")));
                }
                Ok((rho, u, theta, p, state.eps[i], state.b[i], c2))
            })
            .collect::<Result<_, _>>()?;

        let mut ext = Self {
            dims,
            ghost,
            rho: vec![0.0; total],
            u: vec![[0.0; 3]; total],
            theta: vec![0.0; total],
            p: vec![0.0; total],
            eps: vec![0.0; total],
            b: vec![[0.0; 3]; total],
            c2: vec![0.0; total],
        };
        for (i, v) in cells.into_iter().enumerate() {
            let e = ext.interior(grid.coords(i));
            ext.rho[e] = v.0;
            ext.u[e] = v.1;
            ext.theta[e] = v.2;
            ext.p[e] = v.3;
            ext.eps[e] = v.4;
            ext.b[e] = v.5;
            ext.c2[e] = v.6;
        }
        // Axis by axis, sweeping the full padded range of the other axes so
        // that edge and corner ghosts are filled as well.
        for d in 0..grid.dim() {
            for side in 0..2 {
                let tags = grid.face(d, side);
                let (g, q) = if side == 0 { (0, 1) } else { (dims[d] - 1, dims[d] - 2) };
                let (a1, a2) = ((d + 1) % 3, (d + 2) % 3);
                for x1 in 0..dims[a1] {
                    for x2 in 0..dims[a2] {
                        let mut cg = [0; 3];
                        cg[d] = g;
                        cg[a1] = x1;
                        cg[a2] = x2;
                        let mut cq = cg;
                        cq[d] = q;
                        let (gi, qi) = (ext.index(cg), ext.index(cq));
                        ext.rho[gi] = ext.rho[qi];
                        ext.p[gi] = ext.p[qi];
                        ext.eps[gi] = ext.eps[qi];
                        ext.c2[gi] = ext.c2[qi];
                        ext.u[gi] = [-ext.u[qi][0], -ext.u[qi][1], -ext.u[qi][2]];
                        ext.theta[gi] = match tags.thermal {
                            ThermalBc::Dirichlet => 2.0 * bd.theta_b[d][side] - ext.theta[qi],
                            ThermalBc::Neumann => ext.theta[qi],
                        };
                        let bq = ext.b[qi];
                        let mut bg = bq;
                        for k in 0..3 {
                            if field_odd(tags.magnetic, d, k) {
                                bg[k] = 2.0 * bd.b_b[k] - bq[k];
                            }
                        }
                        ext.b[gi] = bg;
                    }
                }
            }
        }
        Ok(ext)
    }
}

/// Whether field component `k` is prescribed (odd reflection about the
/// boundary value) on a face normal to `axis`.
pub(crate) fn field_odd(tag: MagneticBc, axis: usize, k: usize) -> bool {
    match tag {
        MagneticBc::Tangential => k != axis,
        MagneticBc::Normal => k == axis,
    }
}

/// Cell-centered central-difference gradients of the interior cells;
/// `g[i][j] = d v_i / d x_j`.
#[derive(Debug, Clone)]
pub struct CellGradients {
    pub u: Vec<Mat3>,
    pub theta: Vec<Vec3>,
    pub b: Vec<Mat3>,
}

pub fn cell_gradients(grid: &Grid, ext: &Extended) -> CellGradients {
    let h = grid.spacing();
    let dim = grid.dim();
    let rows: Vec<(Mat3, Vec3, Mat3)> = (0..grid.len())
        .into_par_iter()
        .with_min_len(PAR_MIN)
        .map(|i| {
            let c = grid.coords(i);
            let mut gu = ZERO33;
            let mut gt = [0.0; 3];
            let mut gb = ZERO33;
            for d in 0..dim {
                let mut lo = [c[0] + ext.ghost[0], c[1] + ext.ghost[1], c[2] + ext.ghost[2]];
                let mut hi = lo;
                lo[d] -= 1;
                hi[d] += 1;
                let (l, r) = (ext.index(lo), ext.index(hi));
                let inv = 0.5 / h[d];
                for k in 0..3 {
                    gu[k][d] = (ext.u[r][k] - ext.u[l][k]) * inv;
                    gb[k][d] = (ext.b[r][k] - ext.b[l][k]) * inv;
                }
                gt[d] = (ext.theta[r] - ext.theta[l]) * inv;
            }
            (gu, gt, gb)
        })
        .collect();
    let mut out = CellGradients {
        u: Vec::with_capacity(rows.len()),
        theta: Vec::with_capacity(rows.len()),
        b: Vec::with_capacity(rows.len()),
    };
    for (a, b, c) in rows {
        out.u.push(a);
        out.theta.push(b);
        out.b.push(c);
    }
    out
}
