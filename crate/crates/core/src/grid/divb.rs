use super::{BoundaryData, FluidState, Grid, MagneticBc, SolverError};
use crate::numerics::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionReport {
    pub iterations: usize,
    pub residual: f64,
    pub before: f64,
    pub after: f64,
}

/// In-plane face fields implied by the vertex potential, averaged to cells.
pub(crate) fn sync_cell_field(grid: &Grid, state: &mut FluidState) {
    let Some(ct) = state.ct.as_ref() else { return };
    let [nx, ny, _] = grid.cells();
    let [hx, hy, _] = grid.spacing();
    let a = |i: usize, j: usize| ct.a[j * (nx + 1) + i];
    let bx = |i: usize, j: usize| (a(i, j + 1) - a(i, j)) / hy;
    let by = |i: usize, j: usize| -(a(i + 1, j) - a(i, j)) / hx;
    let mut fields = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            fields.push((0.5 * (bx(i, j) + bx(i + 1, j)), 0.5 * (by(i, j) + by(i, j + 1))));
        }
    }
    for (idx, (x, y)) in fields.into_iter().enumerate() {
        state.b[idx][0] = x;
        state.b[idx][1] = y;
    }
}

/// Face-based divergence of the potential-carried field, per cell.
fn staggered_divergence(grid: &Grid, a: &[f64]) -> Vec<f64> {
    let [nx, ny, _] = grid.cells();
    let [hx, hy, _] = grid.spacing();
    let at = |i: usize, j: usize| a[j * (nx + 1) + i];
    let bx = |i: usize, j: usize| (at(i, j + 1) - at(i, j)) / hy;
    let by = |i: usize, j: usize| -(at(i + 1, j) - at(i, j)) / hx;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push((bx(i + 1, j) - bx(i, j)) / hx + (by(i, j + 1) - by(i, j)) / hy);
        }
    }
    out
}

/// Value of component `d` of a cell field on face `side` of cell `c`, with
/// boundary faces taking `boundary(tag, cell value)`.
fn face_value<F, B>(grid: &Grid, c: [usize; 3], d: usize, side: usize, cell: &F, boundary: &B) -> f64
where
    F: Fn(usize) -> f64,
    B: Fn(MagneticBc, f64) -> f64,
{
    let n = grid.cells();
    let here = cell(grid.index(c));
    let at_wall = if side == 0 { c[d] == 0 } else { c[d] + 1 == n[d] };
    if at_wall {
        return boundary(grid.face(d, side).magnetic, here);
    }
    let mut nb = c;
    if side == 0 {
        nb[d] -= 1;
    } else {
        nb[d] += 1;
    }
    0.5 * (here + cell(grid.index(nb)))
}

fn apply_div<F, B>(grid: &Grid, comp: F, boundary: B) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64,
    B: Fn(usize, MagneticBc, f64) -> f64,
{
    let h = grid.spacing();
    (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            let mut s = 0.0;
            for d in 0..grid.dim() {
                let cell = |j: usize| comp(j, d);
                let bnd = |t: MagneticBc, v: f64| boundary(d, t, v);
                s += (face_value(grid, c, d, 1, &cell, &bnd) - face_value(grid, c, d, 0, &cell, &bnd)) / h[d];
            }
            s
        })
        .collect()
}

/// Discrete divergence per cell: face-based under constrained transport,
/// otherwise central with the boundary normal field on prescribed faces.
pub fn divergence(grid: &Grid, bd: &BoundaryData, state: &FluidState) -> Vec<f64> {
    if let Some(ct) = &state.ct {
        return staggered_divergence(grid, &ct.a);
    }
    apply_div(
        grid,
        |i, d| state.b[i][d],
        |d, tag, v| match tag {
            MagneticBc::Normal => bd.b_b[d],
            MagneticBc::Tangential => v,
        },
    )
}

pub fn max_divergence(grid: &Grid, bd: &BoundaryData, state: &FluidState) -> f64 {
    divergence(grid, bd, state).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Gradient of a cell scalar with the parity matching the divergence:
/// even across faces with a prescribed normal field, odd otherwise.
fn gradient(grid: &Grid, phi: &[f64]) -> Vec<[f64; 3]> {
    let h = grid.spacing();
    (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            let mut g = [0.0; 3];
            for (d, gd) in g.iter_mut().enumerate().take(grid.dim()) {
                let cell = |j: usize| phi[j];
                let bnd = |t: MagneticBc, v: f64| match t {
                    MagneticBc::Normal => v,
                    MagneticBc::Tangential => 0.0,
                };
                *gd = (face_value(grid, c, d, 1, &cell, &bnd) - face_value(grid, c, d, 0, &cell, &bnd)) / h[d];
            }
            g
        })
        .collect()
}

/// Divergence with homogeneous normal data; the negative adjoint of `gradient`.
fn divergence0(grid: &Grid, v: &[[f64; 3]]) -> Vec<f64> {
    apply_div(
        grid,
        |i, d| v[i][d],
        |_, tag, val| match tag {
            MagneticBc::Normal => 0.0,
            MagneticBc::Tangential => val,
        },
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prod)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Remove the discrete divergence by B <- B - grad(phi), with
/// -div0 grad phi = -div B solved by conjugate gradients. The operator is
/// symmetric positive semidefinite and the right-hand side lies in its range.
pub fn project_div_b(
    grid: &Grid,
    bd: &BoundaryData,
    state: &mut FluidState,
    tol: f64,
) -> Result<ProjectionReport, SolverError> {
    const MAX_ITER: usize = 10_000;
    let rhs: Vec<f64> = divergence(grid, bd, state).iter().map(|v| -v).collect();
    let before = max_abs(&rhs);
    let target = 0.01 * tol;
    let apply = |p: &[f64]| -> Vec<f64> { divergence0(grid, &gradient(grid, p)).iter().map(|v| -v).collect() };

    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while max_abs(&r) > target {
        if iterations == MAX_ITER {
            return Err(SolverError::Solve { iterations, residual: max_abs(&r) });
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolverError::Solve { iterations, residual: max_abs(&r) });
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        iterations += 1;
    }
    let g = gradient(grid, &x);
    for (b, gi) in state.b.iter_mut().zip(&g) {
        for d in 0..grid.dim() {
            b[d] -= gi[d];
        }
    }
    let after = max_divergence(grid, bd, state);
    Ok(ProjectionReport { iterations, residual: max_abs(&r), before, after })
}
