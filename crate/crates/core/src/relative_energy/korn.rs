use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constitutive::{sym_grad, traceless};
use crate::grid::Grid;
use crate::tensor::{frob2, norm2, sub, Mat3, Vec3};

use super::RelEnergyError;

const TRACE_TOL: f64 = 1e-10;

/// A vector field sampled at the cell vertices of a grid (x fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    dim: usize,
    cells: [usize; 3],
    spacing: [f64; 3],
    pub values: Vec<Vec3>,
}

impl NodalField {
    fn shape(grid: &Grid) -> [usize; 3] {
        let n = grid.cells();
        let mut s = [1; 3];
        for d in 0..grid.dim() {
            s[d] = n[d] + 1;
        }
        s
    }

    fn node_index(&self, c: [usize; 3]) -> usize {
        let s = self.nodes();
        c[0] + s[0] * (c[1] + s[1] * c[2])
    }

    pub fn nodes(&self) -> [usize; 3] {
        let mut s = [1; 3];
        for d in 0..self.dim {
            s[d] = self.cells[d] + 1;
        }
        s
    }

    /// Sample `f` at the vertices; inactive coordinates are 0.
    pub fn from_fn<F: Fn([f64; 3]) -> Vec3>(grid: &Grid, f: F) -> Self {
        let s = Self::shape(grid);
        let h = grid.spacing();
        let mut values = Vec::with_capacity(s[0] * s[1] * s[2]);
        for k in 0..s[2] {
            for j in 0..s[1] {
                for i in 0..s[0] {
                    let mut x = [0.0; 3];
                    for (d, c) in [i, j, k].into_iter().enumerate().take(grid.dim()) {
                        x[d] = c as f64 * h[d];
                    }
                    values.push(f(x));
                }
            }
        }
        Self { dim: grid.dim(), cells: grid.cells(), spacing: h, values }
    }

    /// Vertex values from cell averages: boundary vertices are set to zero
    /// (no-slip), interior vertices average the adjacent cells.
    pub fn from_cells(grid: &Grid, cells: &[Vec3]) -> Result<Self, RelEnergyError> {
        if cells.len() != grid.len() {
            return Err(RelEnergyError::GridMismatch(format!("{} values on {} cells", cells.len(), grid.len())));
        }
        let mut out = Self::from_fn(grid, |_| [0.0; 3]);
        let s = out.nodes();
        let dim = grid.dim();
        for k in 0..s[2] {
            for j in 0..s[1] {
                for i in 0..s[0] {
                    let c = [i, j, k];
                    if (0..dim).any(|d| c[d] == 0 || c[d] == s[d] - 1) {
                        continue;
                    }
                    let mut acc = [0.0; 3];
                    let corners = 1usize << dim;
                    for m in 0..corners {
                        let mut cc = c;
                        for (d, v) in cc.iter_mut().enumerate().take(dim) {
                            *v -= (m >> d) & 1;
                        }
                        let v = cells[grid.index(cc)];
                        for q in 0..3 {
                            acc[q] += v[q] / corners as f64;
                        }
                    }
                    let idx = out.node_index(c);
                    out.values[idx] = acc;
                }
            }
        }
        Ok(out)
    }

    fn compatible(&self, other: &Self) -> bool {
        self.dim == other.dim && self.cells == other.cells && self.spacing == other.spacing
    }

    fn on_boundary(&self, c: [usize; 3]) -> bool {
        let s = self.nodes();
        (0..self.dim).any(|d| c[d] == 0 || c[d] == s[d] - 1)
    }

    fn coords(&self, idx: usize) -> [usize; 3] {
        let s = self.nodes();
        [idx % s[0], (idx / s[0]) % s[1], idx / (s[0] * s[1])]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KpRatio {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Set when the two fields coincide (ratio 0 by convention).
    pub identical: bool,
}

/// int |u - v|^2 / int |T[D(u)] - T[D(v)]|^2 for fields vanishing on the
/// boundary. The numerator uses the vertex trapezoid rule, the denominator
/// cell gradients averaged over the parallel cell edges.
pub fn korn_poincare_ratio(u: &NodalField, v: &NodalField) -> Result<KpRatio, RelEnergyError> {
    if !u.compatible(v) || u.values.len() != v.values.len() {
        return Err(RelEnergyError::GridMismatch("fields live on different grids".into()));
    }
    let w: Vec<Vec3> = u.values.iter().zip(&v.values).map(|(a, b)| sub(*a, *b)).collect();
    let trace = w
        .iter()
        .enumerate()
        .filter(|(i, _)| u.on_boundary(u.coords(*i)))
        .map(|(_, x)| norm2(*x).sqrt())
        .fold(0.0, f64::max);
    if trace >= TRACE_TOL {
        return Err(RelEnergyError::Constraint(format!("difference has boundary trace {trace:e}")));
    }
    let dim = u.dim;
    let s = u.nodes();
    let vol: f64 = (0..dim).map(|d| u.spacing[d]).product();

    let mut num = 0.0;
    for (i, x) in w.iter().enumerate() {
        let c = u.coords(i);
        let weight: f64 = (0..dim).map(|d| if c[d] == 0 || c[d] == s[d] - 1 { 0.5 } else { 1.0 }).product();
        num += weight * norm2(*x);
    }
    num *= vol;

    let mut den = 0.0;
    let n = u.cells;
    let (ny, nz) = (if dim > 1 { n[1] } else { 1 }, if dim > 2 { n[2] } else { 1 });
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..n[0] {
                let base = [i, j, k];
                let mut g: Mat3 = [[0.0; 3]; 3];
                let edges = 1usize << (dim - 1);
                for d in 0..dim {
                    let others: Vec<usize> = (0..dim).filter(|&e| e != d).collect();
                    for m in 0..edges {
                        let mut lo = base;
                        for (bit, &e) in others.iter().enumerate() {
                            lo[e] += (m >> bit) & 1;
                        }
                        let mut hi = lo;
                        hi[d] += 1;
                        let (a, b) = (w[u.node_index(lo)], w[u.node_index(hi)]);
                        for q in 0..3 {
                            g[q][d] += (b[q] - a[q]) / u.spacing[d] / edges as f64;
                        }
                    }
                }
                den += frob2(&traceless(&sym_grad(&g)));
            }
        }
    }
    den *= vol;

    if num == 0.0 && den == 0.0 {
        return Ok(KpRatio { ratio: 0.0, numerator: 0.0, denominator: 0.0, identical: true });
    }
    if den <= 1e-14 {
        return Err(RelEnergyError::Degenerate(format!(
            "numerator {num:e} over vanishing denominator {den:e}: Korn-Poincare violation candidate"
        )));
    }
    Ok(KpRatio { ratio: num / den, numerator: num, denominator: den, identical: false })
}

const MODES: usize = 3;

/// Random smooth field vanishing on the boundary: a sum of sine products with
/// modes 1..=3 per active axis and uniform amplitudes in [-1, 1].
pub fn random_zero_trace_field(grid: &Grid, rng: &mut ChaCha8Rng) -> NodalField {
    let dim = grid.dim();
    let len = grid.extent();
    let count = MODES.pow(dim as u32);
    let amps: Vec<Vec3> = (0..count).map(|_| [0; 3].map(|_: i32| rng.gen_range(-1.0..=1.0))).collect();
    NodalField::from_fn(grid, |x| {
        let mut out = [0.0; 3];
        for (m, a) in amps.iter().enumerate() {
            let mut phi = 1.0;
            let mut rest = m;
            for d in 0..dim {
                let k = (rest % MODES + 1) as f64;
                rest /= MODES;
                phi *= (k * std::f64::consts::PI * x[d] / len[d]).sin();
            }
            for q in 0..3 {
                out[q] += a[q] * phi;
            }
        }
        out
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpSweep {
    pub cells: usize,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// Ratios of `count` random fields against zero; the same seed yields the
/// same continuous fields at every resolution.
pub fn kp_sweep(grid: &Grid, count: usize, seed: u64) -> Result<KpSweep, RelEnergyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = NodalField::from_fn(grid, |_| [0.0; 3]);
    let mut ratios = Vec::with_capacity(count);
    for _ in 0..count {
        let mut f = random_zero_trace_field(grid, &mut rng);
        // sin(k pi) is only zero up to rounding.
        for i in 0..f.values.len() {
            if f.on_boundary(f.coords(i)) {
                f.values[i] = [0.0; 3];
            }
        }
        ratios.push(korn_poincare_ratio(&f, &zero)?.ratio);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(KpSweep { cells: grid.cells()[0], ratios, max_ratio })
}
