//! Finite families of closed-form space-time test functions, one family per
//! weak identity, each checked against its boundary constraints when built.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::grid::{BoundaryData, Grid, MagneticBc, ThermalBc};
use crate::tensor::{cross, norm, trace, Mat3, Vec3};

use super::YoungMeasureError;

const CONSTRAINT_TOL: f64 = 1e-8;
const E: [Vec3; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// A one-dimensional factor in the normalised coordinate xi = x / L.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Factor {
    One,
    /// Polynomial with ascending coefficients.
    Poly(Vec<f64>),
    /// sin^2(k pi xi).
    SinSq(u32),
    /// ((xi - a)(b - xi))^2 normalised to peak 1 on (a, b), zero elsewhere.
    Bump {
        a: f64,
        b: f64,
    },
}

impl Factor {
    /// (f, f', f'') with respect to xi.
    fn eval(&self, xi: f64) -> [f64; 3] {
        match self {
            Factor::One => [1.0, 0.0, 0.0],
            Factor::Poly(c) => {
                let f = c.iter().rev().fold(0.0, |acc, &ck| acc * xi + ck);
                let (mut d1, mut d2) = (0.0, 0.0);
                for (k, &ck) in c.iter().enumerate().skip(1) {
                    d1 += k as f64 * ck * xi.powi(k as i32 - 1);
                }
                for (k, &ck) in c.iter().enumerate().skip(2) {
                    d2 += (k * (k - 1)) as f64 * ck * xi.powi(k as i32 - 2);
                }
                [f, d1, d2]
            }
            Factor::SinSq(k) => {
                let w = *k as f64 * std::f64::consts::PI;
                let (s, c) = (w * xi).sin_cos();
                [s * s, 2.0 * w * s * c, 2.0 * w * w * (c * c - s * s)]
            }
            Factor::Bump { a, b } => {
                if xi <= *a || xi >= *b {
                    return [0.0; 3];
                }
                let norm = ((b - a) / 2.0).powi(4);
                let (p, q) = (xi - a, b - xi);
                let g = p * q;
                let g1 = q - p;
                [g * g / norm, 2.0 * g * g1 / norm, (2.0 * g1 * g1 - 4.0 * g) / norm]
            }
        }
    }
}

/// Multiply two ascending-coefficient polynomials.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Values of a scalar test function and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEval {
    pub v: f64,
    pub dt: f64,
    pub grad: Vec3,
    pub grad_dt: Vec3,
    pub hess: Mat3,
}

/// (1 - lambda t / horizon) times a product of axis factors. The time factor
/// is linear so that the trapezoid rule integrates steady data exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarTest {
    pub id: String,
    pub lambda: f64,
    pub horizon: f64,
    pub factors: [Factor; 3],
    pub extent: [f64; 3],
}

impl ScalarTest {
    pub fn eval(&self, t: f64, x: Vec3) -> ScalarEval {
        let f: [[f64; 3]; 3] = std::array::from_fn(|d| {
            let l = self.extent[d];
            let [a, b, c] = self.factors[d].eval(x[d] / l);
            [a, b / l, c / (l * l)]
        });
        let rate = -self.lambda / self.horizon;
        let time = 1.0 + rate * t;
        let prod_except = |skip: &[usize]| -> f64 { (0..3).filter(|d| !skip.contains(d)).map(|d| f[d][0]).product() };
        let v = time * prod_except(&[]);
        let grad: Vec3 = std::array::from_fn(|d| time * f[d][1] * prod_except(&[d]));
        let mut hess = [[0.0; 3]; 3];
        for d in 0..3 {
            for e in 0..3 {
                hess[d][e] = if d == e {
                    time * f[d][2] * prod_except(&[d])
                } else {
                    time * f[d][1] * f[e][1] * prod_except(&[d, e])
                };
            }
        }
        let spatial = prod_except(&[]);
        let grad_dt = std::array::from_fn(|d| rate * f[d][1] * prod_except(&[d]));
        ScalarEval { v, dt: rate * spatial, grad, grad_dt, hess }
    }
}

/// Values of a vector test function and its derivatives at one point;
/// `grad[i][j] = d phi_i / d x_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorEval {
    pub v: Vec3,
    pub dt: Vec3,
    pub grad: Mat3,
    pub div: f64,
    pub curl: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum VectorTest {
    /// psi e_axis.
    Component { axis: usize, scalar: ScalarTest },
    /// curl(psi e_axis) = grad psi x e_axis, divergence-free.
    Curl { axis: usize, potential: ScalarTest },
}

impl VectorTest {
    pub fn id(&self) -> &str {
        &self.scalar().id
    }

    /// The scalar factor or potential.
    pub fn scalar(&self) -> &ScalarTest {
        match self {
            VectorTest::Component { scalar, .. } => scalar,
            VectorTest::Curl { potential, .. } => potential,
        }
    }

    pub fn eval(&self, t: f64, x: Vec3) -> VectorEval {
        match self {
            VectorTest::Component { axis, scalar } => {
                let s = scalar.eval(t, x);
                let mut v = [0.0; 3];
                v[*axis] = s.v;
                let mut dt = [0.0; 3];
                dt[*axis] = s.dt;
                let mut grad = [[0.0; 3]; 3];
                grad[*axis] = s.grad;
                VectorEval { v, dt, grad, div: s.grad[*axis], curl: cross(s.grad, E[*axis]) }
            }
            VectorTest::Curl { axis, potential } => {
                let s = potential.eval(t, x);
                let a = E[*axis];
                let mut grad = [[0.0; 3]; 3];
                for j in 0..3 {
                    let col = cross([s.hess[0][j], s.hess[1][j], s.hess[2][j]], a);
                    for i in 0..3 {
                        grad[i][j] = col[i];
                    }
                }
                let lap = trace(&s.hess);
                let mut curl = [s.hess[0][*axis], s.hess[1][*axis], s.hess[2][*axis]];
                curl[*axis] -= lap;
                VectorEval { v: cross(s.grad, a), dt: cross(s.grad_dt, a), grad, div: trace(&grad), curl }
            }
        }
    }
}

/// psi times a constant symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorTest {
    pub scalar: ScalarTest,
    pub basis: Mat3,
}

impl TensorTest {
    pub fn id(&self) -> &str {
        &self.scalar.id
    }

    /// (Z, div Z) with (div Z)_i = sum_j dZ_ij / dx_j.
    pub fn eval(&self, t: f64, x: Vec3) -> (Mat3, Vec3) {
        let s = self.scalar.eval(t, x);
        let z = self.basis.map(|row| row.map(|e| e * s.v));
        let div = std::array::from_fn(|i| (0..3).map(|j| self.basis[i][j] * s.grad[j]).sum());
        (z, div)
    }
}

/// Temperature background meeting the Dirichlet data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BaseTemperature {
    Constant(f64),
    /// Linear along `axis` from `lo` to `hi` over the extent `len`.
    Linear {
        axis: usize,
        lo: f64,
        hi: f64,
        len: f64,
    },
}

/// Admissible test temperature: base plus a multiple of a bump vanishing on
/// every face.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureTest {
    pub base: BaseTemperature,
    pub amplitude: f64,
    pub bump: ScalarTest,
}

impl TemperatureTest {
    /// (value, time derivative, gradient).
    pub fn eval(&self, t: f64, x: Vec3) -> (f64, f64, Vec3) {
        let (mut v, mut g) = match self.base {
            BaseTemperature::Constant(c) => (c, [0.0; 3]),
            BaseTemperature::Linear { axis, lo, hi, len } => {
                let mut g = [0.0; 3];
                g[axis] = (hi - lo) / len;
                (lo + (hi - lo) * x[axis] / len, g)
            }
        };
        let s = self.bump.eval(t, x);
        v += self.amplitude * s.v;
        for d in 0..3 {
            g[d] += self.amplitude * s.grad[d];
        }
        (v, self.amplitude * s.dt, g)
    }
}

/// Admissible test field: the constant boundary field plus a multiple of a
/// divergence-free field vanishing on every face.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldTest {
    pub base: Vec3,
    pub amplitude: f64,
    pub perturbation: VectorTest,
}

impl FieldTest {
    /// (value, time derivative, curl).
    pub fn eval(&self, t: f64, x: Vec3) -> (Vec3, Vec3, Vec3) {
        let p = self.perturbation.eval(t, x);
        let a = self.amplitude;
        (std::array::from_fn(|k| self.base[k] + a * p.v[k]), p.dt.map(|v| a * v), p.curl.map(|v| a * v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallisticPair {
    pub id: String,
    pub theta: TemperatureTest,
    pub field: FieldTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatTest {
    pub id: String,
    pub psi: VectorTest,
    pub theta: TemperatureTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurlTest {
    pub id: String,
    pub g: VectorTest,
    pub field: FieldTest,
}

/// One family per identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dictionary {
    pub continuity: Vec<ScalarTest>,
    pub momentum: Vec<VectorTest>,
    pub induction: Vec<VectorTest>,
    pub divergence: Vec<ScalarTest>,
    pub entropy: Vec<ScalarTest>,
    pub ballistic: Vec<BallisticPair>,
    pub strain: Vec<TensorTest>,
    pub heat: Vec<HeatTest>,
    pub magnetic: Vec<CurlTest>,
}

/// Time factors stay in [1/4, 1] up to the horizon.
const LAMBDAS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

fn random_poly(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![1.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
}

/// The temperature background for a grid and its Dirichlet data.
pub fn base_temperature(grid: &Grid, bd: &BoundaryData) -> Result<BaseTemperature, YoungMeasureError> {
    let dirichlet: Vec<(usize, usize)> =
        grid.boundary_faces().filter(|&(d, s)| grid.face(d, s).thermal == ThermalBc::Dirichlet).collect();
    let first = bd.theta_b[dirichlet[0].0][dirichlet[0].1];
    if dirichlet.iter().all(|&(d, s)| bd.theta_b[d][s] == first) {
        return Ok(BaseTemperature::Constant(first));
    }
    let axis = dirichlet[0].0;
    if dirichlet.len() == 2 && dirichlet.iter().all(|&(d, _)| d == axis) {
        let [lo, hi] = bd.theta_b[axis];
        return Ok(BaseTemperature::Linear { axis, lo, hi, len: grid.extent()[axis] });
    }
    Err(YoungMeasureError::Constraint(
        "no smooth temperature matches the Dirichlet data: faces on several axes carry different values".into(),
    ))
}

impl Dictionary {
    /// `size` members per identity valid on [0, horizon], coefficients drawn
    /// from `seed`.
    pub fn build(
        grid: &Grid,
        bd: &BoundaryData,
        size: usize,
        horizon: f64,
        seed: u64,
    ) -> Result<Self, YoungMeasureError> {
        if size == 0 {
            return Err(YoungMeasureError::Config("dictionary size must be positive".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(YoungMeasureError::Config(format!("horizon {horizon} must be positive")));
        }
        let dim = grid.dim();
        let ext = grid.extent();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scalar = |id: String, lambda: f64, f: &dyn Fn(usize) -> Factor| ScalarTest {
            id,
            lambda,
            horizon,
            factors: std::array::from_fn(|d| if d < dim { f(d) } else { Factor::One }),
            extent: ext,
        };
        let vanish = |q: Vec<f64>, lo: bool, hi: bool, power: i32| -> Factor {
            let mut p = q;
            for _ in 0..power {
                if lo {
                    p = poly_mul(&p, &[0.0, 1.0]);
                }
                if hi {
                    p = poly_mul(&p, &[1.0, -1.0]);
                }
            }
            Factor::Poly(p)
        };
        let base = base_temperature(grid, bd)?;
        let theta_min = match base {
            BaseTemperature::Constant(c) => c,
            BaseTemperature::Linear { lo, hi, .. } => lo.min(hi),
        };
        // Curl potentials along axes that give a nonzero field.
        let curl_axes: Vec<usize> = if dim == 1 { vec![1, 2] } else { vec![0, 1, 2] };

        let mut dict = Dictionary {
            continuity: vec![],
            momentum: vec![],
            induction: vec![],
            divergence: vec![],
            entropy: vec![],
            ballistic: vec![],
            strain: vec![],
            heat: vec![],
            magnetic: vec![],
        };
        for m in 0..size {
            let lambda = LAMBDAS[m % LAMBDAS.len()];
            let qs: Vec<Vec<f64>> = (0..3).map(|_| random_poly(&mut rng)).collect();
            let bumps: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(0.1..0.3), rng.gen_range(0.7..0.9))).collect();
            let modes: Vec<u32> = (0..3).map(|_| rng.gen_range(1..=3)).collect();

            dict.continuity.push(scalar(format!("continuity-{m}"), lambda, &|d| Factor::Poly(qs[d].clone())));
            dict.momentum.push(VectorTest::Component {
                axis: m % 3,
                scalar: scalar(format!("momentum-{m}"), lambda, &|d| vanish(qs[d].clone(), true, true, 1)),
            });
            dict.induction.push(VectorTest::Curl {
                axis: curl_axes[m % curl_axes.len()],
                potential: scalar(format!("induction-{m}"), lambda, &|d| vanish(qs[d].clone(), true, true, 2)),
            });
            dict.divergence
                .push(scalar(format!("divergence-{m}"), lambda, &|d| Factor::Bump { a: bumps[d].0, b: bumps[d].1 }));
            dict.entropy.push(scalar(format!("entropy-{m}"), lambda, &|d| Factor::SinSq(modes[d])));

            let theta_bump = scalar(format!("theta-bump-{m}"), lambda, &|d| Factor::SinSq(modes[d]));
            let field_pert = VectorTest::Curl {
                axis: curl_axes[(m + 1) % curl_axes.len()],
                potential: scalar(format!("field-{m}"), lambda, &|d| vanish(qs[d].clone(), true, true, 2)),
            };
            // The first pair is the plain background.
            let (alpha, beta) = if m == 0 {
                (0.0, 0.0)
            } else {
                (0.2 * theta_min * rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            };
            let theta = TemperatureTest { base: base.clone(), amplitude: alpha, bump: theta_bump };
            let field = FieldTest { base: bd.b_b, amplitude: beta, perturbation: field_pert };
            dict.ballistic.push(BallisticPair {
                id: format!("ballistic-{m}"),
                theta: theta.clone(),
                field: field.clone(),
            });

            let (i, j) = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)][m % 6];
            let mut basis = [[0.0; 3]; 3];
            basis[i][j] = 1.0;
            basis[j][i] = 1.0;
            dict.strain.push(TensorTest {
                scalar: scalar(format!("strain-{m}"), lambda, &|d| Factor::Poly(qs[d].clone())),
                basis,
            });

            let k = m % 3;
            let neumann = |d: usize, s: usize| grid.face(d, s).thermal == ThermalBc::Neumann;
            let psi = scalar(format!("heat-{m}"), lambda, &|d| {
                if d == k {
                    vanish(qs[d].clone(), neumann(d, 0), neumann(d, 1), 1)
                } else {
                    Factor::Poly(qs[d].clone())
                }
            });
            dict.heat.push(HeatTest {
                id: format!("heat-{m}"),
                psi: VectorTest::Component { axis: k, scalar: psi },
                theta,
            });

            let normal = |d: usize, s: usize| grid.face(d, s).magnetic == MagneticBc::Normal;
            let g = scalar(format!("curl-{m}"), lambda, &|d| {
                if d == k {
                    Factor::Poly(qs[d].clone())
                } else {
                    vanish(qs[d].clone(), normal(d, 0), normal(d, 1), 1)
                }
            });
            dict.magnetic.push(CurlTest {
                id: format!("curl-{m}"),
                g: VectorTest::Component { axis: k, scalar: g },
                field,
            });
        }
        dict.verify(grid, bd)?;
        Ok(dict)
    }

    /// Numerical check of every member's constraint.
    pub fn verify(&self, grid: &Grid, bd: &BoundaryData) -> Result<(), YoungMeasureError> {
        for t in &self.momentum {
            check_momentum_test(grid, t)?;
        }
        for t in &self.induction {
            check_induction_test(grid, t)?;
        }
        for t in &self.divergence {
            check_compact(grid, t)?;
        }
        for t in &self.entropy {
            check_entropy_test(grid, t)?;
        }
        for p in &self.ballistic {
            check_temperature(grid, bd, &p.theta)?;
            check_field(grid, bd, &p.field)?;
        }
        for h in &self.heat {
            check_heat_test(grid, &h.psi)?;
            check_temperature(grid, bd, &h.theta)?;
        }
        for c in &self.magnetic {
            check_curl_test(grid, &c.g)?;
            check_field(grid, bd, &c.field)?;
        }
        Ok(())
    }
}

/// Sample times as fractions of the horizon.
const SAMPLE_TIMES: [f64; 3] = [0.0, 0.5, 1.0];

fn sample_times(horizon: f64) -> [f64; 3] {
    SAMPLE_TIMES.map(|s| s * horizon)
}

/// Points on face (axis, side) on a small lattice over the other active axes.
fn face_points(grid: &Grid, axis: usize, side: usize) -> Vec<Vec3> {
    let ext = grid.extent();
    let ticks = [0.1, 0.3, 0.5, 0.7, 0.9];
    let others: Vec<usize> = (0..grid.dim()).filter(|&d| d != axis).collect();
    let count = ticks.len().pow(others.len() as u32);
    (0..count)
        .map(|mut m| {
            let mut x = [0.5 * ext[0], 0.5 * ext[1], 0.5 * ext[2]];
            x[axis] = side as f64 * ext[axis];
            for &d in &others {
                x[d] = ticks[m % ticks.len()] * ext[d];
                m /= ticks.len();
            }
            x
        })
        .collect()
}

/// Interior lattice points.
fn interior_points(grid: &Grid) -> Vec<Vec3> {
    let ext = grid.extent();
    let ticks = [0.05, 0.2, 0.37, 0.5, 0.66, 0.81, 0.95];
    let dim = grid.dim();
    let count = ticks.len().pow(dim as u32);
    (0..count)
        .map(|mut m| {
            let mut x = [0.5 * ext[0], 0.5 * ext[1], 0.5 * ext[2]];
            for d in 0..dim {
                x[d] = ticks[m % ticks.len()] * ext[d];
                m /= ticks.len();
            }
            x
        })
        .collect()
}

fn violation(what: &str, id: &str, value: f64, x: Vec3) -> YoungMeasureError {
    YoungMeasureError::Constraint(format!("{what} of test '{id}' is {value:e} at {x:?}"))
}

/// Vanishes on every face (no-slip boundary).
pub fn check_momentum_test(grid: &Grid, t: &VectorTest) -> Result<(), YoungMeasureError> {
    for (d, s) in grid.boundary_faces() {
        for x in face_points(grid, d, s) {
            for tt in sample_times(t.scalar().horizon) {
                let v = norm(t.eval(tt, x).v);
                if v > CONSTRAINT_TOL {
                    return Err(violation("boundary trace", t.id(), v, x));
                }
            }
        }
    }
    Ok(())
}

/// Divergence-free (finite differences), tangential trace zero on faces with
/// prescribed tangential field, normal trace zero on the others.
pub fn check_induction_test(grid: &Grid, t: &VectorTest) -> Result<(), YoungMeasureError> {
    let h = 1e-3 * grid.h_min();
    for x in interior_points(grid) {
        for tt in sample_times(t.scalar().horizon) {
            let mut div = 0.0;
            for d in 0..grid.dim() {
                let at = |o: f64| {
                    let mut y = x;
                    y[d] += o * h;
                    t.eval(tt, y).v[d]
                };
                div += (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h);
            }
            if div.abs() > CONSTRAINT_TOL.max(1e-6 * norm(t.eval(tt, x).grad[0])) {
                return Err(violation("divergence", t.id(), div, x));
            }
        }
    }
    for (d, s) in grid.boundary_faces() {
        for x in face_points(grid, d, s) {
            let v = t.eval(0.0, x).v;
            let bad = match grid.face(d, s).magnetic {
                MagneticBc::Tangential => (0..3).filter(|&k| k != d).map(|k| v[k].abs()).fold(0.0, f64::max),
                MagneticBc::Normal => v[d].abs(),
            };
            if bad > CONSTRAINT_TOL {
                return Err(violation("boundary trace", t.id(), bad, x));
            }
        }
    }
    Ok(())
}

/// Vanishes on a neighbourhood of every face.
pub fn check_compact(grid: &Grid, t: &ScalarTest) -> Result<(), YoungMeasureError> {
    let ext = grid.extent();
    for (d, s) in grid.boundary_faces() {
        for mut x in face_points(grid, d, s) {
            x[d] = if s == 0 { 0.05 * ext[d] } else { 0.95 * ext[d] };
            let v = t.eval(0.0, x).v.abs();
            if v > 0.0 {
                return Err(violation("value near the boundary", &t.id, v, x));
            }
        }
    }
    Ok(())
}

/// Nonnegative and zero on faces with prescribed temperature.
pub fn check_entropy_test(grid: &Grid, t: &ScalarTest) -> Result<(), YoungMeasureError> {
    for x in interior_points(grid) {
        for tt in sample_times(t.horizon) {
            let v = t.eval(tt, x).v;
            if v < 0.0 {
                return Err(violation("value", &t.id, v, x));
            }
        }
    }
    for (d, s) in grid.boundary_faces() {
        if grid.face(d, s).thermal != ThermalBc::Dirichlet {
            continue;
        }
        for x in face_points(grid, d, s) {
            let v = t.eval(0.0, x).v.abs();
            if v > CONSTRAINT_TOL {
                return Err(violation("boundary trace", &t.id, v, x));
            }
        }
    }
    Ok(())
}

/// Normal component zero on Neumann temperature faces.
pub fn check_heat_test(grid: &Grid, t: &VectorTest) -> Result<(), YoungMeasureError> {
    for (d, s) in grid.boundary_faces() {
        if grid.face(d, s).thermal != ThermalBc::Neumann {
            continue;
        }
        for x in face_points(grid, d, s) {
            let v = t.eval(0.0, x).v[d].abs();
            if v > CONSTRAINT_TOL {
                return Err(violation("normal trace", t.id(), v, x));
            }
        }
    }
    Ok(())
}

/// Tangential components zero on faces with prescribed normal field.
pub fn check_curl_test(grid: &Grid, t: &VectorTest) -> Result<(), YoungMeasureError> {
    for (d, s) in grid.boundary_faces() {
        if grid.face(d, s).magnetic != MagneticBc::Normal {
            continue;
        }
        for x in face_points(grid, d, s) {
            let v = t.eval(0.0, x).v;
            let bad = (0..3).filter(|&k| k != d).map(|k| v[k].abs()).fold(0.0, f64::max);
            if bad > CONSTRAINT_TOL {
                return Err(violation("tangential trace", t.id(), bad, x));
            }
        }
    }
    Ok(())
}

/// Positive, equal to the boundary temperature on Dirichlet faces.
pub fn check_temperature(grid: &Grid, bd: &BoundaryData, t: &TemperatureTest) -> Result<(), YoungMeasureError> {
    for x in interior_points(grid) {
        for tt in sample_times(t.bump.horizon) {
            let v = t.eval(tt, x).0;
            if !(v > 0.0) {
                return Err(violation("test temperature", &t.bump.id, v, x));
            }
        }
    }
    for (d, s) in grid.boundary_faces() {
        if grid.face(d, s).thermal != ThermalBc::Dirichlet {
            continue;
        }
        for x in face_points(grid, d, s) {
            let gap = (t.eval(0.0, x).0 - bd.theta_b[d][s]).abs();
            if gap > CONSTRAINT_TOL {
                return Err(violation("boundary temperature mismatch", &t.bump.id, gap, x));
            }
        }
    }
    Ok(())
}

/// Divergence-free with the prescribed boundary traces.
pub fn check_field(grid: &Grid, bd: &BoundaryData, f: &FieldTest) -> Result<(), YoungMeasureError> {
    check_induction_test(grid, &f.perturbation)?;
    for (d, s) in grid.boundary_faces() {
        for x in face_points(grid, d, s) {
            let (v, _, _) = f.eval(0.0, x);
            let bad = match grid.face(d, s).magnetic {
                MagneticBc::Tangential => {
                    (0..3).filter(|&k| k != d).map(|k| (v[k] - bd.b_b[k]).abs()).fold(0.0, f64::max)
                }
                MagneticBc::Normal => (v[d] - bd.b_b[d]).abs(),
            };
            if bad > CONSTRAINT_TOL {
                return Err(violation("field trace", f.perturbation.id(), bad, x));
            }
        }
    }
    Ok(())
}
