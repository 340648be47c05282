use rayon::prelude::*;
use serde::Serialize;

use crate::constitutive::{dissipation_terms, stress_from, TensorPoint};
use crate::eos::ThermoPoint;
use crate::grid::{BoundaryData, Grid, Problem};
use crate::numerics::{pairwise_sum_by, GAUSS5_NODES, GAUSS5_WEIGHTS};
use crate::tensor::{cross, ddot, dot, frob2, norm, norm2, outer, sub, Mat3, Vec3};

use super::dictionary::{
    check_compact, check_curl_test, check_entropy_test, check_field, check_heat_test, check_induction_test,
    check_momentum_test, check_temperature, BallisticPair, CurlTest, Dictionary, HeatTest, ScalarTest, TensorTest,
    VectorTest,
};
use super::{MeasureSeries, YoungMeasureError};

const PAR_MIN: usize = 512;
const TOL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditConfig {
    /// Tolerance constant: residuals may reach c_audit (h + dt) times the
    /// size of the identity's terms.
    pub c_audit: f64,
    /// Constant relating concentration defects to the dissipation defect.
    pub c_defect: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { c_audit: 10.0, c_defect: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub id: String,
    /// Signed residual at the worst output time.
    pub residual: f64,
    pub tolerance: f64,
    /// Defect allowance at the worst output time (momentum only).
    pub budget: f64,
    /// Residual over allowance; at most 1 when the test passes.
    pub ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    pub worst_residual: f64,
    pub worst_test: String,
    pub tolerance: f64,
    pub passed: bool,
    pub tests: Vec<TestOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectRow {
    pub t: f64,
    /// Largest measured dissipation defect over the ballistic pairs.
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmvAudit {
    pub h: f64,
    pub dt: f64,
    pub c_audit: f64,
    pub c_defect: f64,
    pub identities: Vec<IdentityReport>,
    pub defects: Vec<DefectRow>,
    /// Every momentum allowance equals c_defect sup|grad phi| times the
    /// integrated measured defect.
    pub budget_consistent: bool,
    pub passed: bool,
}

impl DmvAudit {
    pub fn identity(&self, name: &str) -> Option<&IdentityReport> {
        self.identities.iter().find(|r| r.identity == name)
    }
}

/// Cellwise expectations of everything the identities need.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    rho: f64,
    mom: Vec3,
    flux_m: Mat3,
    ptot: f64,
    stress: Mat3,
    b: Vec3,
    emf: Vec3,
    rho_s: f64,
    s_flux: Vec3,
    sigma: f64,
    energy: f64,
    u: Vec3,
    d_u: Mat3,
    theta: f64,
    d_theta: Vec3,
    c_b: Vec3,
}

fn acc(a: &mut f64, w: f64, v: f64) {
    *a += w * v;
}

fn acc3(a: &mut Vec3, w: f64, v: Vec3) {
    for k in 0..3 {
        a[k] += w * v[k];
    }
}

fn acc33(a: &mut Mat3, w: f64, v: &Mat3) {
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] += w * v[i][j];
        }
    }
}

fn moments(problem: &Problem, series: &MeasureSeries) -> Result<Vec<Vec<Moments>>, YoungMeasureError> {
    let eos = problem.eos.as_ref();
    series
        .frames
        .iter()
        .map(|f| {
            (0..f.len())
                .into_par_iter()
                .with_min_len(PAR_MIN)
                .map(|i| {
                    let mut m = Moments::default();
                    for (w, a) in f.cell(i) {
                        let w = *w;
                        let pt = ThermoPoint::new(a.rho, a.theta).map_err(|_| {
                            YoungMeasureError::Domain(format!(
                                "atom with rho = {}, theta = {} in cell {i} at t = {}",
                                a.rho, a.theta, f.t
                            ))
                        })?;
                        let p = eos.pressure(pt)?;
                        let e = eos.internal_energy(pt)?;
                        let s = eos.entropy(pt)?;
                        let c = problem.transport.coefficients(pt)?;
                        let tp = TensorPoint { d: a.d_u, grad_theta: a.d_theta, curl_b: a.c_b };
                        let (v, h, r) = dissipation_terms(&c, a.theta, &tp);
                        let mom = a.u.map(|x| a.rho * x);
                        let b2 = norm2(a.b);
                        let mut fm = outer(mom, a.u);
                        let bb = outer(a.b, a.b);
                        for k in 0..3 {
                            for l in 0..3 {
                                fm[k][l] -= bb[k][l];
                            }
                        }
                        acc(&mut m.rho, w, a.rho);
                        acc3(&mut m.mom, w, mom);
                        acc33(&mut m.flux_m, w, &fm);
                        acc(&mut m.ptot, w, p + 0.5 * b2);
                        acc33(&mut m.stress, w, &stress_from(&c, &a.d_u));
                        acc3(&mut m.b, w, a.b);
                        let emf = cross(a.b, a.u);
                        acc3(&mut m.emf, w, std::array::from_fn(|k| emf[k] + c.zeta * a.c_b[k]));
                        acc(&mut m.rho_s, w, a.rho * s);
                        acc3(
                            &mut m.s_flux,
                            w,
                            std::array::from_fn(|k| a.rho * s * a.u[k] - c.kappa * a.d_theta[k] / a.theta),
                        );
                        acc(&mut m.sigma, w, (v + h + r) / a.theta);
                        acc(&mut m.energy, w, 0.5 * a.rho * norm2(a.u) + a.rho * e + 0.5 * b2);
                        acc3(&mut m.u, w, a.u);
                        acc33(&mut m.d_u, w, &a.d_u);
                        acc(&mut m.theta, w, a.theta);
                        acc3(&mut m.d_theta, w, a.d_theta);
                        acc3(&mut m.c_b, w, a.c_b);
                    }
                    Ok(m)
                })
                .collect::<Result<Vec<_>, YoungMeasureError>>()
        })
        .collect()
}

/// Gauss points and weights of the reference cell, offsets in units of h.
fn cell_rule(dim: usize) -> Vec<([f64; 3], f64)> {
    let count = GAUSS5_NODES.len().pow(dim as u32);
    (0..count)
        .map(|mut m| {
            let (mut off, mut w) = ([0.0; 3], 1.0);
            for o in off.iter_mut().take(dim) {
                let q = m % GAUSS5_NODES.len();
                m /= GAUSS5_NODES.len();
                *o = 0.5 * GAUSS5_NODES[q];
                w *= 0.5 * GAUSS5_WEIGHTS[q];
            }
            (off, w)
        })
        .collect()
}

/// Integrals of N quantities pairing cellwise moments with test data; the
/// test data are averaged over each cell with the Gauss rule (or sampled at
/// the centre when `rule` is empty), so that derivatives of test functions
/// integrate exactly to their boundary values.
fn integrate<const N: usize, F>(grid: &Grid, rule: &[([f64; 3], f64)], cells: &[Moments], f: F) -> [f64; N]
where
    F: Fn(Vec3, &Moments) -> [f64; N] + Sync,
{
    let h = grid.spacing();
    let vals: Vec<[f64; N]> = (0..cells.len())
        .into_par_iter()
        .with_min_len(PAR_MIN)
        .map(|i| {
            let c = grid.center(i);
            if rule.is_empty() {
                return f(c, &cells[i]);
            }
            let mut out = [0.0; N];
            for (off, w) in rule {
                let v = f(std::array::from_fn(|d| c[d] + off[d] * h[d]), &cells[i]);
                for q in 0..N {
                    out[q] += w * v[q];
                }
            }
            out
        })
        .collect();
    let vol = grid.cell_volume();
    std::array::from_fn(|q| vol * pairwise_sum_by(&vals, |v| v[q]))
}

/// Cumulative trapezoid integral, starting at 0.
fn cumulative(times: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for k in 1..v.len() {
        out[k] = out[k - 1] + 0.5 * (times[k] - times[k - 1]) * (v[k] + v[k - 1]);
    }
    out
}

fn mat_norm(m: &Mat3) -> f64 {
    frob2(m).sqrt()
}

struct Ctx<'a> {
    grid: &'a Grid,
    rule: Vec<([f64; 3], f64)>,
    times: Vec<f64>,
    m: Vec<Vec<Moments>>,
    scale: f64,
}

impl Ctx<'_> {
    fn tol(&self, magnitude: f64) -> f64 {
        self.scale * magnitude + TOL_FLOOR
    }

    /// Per-frame integrals of N quantities.
    fn series<const N: usize, F>(&self, f: F) -> Vec<[f64; N]>
    where
        F: Fn(f64, Vec3, &Moments) -> [f64; N] + Sync,
    {
        self.times
            .iter()
            .zip(&self.m)
            .map(|(&t, cells)| integrate(self.grid, &self.rule, cells, |x, m| f(t, x, m)))
            .collect()
    }

    /// As `series`, sampling the test data at cell centres.
    fn centred<const N: usize, F>(&self, f: F) -> Vec<[f64; N]>
    where
        F: Fn(f64, Vec3, &Moments) -> [f64; N] + Sync,
    {
        self.times.iter().zip(&self.m).map(|(&t, cells)| integrate(self.grid, &[], cells, |x, m| f(t, x, m))).collect()
    }

    fn column<const N: usize>(&self, rows: &[[f64; N]], q: usize) -> Vec<f64> {
        cumulative(&self.times, &rows.iter().map(|r| r[q]).collect::<Vec<_>>())
    }

    /// Two-sided outcome from residual, magnitude and allowance series.
    fn two_sided(&self, id: &str, res: &[f64], mag: &[f64], budget: &[f64]) -> TestOutcome {
        let mut worst =
            TestOutcome { id: id.into(), residual: 0.0, tolerance: TOL_FLOOR, budget: 0.0, ratio: 0.0, passed: true };
        for k in 0..res.len() {
            let tol = self.tol(mag[k]);
            let ratio = (res[k].abs() - budget[k]).max(0.0) / tol;
            if !(ratio <= worst.ratio) {
                worst = TestOutcome {
                    id: id.into(),
                    residual: res[k],
                    tolerance: tol,
                    budget: budget[k],
                    ratio,
                    passed: true,
                };
            }
        }
        worst.passed = worst.ratio <= 1.0;
        worst
    }

    /// One-sided outcome: the margin may not fall below minus the tolerance.
    fn one_sided(&self, id: &str, margin: &[f64], mag: &[f64]) -> TestOutcome {
        let mut worst =
            TestOutcome { id: id.into(), residual: 0.0, tolerance: TOL_FLOOR, budget: 0.0, ratio: 0.0, passed: true };
        for k in 0..margin.len() {
            let tol = self.tol(mag[k]);
            let ratio = (-margin[k]).max(0.0) / tol;
            if !(ratio <= worst.ratio) {
                worst = TestOutcome {
                    id: id.into(),
                    residual: margin[k],
                    tolerance: tol,
                    budget: 0.0,
                    ratio,
                    passed: true,
                };
            }
        }
        worst.passed = worst.ratio <= 1.0;
        worst
    }
}

fn report(identity: &str, tests: Vec<TestOutcome>) -> IdentityReport {
    let worst = tests
        .iter()
        .fold(None::<&TestOutcome>, |w, t| match w {
            Some(w) if w.ratio >= t.ratio || t.ratio.is_nan() && !w.ratio.is_nan() => Some(w),
            _ => Some(t),
        })
        .cloned();
    let worst = worst.unwrap_or(TestOutcome {
        id: String::new(),
        residual: 0.0,
        tolerance: TOL_FLOOR,
        budget: 0.0,
        ratio: 0.0,
        passed: true,
    });
    IdentityReport {
        identity: identity.into(),
        worst_residual: worst.residual,
        worst_test: worst.id,
        tolerance: worst.tolerance,
        passed: tests.iter().all(|t| t.passed),
        tests,
    }
}

fn test_weight(v: f64, dt: f64, grad: f64) -> f64 {
    v.abs() + dt.abs() + grad
}

fn continuity(ctx: &Ctx, t: &ScalarTest) -> TestOutcome {
    let rows = ctx.series(|tt, x, m| {
        let e = t.eval(tt, x);
        let w = test_weight(e.v, e.dt, norm(e.grad));
        [m.rho * e.v, m.rho * e.dt + dot(m.mom, e.grad), (m.rho.abs() + norm(m.mom)) * w]
    });
    let (flux, mag) = (ctx.column(&rows, 1), ctx.column(&rows, 2));
    let res: Vec<f64> = (0..rows.len()).map(|k| rows[k][0] - rows[0][0] - flux[k]).collect();
    ctx.two_sided(&t.id, &res, &mag, &vec![0.0; res.len()])
}

/// Returns the outcome and whether the allowance was assembled consistently.
fn momentum(ctx: &Ctx, t: &VectorTest, defect_integral: &[f64], c_defect: f64) -> (TestOutcome, bool) {
    let rows = ctx.series(|tt, x, m| {
        let e = t.eval(tt, x);
        let w = test_weight(norm(e.v), norm(e.dt), mat_norm(&e.grad));
        let j = dot(m.mom, e.dt) - ddot(&m.stress, &e.grad) + ddot(&m.flux_m, &e.grad) + m.ptot * e.div;
        let size = norm(m.mom) + mat_norm(&m.stress) + mat_norm(&m.flux_m) + m.ptot.abs();
        [dot(m.mom, e.v), j, size * w]
    });
    let grad_sup = ctx
        .times
        .iter()
        .map(|&tt| (0..ctx.grid.len()).map(|i| mat_norm(&t.eval(tt, ctx.grid.center(i)).grad)).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let (flux, mag) = (ctx.column(&rows, 1), ctx.column(&rows, 2));
    let res: Vec<f64> = (0..rows.len()).map(|k| rows[k][0] - rows[0][0] - flux[k]).collect();
    let budget: Vec<f64> = defect_integral.iter().map(|d| c_defect * grad_sup * d).collect();
    let out = ctx.two_sided(t.id(), &res, &mag, &budget);
    let k = res.len() - 1;
    let consistent = budget[k] == c_defect * grad_sup * defect_integral[k] && budget.iter().all(|b| *b >= 0.0);
    (out, consistent)
}

fn induction(ctx: &Ctx, t: &VectorTest) -> TestOutcome {
    let rows = ctx.series(|tt, x, m| {
        let e = t.eval(tt, x);
        let w = test_weight(norm(e.v), norm(e.dt), norm(e.curl));
        [dot(m.b, e.v), dot(m.b, e.dt) - dot(m.emf, e.curl), (norm(m.b) + norm(m.emf)) * w]
    });
    let (flux, mag) = (ctx.column(&rows, 1), ctx.column(&rows, 2));
    let res: Vec<f64> = (0..rows.len()).map(|k| rows[k][0] - rows[0][0] - flux[k]).collect();
    ctx.two_sided(t.id(), &res, &mag, &vec![0.0; res.len()])
}

/// int_0^tau int <B> . grad chi with the centred-difference gradient of chi,
/// so that it equals minus the pairing of chi with the discrete divergence.
fn divergence(ctx: &Ctx, t: &ScalarTest) -> TestOutcome {
    let h = ctx.grid.spacing();
    let dim = ctx.grid.dim();
    let rows = ctx.centred(|tt, x, m| {
        let mut g = [0.0; 3];
        for d in 0..dim {
            let (mut lo, mut hi) = (x, x);
            lo[d] -= h[d];
            hi[d] += h[d];
            g[d] = (t.eval(tt, hi).v - t.eval(tt, lo).v) / (2.0 * h[d]);
        }
        [dot(m.b, g), norm(m.b) * norm(g)]
    });
    ctx.two_sided(&t.id, &ctx.column(&rows, 0), &ctx.column(&rows, 1), &vec![0.0; rows.len()])
}

fn entropy(ctx: &Ctx, t: &ScalarTest) -> TestOutcome {
    let rows = ctx.series(|tt, x, m| {
        let e = t.eval(tt, x);
        let w = test_weight(e.v, e.dt, norm(e.grad));
        [
            m.rho_s * e.v,
            m.sigma * e.v,
            m.rho_s * e.dt + dot(m.s_flux, e.grad),
            (m.rho_s.abs() + norm(m.s_flux) + m.sigma.abs()) * w,
        ]
    });
    let (prod, flux, mag) = (ctx.column(&rows, 1), ctx.column(&rows, 2), ctx.column(&rows, 3));
    let margin: Vec<f64> = (0..rows.len()).map(|k| rows[k][0] - rows[0][0] - prod[k] - flux[k]).collect();
    ctx.one_sided(&t.id, &margin, &mag)
}

/// Margin RHS - LHS of the ballistic inequality without its defect term, and
/// the magnitude series.
fn ballistic(ctx: &Ctx, p: &BallisticPair) -> (Vec<f64>, Vec<f64>) {
    let rows = ctx.series(|tt, x, m| {
        let (th, th_t, th_g) = p.theta.eval(tt, x);
        let (bt, bt_t, bt_c) = p.field.eval(tt, x);
        [
            m.energy - th * m.rho_s - dot(bt, m.b),
            m.sigma * th,
            m.rho_s * th_t + dot(m.s_flux, th_g),
            dot(m.b, bt_t) - dot(m.emf, bt_c),
            m.energy.abs()
                + (th * m.rho_s).abs()
                + norm(bt) * norm(m.b)
                + m.sigma * th
                + (m.rho_s * th_t).abs()
                + norm(m.s_flux) * norm(th_g)
                + norm(m.b) * norm(bt_t)
                + norm(m.emf) * norm(bt_c),
        ]
    });
    let (prod, tq, tb) = (ctx.column(&rows, 1), ctx.column(&rows, 2), ctx.column(&rows, 3));
    let mag = ctx.column(&rows, 4);
    let margin = (0..rows.len()).map(|k| -tq[k] - tb[k] - (rows[k][0] - rows[0][0] + prod[k])).collect();
    (margin, mag)
}

fn strain(ctx: &Ctx, t: &TensorTest) -> TestOutcome {
    let rows = ctx.series(|tt, x, m| {
        let (z, div) = t.eval(tt, x);
        [-dot(m.u, div) - ddot(&m.d_u, &z), norm(m.u) * norm(div) + mat_norm(&m.d_u) * mat_norm(&z)]
    });
    ctx.two_sided(t.id(), &ctx.column(&rows, 0), &ctx.column(&rows, 1), &vec![0.0; rows.len()])
}

fn heat(ctx: &Ctx, t: &HeatTest) -> TestOutcome {
    let rows = ctx.series(|tt, x, m| {
        let e = t.psi.eval(tt, x);
        let (th, _, th_g) = t.theta.eval(tt, x);
        let dg = sub(m.d_theta, th_g);
        [-(m.theta - th) * e.div - dot(dg, e.v), (m.theta - th).abs() * e.div.abs() + norm(dg) * norm(e.v)]
    });
    ctx.two_sided(&t.id, &ctx.column(&rows, 0), &ctx.column(&rows, 1), &vec![0.0; rows.len()])
}

fn magnetic(ctx: &Ctx, t: &CurlTest) -> TestOutcome {
    let rows = ctx.series(|tt, x, m| {
        let e = t.g.eval(tt, x);
        let (bt, _, bt_c) = t.field.eval(tt, x);
        let (db, dc) = (sub(m.b, bt), sub(m.c_b, bt_c));
        [dot(db, e.curl) - dot(e.v, dc), norm(db) * norm(e.curl) + norm(e.v) * norm(dc)]
    });
    ctx.two_sided(&t.id, &ctx.column(&rows, 0), &ctx.column(&rows, 1), &vec![0.0; rows.len()])
}

fn horizon_ok(t: &ScalarTest, t_last: f64) -> Result<(), YoungMeasureError> {
    if t_last > t.horizon * (1.0 + 1e-12) {
        return Err(YoungMeasureError::Constraint(format!(
            "test '{}' is built for t <= {}, the series reaches {t_last}",
            t.id, t.horizon
        )));
    }
    Ok(())
}

/// Measured dissipation defects and the per-pair margins of the ballistic
/// inequality without its defect term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallisticAudit {
    pub tests: Vec<TestOutcome>,
    pub defects: Vec<DefectRow>,
}

/// Residual evaluation for one measure series; every entry point rejects
/// inadmissible tests before forming integrals.
pub struct Auditor<'a> {
    ctx: Ctx<'a>,
    bd: &'a BoundaryData,
    c_defect: f64,
    t_last: f64,
    /// h and the largest output interval.
    pub h: f64,
    pub dt: f64,
}

impl<'a> Auditor<'a> {
    pub fn new(problem: &'a Problem, series: &MeasureSeries, cfg: &AuditConfig) -> Result<Self, YoungMeasureError> {
        if !(cfg.c_audit > 0.0) || !(cfg.c_defect >= 0.0) {
            return Err(YoungMeasureError::Config(format!(
                "audit constants {} and {} must be positive",
                cfg.c_audit, cfg.c_defect
            )));
        }
        let grid = &problem.grid;
        if !grid.compatible(&series.grid) {
            return Err(YoungMeasureError::GridMismatch("measure series lives on a different grid".into()));
        }
        let times = series.times();
        let t_last = times[times.len() - 1];
        let dt = times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let h = grid.h_min();
        let m = moments(problem, series)?;
        let ctx = Ctx { grid, rule: cell_rule(grid.dim()), times, m, scale: cfg.c_audit * (h + dt) };
        Ok(Self { ctx, bd: &problem.boundary, c_defect: cfg.c_defect, t_last, h, dt })
    }

    pub fn continuity(&self, t: &ScalarTest) -> Result<TestOutcome, YoungMeasureError> {
        horizon_ok(t, self.t_last)?;
        Ok(continuity(&self.ctx, t))
    }

    /// Momentum residual against the allowance built from measured defects.
    /// Returns the outcome and whether the allowance was assembled
    /// consistently.
    pub fn momentum(&self, t: &VectorTest, defects: &[DefectRow]) -> Result<(TestOutcome, bool), YoungMeasureError> {
        check_momentum_test(self.ctx.grid, t)?;
        horizon_ok(t.scalar(), self.t_last)?;
        if defects.len() != self.ctx.times.len() {
            return Err(YoungMeasureError::Alignment(format!(
                "{} defect rows for {} frames",
                defects.len(),
                self.ctx.times.len()
            )));
        }
        let d: Vec<f64> = defects.iter().map(|r| r.defect).collect();
        Ok(momentum(&self.ctx, t, &cumulative(&self.ctx.times, &d), self.c_defect))
    }

    pub fn induction(&self, t: &VectorTest) -> Result<TestOutcome, YoungMeasureError> {
        check_induction_test(self.ctx.grid, t)?;
        horizon_ok(t.scalar(), self.t_last)?;
        Ok(induction(&self.ctx, t))
    }

    /// Weak divergence against a compactly supported scalar.
    pub fn divergence(&self, t: &ScalarTest) -> Result<TestOutcome, YoungMeasureError> {
        check_compact(self.ctx.grid, t)?;
        horizon_ok(t, self.t_last)?;
        Ok(divergence(&self.ctx, t))
    }

    /// Worst signed entropy margin; passes when not below minus the tolerance.
    pub fn entropy(&self, t: &ScalarTest) -> Result<TestOutcome, YoungMeasureError> {
        check_entropy_test(self.ctx.grid, t)?;
        horizon_ok(t, self.t_last)?;
        Ok(entropy(&self.ctx, t))
    }

    /// The defect at each time is the largest shortfall over the pairs.
    pub fn ballistic(&self, pairs: &[BallisticPair]) -> Result<BallisticAudit, YoungMeasureError> {
        let ctx = &self.ctx;
        let mut defect = vec![0.0f64; ctx.times.len()];
        let mut tests = Vec::with_capacity(pairs.len());
        for p in pairs {
            check_temperature(ctx.grid, self.bd, &p.theta)?;
            check_field(ctx.grid, self.bd, &p.field)?;
            horizon_ok(&p.theta.bump, self.t_last)?;
            horizon_ok(p.field.perturbation.scalar(), self.t_last)?;
            let (margin, mag) = ballistic(ctx, p);
            for (d, m) in defect.iter_mut().zip(&margin) {
                *d = d.max((-m).max(0.0));
            }
            let k = margin.iter().enumerate().fold(0, |best, (k, m)| if *m < margin[best] { k } else { best });
            tests.push(TestOutcome {
                id: p.id.clone(),
                residual: margin[k],
                tolerance: ctx.tol(mag[k]),
                budget: 0.0,
                ratio: 0.0,
                passed: margin.iter().all(|m| m.is_finite()),
            });
        }
        let defects = ctx.times.iter().zip(&defect).map(|(&t, &d)| DefectRow { t, defect: d }).collect();
        Ok(BallisticAudit { tests, defects })
    }

    pub fn strain(&self, t: &TensorTest) -> Result<TestOutcome, YoungMeasureError> {
        horizon_ok(&t.scalar, self.t_last)?;
        Ok(strain(&self.ctx, t))
    }

    pub fn heat(&self, t: &HeatTest) -> Result<TestOutcome, YoungMeasureError> {
        check_heat_test(self.ctx.grid, &t.psi)?;
        check_temperature(self.ctx.grid, self.bd, &t.theta)?;
        horizon_ok(t.psi.scalar(), self.t_last)?;
        horizon_ok(&t.theta.bump, self.t_last)?;
        Ok(heat(&self.ctx, t))
    }

    pub fn magnetic(&self, t: &CurlTest) -> Result<TestOutcome, YoungMeasureError> {
        check_curl_test(self.ctx.grid, &t.g)?;
        check_field(self.ctx.grid, self.bd, &t.field)?;
        horizon_ok(t.g.scalar(), self.t_last)?;
        horizon_ok(t.field.perturbation.scalar(), self.t_last)?;
        Ok(magnetic(&self.ctx, t))
    }
}

/// Audit every identity of the dictionary against a measure series.
pub fn audit(
    problem: &Problem,
    series: &MeasureSeries,
    dict: &Dictionary,
    cfg: &AuditConfig,
) -> Result<DmvAudit, YoungMeasureError> {
    let a = Auditor::new(problem, series, cfg)?;
    let ballistic = a.ballistic(&dict.ballistic)?;
    let collect = |name: &str, r: Result<Vec<TestOutcome>, YoungMeasureError>| r.map(|t| report(name, t));

    let mut identities = vec![collect("continuity", dict.continuity.iter().map(|t| a.continuity(t)).collect())?];
    let mut budget_consistent = true;
    let mut mom = Vec::with_capacity(dict.momentum.len());
    for t in &dict.momentum {
        let (o, ok) = a.momentum(t, &ballistic.defects)?;
        budget_consistent &= ok;
        mom.push(o);
    }
    identities.push(report("momentum", mom));
    identities.push(collect("induction", dict.induction.iter().map(|t| a.induction(t)).collect())?);
    identities.push(collect("divergence", dict.divergence.iter().map(|t| a.divergence(t)).collect())?);
    identities.push(collect("entropy", dict.entropy.iter().map(|t| a.entropy(t)).collect())?);
    identities.push(report("ballistic", ballistic.tests));
    identities.push(collect("strain_compatibility", dict.strain.iter().map(|t| a.strain(t)).collect())?);
    identities.push(collect("temperature_compatibility", dict.heat.iter().map(|t| a.heat(t)).collect())?);
    identities.push(collect("field_compatibility", dict.magnetic.iter().map(|t| a.magnetic(t)).collect())?);

    let passed = budget_consistent && identities.iter().all(|r| r.passed);
    Ok(DmvAudit {
        h: a.h,
        dt: a.dt,
        c_audit: cfg.c_audit,
        c_defect: cfg.c_defect,
        identities,
        defects: ballistic.defects,
        budget_consistent,
        passed,
    })
}
