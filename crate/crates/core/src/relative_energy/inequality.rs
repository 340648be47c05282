use rayon::prelude::*;
use serde::Serialize;

use crate::constitutive::{sym_grad, traceless};
use crate::eos::ThermoPoint;
use crate::grid::{cell_gradients, Extended, FluidState, Problem};
use crate::numerics::pairwise_sum_by;
use crate::tensor::{curl_from_gradient, ddot, dot, frob2, mat_scale, mat_sub, norm, norm2, scale, sub, trace};

use super::{density, Cutoff, ReferenceSolution, RelEnergyError, StatePoint};

const PAR_MIN: usize = 512;

/// Time integrals up to the row's time of every term of the inequality, each
/// with its own sign convention (the left side adds them as
/// t1 - t2 + t3 - t4 + t5a + t5b - t6 + t7 - t8).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ReiTerms {
    /// mu/2 |sqrt(Theta/theta) T[Du] - sqrt(theta/Theta) T[D(U)]|^2
    pub t1_shear: f64,
    /// 1/2 T[D(U)] : (mu - mu_r)((theta/Theta) T[D(U)] - T[Du])
    pub t2_shear_cross: f64,
    /// eta |sqrt(Theta/theta) tr Du - sqrt(theta/Theta) div U|^2
    pub t3_bulk: f64,
    /// div U (eta - eta_r)((theta/Theta) div U - tr Du)
    pub t4_bulk_cross: f64,
    /// Theta kappa |D_theta/theta - grad Theta/Theta|^2
    pub t5a_heat: f64,
    /// kappa_r (grad Theta/Theta).(theta - Theta)(grad Theta/Theta - D_theta/theta)
    pub t5b_heat_cross: f64,
    /// grad Theta.(kappa - kappa_r)(grad Theta/Theta - D_theta/theta)
    pub t6_heat_coeff: f64,
    /// zeta |sqrt(Theta/theta) C_B - sqrt(theta/Theta) curl H|^2
    pub t7_resistive: f64,
    /// curl H.(zeta - zeta_r)((theta/Theta) curl H - C_B)
    pub t8_resistive_cross: f64,
    /// [theta + |p| + |u-U| + rho|s||u| + |B||u-U|]_res
    pub residual: f64,
    /// c times the integral of H.
    pub gronwall: f64,
}

impl ReiTerms {
    fn dissipative(&self) -> f64 {
        self.t1_shear - self.t2_shear_cross + self.t3_bulk - self.t4_bulk_cross + self.t5a_heat + self.t5b_heat_cross
            - self.t6_heat_coeff
            + self.t7_resistive
            - self.t8_resistive_cross
    }

    fn from_array(a: [f64; 10], gronwall: f64) -> Self {
        Self {
            t1_shear: a[0],
            t2_shear_cross: a[1],
            t3_bulk: a[2],
            t4_bulk_cross: a[3],
            t5a_heat: a[4],
            t5b_heat_cross: a[5],
            t6_heat_coeff: a[6],
            t7_resistive: a[7],
            t8_resistive_cross: a[8],
            residual: a[9],
            gronwall,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReiRow {
    pub t: f64,
    pub h_rel: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub terms: ReiTerms,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReiReport {
    pub c: f64,
    pub rows: Vec<ReiRow>,
    pub min_margin: f64,
}

impl ReiReport {
    pub fn h_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h_rel).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// Cell volume times the spatial sums of (relative energy, ten integrands).
fn frame_integrands(
    problem: &Problem,
    state: &FluidState,
    reference: &super::ReferenceFrame,
    cutoff: &Cutoff,
) -> Result<(f64, [f64; 10]), RelEnergyError> {
    let grid = &problem.grid;
    if state.len() != grid.len() || reference.len() != grid.len() {
        return Err(RelEnergyError::GridMismatch(format!(
            "state {} / reference {} cells on a {}-cell grid",
            state.len(),
            reference.len(),
            grid.len()
        )));
    }
    let eos = problem.eos.as_ref();
    let ext = Extended::build(grid, eos, &problem.boundary, state)?;
    let grads = cell_gradients(grid, &ext);
    let cells: Vec<[f64; 11]> = (0..grid.len())
        .into_par_iter()
        .with_min_len(PAR_MIN)
        .map(|i| -> Result<[f64; 11], RelEnergyError> {
            let q = ext.interior(grid.coords(i));
            let (rho, th) = (ext.rho[q], ext.theta[q]);
            let (u, b) = (ext.u[q], ext.b[q]);
            let rp = reference.point(i);
            let big = rp.theta;
            let e = density(eos, &StatePoint { rho, theta: th, u, b }, &rp)?;

            let c = problem.transport.coefficients(ThermoPoint { rho, theta: th })?;
            let cr = problem.transport.coefficients(ThermoPoint { rho: rp.r, theta: big })?;
            let (a, bb) = ((big / th).sqrt(), (th / big).sqrt());
            let ratio = th / big;

            let du = sym_grad(&grads.u[i]);
            let d_ref = sym_grad(&reference.grad_u[i]);
            let (tdu, tdr) = (traceless(&du), traceless(&d_ref));
            let (tr_u, div_ref) = (trace(&du), trace(&d_ref));
            let t1 = 0.5 * c.mu * frob2(&mat_sub(&mat_scale(a, &tdu), &mat_scale(bb, &tdr)));
            let t2 = 0.5 * (c.mu - cr.mu) * ddot(&tdr, &mat_sub(&mat_scale(ratio, &tdr), &tdu));
            let t3 = c.eta * (a * tr_u - bb * div_ref).powi(2);
            let t4 = div_ref * (c.eta - cr.eta) * (ratio * div_ref - tr_u);

            let g_rel = sub(scale(1.0 / big, reference.grad_theta[i]), scale(1.0 / th, grads.theta[i]));
            let t5a = big * c.kappa * norm2(g_rel);
            let t5b = cr.kappa * (th - big) * dot(scale(1.0 / big, reference.grad_theta[i]), g_rel);
            let t6 = (c.kappa - cr.kappa) * dot(reference.grad_theta[i], g_rel);

            let cb = curl_from_gradient(&grads.b[i]);
            let ch = curl_from_gradient(&reference.grad_h[i]);
            let t7 = c.zeta * norm2(sub(scale(a, cb), scale(bb, ch)));
            let t8 = (c.zeta - cr.zeta) * dot(ch, sub(scale(ratio, ch), cb));

            let res_weight = 1.0 - cutoff.weight(rho, th);
            let residual = if res_weight == 0.0 {
                0.0
            } else {
                let pt = ThermoPoint { rho, theta: th };
                let du_ref = norm(sub(u, rp.u));
                let rho_s = if rho == 0.0 { 0.0 } else { rho * eos.entropy(pt)?.abs() };
                res_weight * (th + eos.pressure(pt)?.abs() + du_ref + rho_s * norm(u) + norm(b) * du_ref)
            };
            Ok([e, t1, t2, t3, t4, t5a, t5b, t6, t7, t8, residual])
        })
        .collect::<Result<_, _>>()?;
    let vol = grid.cell_volume();
    let mut terms = [0.0; 10];
    for (k, t) in terms.iter_mut().enumerate() {
        *t = vol * pairwise_sum_by(&cells, |c| c[k + 1]);
    }
    Ok((vol * pairwise_sum_by(&cells, |c| c[0]), terms))
}

/// Both sides of the relative energy inequality at every frame, with
/// trapezoidal time integrals. Dissipation defects are zero for a single
/// deterministic trajectory, so H is the relative energy itself. The right
/// side carries H(0), which vanishes when the initial data coincide.
pub fn rei_sides(
    problem: &Problem,
    frames: &[FluidState],
    reference: &ReferenceSolution,
    cutoff: &Cutoff,
    c: f64,
) -> Result<ReiReport, RelEnergyError> {
    if frames.is_empty() {
        return Err(RelEnergyError::Data("no frames".into()));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(RelEnergyError::Data(format!("inequality constant {c} must be finite and nonnegative")));
    }
    let times: Vec<f64> = frames.iter().map(|f| f.t).collect();
    reference.check_alignment(&times)?;
    let per_frame: Vec<(f64, [f64; 10])> = frames
        .iter()
        .enumerate()
        .map(|(k, f)| frame_integrands(problem, f, reference.frame(k, f.t)?, cutoff))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::with_capacity(frames.len());
    let mut acc = [0.0; 10];
    let mut acc_h = 0.0;
    for k in 0..frames.len() {
        if k > 0 {
            let dt = times[k] - times[k - 1];
            let (h0, a0) = &per_frame[k - 1];
            let (h1, a1) = &per_frame[k];
            for j in 0..10 {
                acc[j] += 0.5 * dt * (a0[j] + a1[j]);
            }
            acc_h += 0.5 * dt * (h0 + h1);
        }
        let terms = ReiTerms::from_array(acc, c * acc_h);
        let h_rel = per_frame[k].0;
        let lhs = h_rel + terms.dissipative();
        let rhs = per_frame[0].0 + terms.gronwall + terms.residual;
        rows.push(ReiRow { t: times[k], h_rel, lhs, rhs, margin: rhs - lhs, terms });
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(ReiReport { c, rows, min_margin })
}

/// Smallest growth rate enclosing a series in an exponential envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallFit {
    /// Infinite when H(0) = 0 but H is not identically zero.
    pub c_fit: f64,
    /// max over t of H(t) / (H(0) e^{c_fit t}) - 1.
    pub max_violation: f64,
}

const ENVELOPE_SLACK: f64 = 1e-9;

/// Bisection (60 halvings) for the smallest c >= 0 with
/// H(t) <= H(0) e^{c t} (1 + 1e-9) on a uniform time grid.
pub fn gronwall_fit(times: &[f64], h: &[f64]) -> Result<GronwallFit, RelEnergyError> {
    if times.len() != h.len() || times.len() < 2 {
        return Err(RelEnergyError::Data(format!("{} times for {} values", times.len(), h.len())));
    }
    if let Some(v) = h.iter().find(|&&v| !(v >= -1e-12)) {
        return Err(RelEnergyError::Data(format!("negative or non-finite value {v}")));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(times[0].abs())) {
        return Err(RelEnergyError::Data("time grid is not uniform".into()));
    }
    let h0 = h[0].max(0.0);
    if h0 == 0.0 {
        let zero = h.iter().all(|&v| v <= 0.0);
        return Ok(GronwallFit { c_fit: if zero { 0.0 } else { f64::INFINITY }, max_violation: 0.0 });
    }
    let fits =
        |c: f64| times.iter().zip(h).all(|(&t, &v)| v <= h0 * (c * (t - times[0])).exp() * (1.0 + ENVELOPE_SLACK));
    let mut hi = times
        .iter()
        .zip(h)
        .skip(1)
        .map(|(&t, &v)| (v.max(f64::MIN_POSITIVE) / h0).ln() / (t - times[0]))
        .fold(0.0, f64::max)
        * 1.01
        + 1.0;
    while !fits(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    if fits(0.0) {
        hi = 0.0;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fits(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let max_violation = times
        .iter()
        .zip(h)
        .map(|(&t, &v)| v / (h0 * (hi * (t - times[0])).exp()) - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GronwallFit { c_fit: hi, max_violation })
}
