//! Relative energy between a computed state and a smooth reference, the
//! cut-off split into essential and residual parts, and the diagnostics
//! built on it.

mod inequality;
mod korn;
mod reference;

use serde::Serialize;
use thiserror::Error;

use crate::constitutive::ConstitutiveError;
use crate::eos::{EosError, ThermoPoint, Thermodynamics};
use crate::grid::{FluidState, Problem, SolverError};
use crate::numerics::pairwise_sum;
use crate::tensor::{norm2, sub, Vec3};

pub use inequality::{gronwall_fit, rei_sides, GronwallFit, ReiReport, ReiRow, ReiTerms};
pub use korn::{korn_poincare_ratio, kp_sweep, random_zero_trace_field, KpRatio, KpSweep, NodalField};
pub use reference::{ReferenceFrame, ReferenceSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelEnergyError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("trajectory and reference are not aligned: {0}")]
    Alignment(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("degenerate quotient: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A full state point (rho, theta, u, B).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePoint {
    pub rho: f64,
    pub theta: f64,
    pub u: Vec3,
    pub b: Vec3,
}

/// A reference point (r, Theta, U, H).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub r: f64,
    pub theta: f64,
    pub u: Vec3,
    pub h: Vec3,
}

impl RefPoint {
    pub fn as_state(&self) -> StatePoint {
        StatePoint { rho: self.r, theta: self.theta, u: self.u, b: self.h }
    }
}

/// 1/2 rho|u-U|^2 + 1/2|B-H|^2 + rho e - Theta(rho s - r s_r)
/// - (e_r - Theta s_r + p_r/r)(rho - r) - r e_r, the subscript r marking
/// evaluation at (r, Theta).
pub fn density(eos: &dyn Thermodynamics, s: &StatePoint, r: &RefPoint) -> Result<f64, RelEnergyError> {
    if !(s.rho >= 0.0) || !(s.theta > 0.0) || !(r.r > 0.0) || !(r.theta > 0.0) {
        return Err(RelEnergyError::Domain(format!(
            "state ({}, {}) against reference ({}, {})",
            s.rho, s.theta, r.r, r.theta
        )));
    }
    let rp = ThermoPoint { rho: r.r, theta: r.theta };
    let (e_r, s_r, p_r) = (eos.internal_energy(rp)?, eos.entropy(rp)?, eos.pressure(rp)?);
    // Vacuum: rho e and rho s vanish with rho.
    let (rho_e, rho_s) = if s.rho == 0.0 {
        (0.0, 0.0)
    } else {
        let sp = ThermoPoint { rho: s.rho, theta: s.theta };
        (s.rho * eos.internal_energy(sp)?, s.rho * eos.entropy(sp)?)
    };
    let kinetic = 0.5 * s.rho * norm2(sub(s.u, r.u));
    let magnetic = 0.5 * norm2(sub(s.b, r.h));
    let gibbs = e_r - r.theta * s_r + p_r / r.r;
    Ok(kinetic + magnetic + rho_e - r.theta * (rho_s - r.r * s_r) - gibbs * (s.rho - r.r) - r.r * e_r)
}

/// Midpoint-rule integral of the density over the grid.
pub fn total(problem: &Problem, state: &FluidState, reference: &ReferenceFrame) -> Result<f64, RelEnergyError> {
    let grid = &problem.grid;
    if state.len() != grid.len() || reference.len() != grid.len() {
        return Err(RelEnergyError::GridMismatch(format!(
            "state {} / reference {} cells on a {}-cell grid",
            state.len(),
            reference.len(),
            grid.len()
        )));
    }
    let theta = state.temperatures(grid, problem.eos.as_ref())?;
    let vals: Vec<f64> = (0..state.len())
        .map(|i| {
            let sp = StatePoint { rho: state.rho[i], theta: theta[i], u: state.velocity(i), b: state.b[i] };
            density(problem.eos.as_ref(), &sp, &reference.point(i))
        })
        .collect::<Result<_, _>>()?;
    Ok(grid.cell_volume() * pairwise_sum(&vals))
}

/// Smooth cut-off psi_delta: 1 on [delta, 1/delta]^2, with C^1 cubic ramps of
/// width delta/2 on either side (so it vanishes outside [delta/2, 2/delta]^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub delta: f64,
}

impl Cutoff {
    pub fn new(delta: f64) -> Result<Self, RelEnergyError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(RelEnergyError::Domain(format!("cut-off parameter {delta} outside (0, 1)")));
        }
        Ok(Self { delta })
    }

    fn ramp(&self, x: f64) -> f64 {
        let d = self.delta;
        let (a, b) = (0.5 * d, d);
        let (c, e) = (1.0 / d, 1.0 / d + 0.5 * d);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        if x <= a || x >= e {
            0.0
        } else if x < b {
            smooth((x - a) / (b - a))
        } else if x <= c {
            1.0
        } else {
            smooth((e - x) / (e - c))
        }
    }

    /// Product ramp, C^1 in both variables.
    pub fn weight(&self, rho: f64, theta: f64) -> f64 {
        self.ramp(rho) * self.ramp(theta)
    }

    /// [h]_ess and [h]_res; they add up to h exactly.
    pub fn split(&self, rho: f64, theta: f64, h: f64) -> (f64, f64) {
        let ess = self.weight(rho, theta) * h;
        (ess, h - ess)
    }

    pub fn in_window(&self, rho: f64, theta: f64) -> bool {
        let (lo, hi) = (self.delta, 1.0 / self.delta);
        (lo..=hi).contains(&rho) && (lo..=hi).contains(&theta)
    }
}

/// Result of comparing the relative energy against the bracket of essential
/// and residual quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    /// min over samples of E / bracket; None when every bracket vanished.
    pub c_delta: Option<f64>,
    pub max_ratio: f64,
    pub counted: usize,
    pub skipped: usize,
    pub vacuous: bool,
}

/// The bracket: squared essential differences plus residual parts of
/// 1, rho, rho|s|, rho e, rho|u|^2, |B|^2.
pub fn lower_bound_bracket(
    eos: &dyn Thermodynamics,
    cutoff: &Cutoff,
    s: &StatePoint,
    r: &RefPoint,
) -> Result<f64, RelEnergyError> {
    let psi = cutoff.weight(s.rho, s.theta);
    let res = 1.0 - psi;
    let ess2 =
        psi * psi * ((s.rho - r.r).powi(2) + (s.theta - r.theta).powi(2) + norm2(sub(s.u, r.u)) + norm2(sub(s.b, r.h)));
    if res == 0.0 {
        return Ok(ess2);
    }
    let (rho_e, rho_s) = if s.rho == 0.0 {
        (0.0, 0.0)
    } else {
        let sp = ThermoPoint { rho: s.rho, theta: s.theta };
        (s.rho * eos.internal_energy(sp)?, s.rho * eos.entropy(sp)?.abs())
    };
    Ok(ess2 + res * (1.0 + s.rho + rho_s + rho_e + s.rho * norm2(s.u) + norm2(s.b)))
}

pub fn lower_bound_check(
    eos: &dyn Thermodynamics,
    cutoff: &Cutoff,
    samples: &[(StatePoint, RefPoint)],
) -> Result<LowerBound, RelEnergyError> {
    let mut c = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let (mut counted, mut skipped) = (0, 0);
    for (s, r) in samples {
        if !cutoff.in_window(r.r, r.theta) {
            return Err(RelEnergyError::Domain(format!(
                "reference ({}, {}) outside the essential window",
                r.r, r.theta
            )));
        }
        let bracket = lower_bound_bracket(eos, cutoff, s, r)?;
        if bracket < 1e-14 {
            skipped += 1;
            continue;
        }
        let ratio = density(eos, s, r)? / bracket;
        c = c.min(ratio);
        max_ratio = max_ratio.max(ratio);
        counted += 1;
    }
    Ok(LowerBound { c_delta: (counted > 0).then_some(c), max_ratio, counted, skipped, vacuous: counted == 0 })
}
