use serde::Serialize;

use super::monatomic::MonatomicRadiation;
use super::{EosError, ThermoPoint, Thermodynamics};
use crate::numerics::halton;

/// Residual tolerance used for the pass/fail verdict of [`check_gibbs`].
pub const DEFAULT_GIBBS_TOL: f64 = 1e-5;

/// Axis-aligned rectangle in (rho, theta), sampled log-uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub rho: (f64, f64),
    pub theta: (f64, f64),
}

impl Region {
    pub fn new(rho: (f64, f64), theta: (f64, f64)) -> Result<Self, EosError> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi >= lo && hi.is_finite();
        if !ok(rho) || !ok(theta) {
            return Err(EosError::Domain { rho: rho.0, theta: theta.0 });
        }
        Ok(Self { rho, theta })
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Self { rho: (lo, hi), theta: (lo, hi) }
    }

    fn validate(&self) -> Result<(), EosError> {
        Self::new(self.rho, self.theta).map(|_| ())
    }

    /// Deterministic low-discrepancy sample `k`; corners are always included
    /// among the first four samples.
    pub fn sample(&self, k: usize) -> ThermoPoint {
        let (u, v) = match k {
            0 => (0.0, 0.0),
            1 => (1.0, 0.0),
            2 => (0.0, 1.0),
            3 => (1.0, 1.0),
            _ => (halton(k - 4, 2), halton(k - 4, 3)),
        };
        let lerp = |(lo, hi): (f64, f64), t: f64| (lo.ln() + t * (hi.ln() - lo.ln())).exp();
        ThermoPoint { rho: lerp(self.rho, u), theta: lerp(self.theta, v) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsReport {
    /// max |de/dtheta - theta ds/dtheta|, scaled by the local magnitude.
    pub temperature_residual: f64,
    /// max |de/drho - theta ds/drho - p/rho^2|, scaled by the local magnitude.
    pub density_residual: f64,
    pub worst: (f64, f64),
    pub samples: usize,
    pub passed: bool,
}

impl GibbsReport {
    pub fn max_residual(&self) -> f64 {
        self.temperature_residual.max(self.density_residual)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }
}

fn scaled(residual: f64, terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale > 0.0 {
        residual.abs() / scale
    } else {
        residual.abs()
    }
}

/// Component form of Gibbs' relation at `samples` points of `region`.
pub fn check_gibbs<T: Thermodynamics + ?Sized>(
    model: &T,
    region: Region,
    samples: usize,
) -> Result<GibbsReport, EosError> {
    region.validate()?;
    if samples == 0 {
        return Err(EosError::InvalidParameter("at least one sample required".into()));
    }
    let mut report = GibbsReport {
        temperature_residual: 0.0,
        density_residual: 0.0,
        worst: (region.rho.0, region.theta.0),
        samples,
        passed: true,
    };
    let mut worst = -1.0;
    for k in 0..samples {
        let pt = region.sample(k);
        let d = model.partials(pt)?;
        let p = model.pressure(pt)?;
        let th = pt.theta;
        let r1 = scaled(d.de_dtheta - th * d.ds_dtheta, &[d.de_dtheta, th * d.ds_dtheta]);
        let p_term = p / (pt.rho * pt.rho);
        let r2 = scaled(d.de_drho - th * d.ds_drho - p_term, &[d.de_drho, th * d.ds_drho, p_term]);
        report.temperature_residual = report.temperature_residual.max(r1);
        report.density_residual = report.density_residual.max(r2);
        if r1.max(r2) > worst {
            worst = r1.max(r2);
            report.worst = (pt.rho, pt.theta);
        }
    }
    report.passed = report.passes(DEFAULT_GIBBS_TOL);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityViolation {
    pub rho: f64,
    pub theta: f64,
    pub dp_drho: f64,
    pub de_dtheta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub passed: bool,
    pub samples: usize,
    pub violations: usize,
    pub first_violation: Option<StabilityViolation>,
    pub min_dp_drho: f64,
    pub min_de_dtheta: f64,
}

/// dp/drho > 0 and de/dtheta > 0 at every sample.
pub fn check_stability<T: Thermodynamics + ?Sized>(
    model: &T,
    region: Region,
    samples: usize,
) -> Result<StabilityReport, EosError> {
    region.validate()?;
    let mut report = StabilityReport {
        passed: true,
        samples,
        violations: 0,
        first_violation: None,
        min_dp_drho: f64::INFINITY,
        min_de_dtheta: f64::INFINITY,
    };
    for k in 0..samples {
        let pt = region.sample(k);
        let d = model.partials(pt)?;
        report.min_dp_drho = report.min_dp_drho.min(d.dp_drho);
        report.min_de_dtheta = report.min_de_dtheta.min(d.de_dtheta);
        if !(d.dp_drho > 0.0 && d.de_dtheta > 0.0) {
            report.violations += 1;
            if report.first_violation.is_none() {
                report.first_violation = Some(StabilityViolation {
                    rho: pt.rho,
                    theta: pt.theta,
                    dp_drho: d.dp_drho,
                    de_dtheta: d.de_dtheta,
                });
            }
        }
    }
    report.passed = report.violations == 0;
    Ok(report)
}

/// Smallest C with |p| <= C (1 + rho e + rho |s|) over the samples.
pub fn growth_constant<T: Thermodynamics + ?Sized>(model: &T, region: Region, samples: usize) -> Result<f64, EosError> {
    region.validate()?;
    let mut c = 0.0f64;
    for k in 0..samples {
        let pt = region.sample(k);
        let p = model.pressure(pt)?;
        let e = model.internal_energy(pt)?;
        let s = model.entropy(pt)?;
        c = c.max(p.abs() / (1.0 + pt.rho * e + pt.rho * s.abs()));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralClause {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralReport {
    pub z_max: f64,
    pub clauses: Vec<StructuralClause>,
    /// Smallest admissible constant in the pressure growth bound.
    pub growth_constant: f64,
}

impl StructuralReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&StructuralClause> {
        self.clauses.iter().find(|c| !c.passed)
    }
}

const STRUCTURAL_POINTS: usize = 2000;
const STRUCTURAL_Z_MIN: f64 = 1e-8;

/// Evaluate every structural clause of the monatomic profile on a log grid
/// of (0, z_max].
pub fn structural_report(model: &MonatomicRadiation, z_max: f64) -> Result<StructuralReport, EosError> {
    if !(z_max > 1.0) || !z_max.is_finite() {
        return Err(EosError::InvalidParameter(format!("z_max must exceed 1, got {z_max}")));
    }
    let profile = model.profile();
    let table = model.entropy_table();
    let n = STRUCTURAL_POINTS;
    let zs: Vec<f64> = (0..n)
        .map(|k| (STRUCTURAL_Z_MIN.ln() + (z_max.ln() - STRUCTURAL_Z_MIN.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect();
    let mut clauses = Vec::new();
    let mut push = |name: &'static str, failure: Option<String>| {
        clauses.push(StructuralClause {
            name,
            passed: failure.is_none(),
            detail: failure.unwrap_or_else(|| "ok".into()),
        });
    };

    let p0 = profile.eval(0.0).0;
    push("vacuum_limit", (p0.abs() > 1e-12).then(|| format!("P(0) = {p0}")));

    let bad = zs.iter().find(|&&z| !(profile.eval(z).1 > 0.0));
    push("pressure_monotone", bad.map(|z| format!("P'({z}) = {}", profile.eval(*z).1)));

    let bad = zs.iter().find(|&&z| !(profile.stability_margin(z) > 0.0));
    push("stability_margin", bad.map(|z| format!("(5/3 P - P' Z)/Z = {} at Z = {z}", profile.stability_margin(*z))));

    let ratio = |z: f64| profile.eval(z).0 / z.powf(5.0 / 3.0);
    let bad = zs.windows(2).find(|w| ratio(w[1]) > ratio(w[0]) * (1.0 + 1e-12));
    push("degenerate_monotone", bad.map(|w| format!("P/Z^(5/3) increases between Z = {} and {}", w[0], w[1])));
    let limit = ratio(z_max);
    let p_inf = model.p_infinity();
    push(
        "degenerate_limit",
        ((limit - p_inf).abs() > 0.01 * p_inf)
            .then(|| format!("P/Z^(5/3) = {limit} at Z = {z_max}, expected {p_inf} within 1%")),
    );

    let mut entropy = Vec::with_capacity(n);
    for &z in &zs {
        entropy.push(table.eval(z)?.0);
    }
    let bad = entropy.windows(2).position(|w| !(w[1] < w[0]));
    push("entropy_decreasing", bad.map(|k| format!("S does not decrease between Z = {} and {}", zs[k], zs[k + 1])));
    let s_end = entropy[n - 1];
    push("entropy_vanishes", (!(s_end.abs() < 0.05)).then(|| format!("S({z_max}) = {s_end}, expected below 0.05")));

    let growth = growth_constant(model, Region::square(1e-3, 1e3), 4096)?;
    push("pressure_growth", (!growth.is_finite()).then(|| format!("growth constant {growth} is not finite")));

    Ok(StructuralReport { z_max, clauses, growth_constant: growth })
}

/// As [`structural_report`], but a failed clause becomes an error naming it.
pub fn check_structural(model: &MonatomicRadiation, z_max: f64) -> Result<StructuralReport, EosError> {
    let report = structural_report(model, z_max)?;
    if let Some(c) = report.first_failure() {
        return Err(EosError::StructuralViolation { clause: c.name.to_string(), detail: c.detail.clone() });
    }
    Ok(report)
}
