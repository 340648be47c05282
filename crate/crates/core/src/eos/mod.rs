//! Thermodynamic closures: pressure, specific internal energy and specific
//! entropy as functions of density and temperature, plus verification of the
//! Gibbs relation, thermodynamic stability and the structural hypotheses of
//! the monatomic-plus-radiation family.

mod checks;
mod interp;
mod monatomic;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checks::{
    check_gibbs, check_stability, check_structural, growth_constant, structural_report, GibbsReport, Region,
    StabilityReport, StabilityViolation, StructuralClause, StructuralReport, DEFAULT_GIBBS_TOL,
};
pub use interp::MonotoneCubic;
pub use monatomic::{EntropyTable, MonatomicRadiation, PressureProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EosError {
    #[error("state outside the domain: rho = {rho}, theta = {theta}")]
    Domain { rho: f64, theta: f64 },
    #[error("entropy tabulation failed at Z = {z}: {reason}")]
    Tabulation { z: f64, reason: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("structural clause `{clause}` violated: {detail}")]
    StructuralViolation { clause: String, detail: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no temperature reproduces specific energy {energy} at density {rho}")]
    NoTemperature { rho: f64, energy: f64 },
}

/// A (density, temperature) pair; both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    pub rho: f64,
    pub theta: f64,
}

impl ThermoPoint {
    pub fn new(rho: f64, theta: f64) -> Result<Self, EosError> {
        let pt = Self { rho, theta };
        pt.validate()?;
        Ok(pt)
    }

    pub fn validate(&self) -> Result<(), EosError> {
        if self.rho > 0.0 && self.theta > 0.0 && self.rho.is_finite() && self.theta.is_finite() {
            Ok(())
        } else {
            Err(EosError::Domain { rho: self.rho, theta: self.theta })
        }
    }
}

/// First partial derivatives of p, e, s with respect to (rho, theta).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partials {
    pub dp_drho: f64,
    pub dp_dtheta: f64,
    pub de_drho: f64,
    pub de_dtheta: f64,
    pub ds_drho: f64,
    pub ds_dtheta: f64,
}

/// Interface shared by the shipped closures and by user-supplied (or mock)
/// models used in verification.
pub trait Thermodynamics: Send + Sync {
    fn pressure(&self, pt: ThermoPoint) -> Result<f64, EosError>;
    fn internal_energy(&self, pt: ThermoPoint) -> Result<f64, EosError>;
    fn entropy(&self, pt: ThermoPoint) -> Result<f64, EosError>;

    fn partials(&self, pt: ThermoPoint) -> Result<Partials, EosError> {
        finite_difference_partials(self, pt)
    }

    /// e - theta s + p / rho.
    fn gibbs_free_energy(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        let e = self.internal_energy(pt)?;
        let s = self.entropy(pt)?;
        let p = self.pressure(pt)?;
        Ok(e - pt.theta * s + p / pt.rho)
    }

    /// Squared adiabatic sound speed dp/drho + theta (dp/dtheta)^2 / (rho^2 de/dtheta).
    fn sound_speed_sq(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        let d = self.partials(pt)?;
        Ok(d.dp_drho + pt.theta * d.dp_dtheta * d.dp_dtheta / (pt.rho * pt.rho * d.de_dtheta))
    }

    /// de/dtheta.
    fn heat_capacity(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        Ok(self.partials(pt)?.de_dtheta)
    }

    /// Temperature reproducing the specific internal energy `e` at density `rho`.
    fn temperature(&self, rho: f64, e: f64) -> Result<f64, EosError> {
        invert_energy(self, rho, e)
    }
}

const FD_REL_STEP: f64 = 1e-6;

fn centered<F: Fn(f64) -> Result<f64, EosError>>(f: &F, x: f64, h: f64) -> Result<f64, EosError> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Centered difference with relative step 1e-6 and one Richardson level.
fn richardson<F: Fn(f64) -> Result<f64, EosError>>(f: F, x: f64) -> Result<f64, EosError> {
    let h = (FD_REL_STEP * x.abs()).max(FD_REL_STEP);
    if x - h <= 0.0 {
        return Err(EosError::Numerical(format!("finite-difference stencil at {x} with step {h} leaves the domain")));
    }
    let coarse = centered(&f, x, h)?;
    let fine = centered(&f, x, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Partials of any closure by centered finite differences.
pub fn finite_difference_partials<T: Thermodynamics + ?Sized>(
    model: &T,
    pt: ThermoPoint,
) -> Result<Partials, EosError> {
    pt.validate()?;
    let at_rho = |r: f64| ThermoPoint { rho: r, theta: pt.theta };
    let at_theta = |t: f64| ThermoPoint { rho: pt.rho, theta: t };
    Ok(Partials {
        dp_drho: richardson(|r| model.pressure(at_rho(r)), pt.rho)?,
        dp_dtheta: richardson(|t| model.pressure(at_theta(t)), pt.theta)?,
        de_drho: richardson(|r| model.internal_energy(at_rho(r)), pt.rho)?,
        de_dtheta: richardson(|t| model.internal_energy(at_theta(t)), pt.theta)?,
        ds_drho: richardson(|r| model.entropy(at_rho(r)), pt.rho)?,
        ds_dtheta: richardson(|t| model.entropy(at_theta(t)), pt.theta)?,
    })
}

/// Safeguarded Newton iteration on theta -> e(rho, theta), which is
/// increasing for thermodynamically stable closures.
fn invert_energy<T: Thermodynamics + ?Sized>(model: &T, rho: f64, e: f64) -> Result<f64, EosError> {
    if !(rho > 0.0) || !e.is_finite() {
        return Err(EosError::NoTemperature { rho, energy: e });
    }
    let energy = |t: f64| model.internal_energy(ThermoPoint { rho, theta: t });
    let mut hi = 1.0;
    let mut steps = 0;
    while energy(hi)? < e {
        hi *= 2.0;
        steps += 1;
        if steps > 2000 {
            return Err(EosError::NoTemperature { rho, energy: e });
        }
    }
    let mut lo = hi * 0.5;
    steps = 0;
    while energy(lo)? > e {
        lo *= 0.5;
        steps += 1;
        if steps > 2000 || lo < 1e-300 {
            return Err(EosError::NoTemperature { rho, energy: e });
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let pt = ThermoPoint { rho, theta: t };
        let f = model.internal_energy(pt)? - e;
        if f == 0.0 {
            return Ok(t);
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let cv = model.heat_capacity(pt)?;
        let mut next = t - f / cv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * t || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// Ideal polytropic gas: p = rho theta, e = c_v theta, s = ln(theta^c_v / rho).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealGas {
    c_v: f64,
}

impl IdealGas {
    pub fn new(c_v: f64) -> Result<Self, EosError> {
        if !(c_v > 1.0) || !c_v.is_finite() {
            return Err(EosError::InvalidParameter(format!("c_v must exceed 1, got {c_v}")));
        }
        Ok(Self { c_v })
    }

    pub fn c_v(&self) -> f64 {
        self.c_v
    }
}

impl Thermodynamics for IdealGas {
    fn pressure(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        pt.validate()?;
        Ok(pt.rho * pt.theta)
    }

    fn internal_energy(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        pt.validate()?;
        Ok(self.c_v * pt.theta)
    }

    fn entropy(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        pt.validate()?;
        Ok(self.c_v * pt.theta.ln() - pt.rho.ln())
    }

    fn partials(&self, pt: ThermoPoint) -> Result<Partials, EosError> {
        pt.validate()?;
        Ok(Partials {
            dp_drho: pt.theta,
            dp_dtheta: pt.rho,
            de_drho: 0.0,
            de_dtheta: self.c_v,
            ds_drho: -1.0 / pt.rho,
            ds_dtheta: self.c_v / pt.theta,
        })
    }

    fn sound_speed_sq(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        pt.validate()?;
        Ok((1.0 + 1.0 / self.c_v) * pt.theta)
    }

    fn heat_capacity(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        pt.validate()?;
        Ok(self.c_v)
    }

    fn temperature(&self, rho: f64, e: f64) -> Result<f64, EosError> {
        if !(rho > 0.0) || !(e > 0.0) || !e.is_finite() {
            return Err(EosError::NoTemperature { rho, energy: e });
        }
        Ok(e / self.c_v)
    }
}

/// The shipped closures.
#[derive(Debug, Clone)]
pub enum EosModel {
    Ideal(IdealGas),
    MonatomicRadiation(MonatomicRadiation),
}

impl EosModel {
    pub fn ideal(c_v: f64) -> Result<Self, EosError> {
        Ok(Self::Ideal(IdealGas::new(c_v)?))
    }

    /// Monatomic gas with the default pressure profile plus radiation.
    pub fn monatomic_radiation(a: f64, p_infinity: f64) -> Result<Self, EosError> {
        Ok(Self::MonatomicRadiation(MonatomicRadiation::with_default_profile(a, p_infinity)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ideal(_) => "ideal",
            Self::MonatomicRadiation(_) => "monatomic_radiation",
        }
    }

    fn inner(&self) -> &dyn Thermodynamics {
        match self {
            Self::Ideal(m) => m,
            Self::MonatomicRadiation(m) => m,
        }
    }
}

impl Thermodynamics for EosModel {
    fn pressure(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        self.inner().pressure(pt)
    }
    fn internal_energy(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        self.inner().internal_energy(pt)
    }
    fn entropy(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        self.inner().entropy(pt)
    }
    fn partials(&self, pt: ThermoPoint) -> Result<Partials, EosError> {
        self.inner().partials(pt)
    }
    fn sound_speed_sq(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        self.inner().sound_speed_sq(pt)
    }
    fn heat_capacity(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        self.inner().heat_capacity(pt)
    }
    fn temperature(&self, rho: f64, e: f64) -> Result<f64, EosError> {
        self.inner().temperature(rho, e)
    }
}

/// Closure selection as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum EosSpec {
    Ideal {
        c_v: f64,
    },
    MonatomicRadiation {
        a: f64,
        p_infinity: f64,
        #[serde(rename = "P_table", default, skip_serializing_if = "Option::is_none")]
        p_table: Option<PathBuf>,
    },
}

impl EosSpec {
    pub fn build(&self) -> Result<EosModel, EosError> {
        match self {
            Self::Ideal { c_v } => EosModel::ideal(*c_v),
            Self::MonatomicRadiation { a, p_infinity, p_table: None } => EosModel::monatomic_radiation(*a, *p_infinity),
            Self::MonatomicRadiation { a, p_infinity, p_table: Some(path) } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| EosError::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
                let profile = PressureProfile::from_table_text(&text)?;
                Ok(EosModel::MonatomicRadiation(MonatomicRadiation::new(*a, *p_infinity, profile)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(rho: f64, theta: f64) -> ThermoPoint {
        ThermoPoint::new(rho, theta).unwrap()
    }

    #[test]
    fn ideal_pressure_energy_entropy() {
        let m = EosModel::ideal(1.5).unwrap();
        assert_eq!(m.pressure(pt(2.0, 3.0)).unwrap(), 6.0);
        assert_eq!(m.internal_energy(pt(7.0, 2.0)).unwrap(), 3.0);
        assert_eq!(m.entropy(pt(1.0, 1.0)).unwrap(), 0.0);
        let s = m.entropy(pt(2.0, 3.0)).unwrap();
        assert!((s - (1.5 * 3f64.ln() - 2f64.ln())).abs() < 1e-15);
        assert!((s - 0.954_77).abs() < 1e-5);
    }

    #[test]
    fn ideal_partials_and_gibbs_energy() {
        let m = EosModel::ideal(1.5).unwrap();
        let d = m.partials(pt(2.0, 3.0)).unwrap();
        assert_eq!(d.dp_drho, 3.0);
        assert_eq!(d.de_dtheta, 1.5);
        assert_eq!(d.de_drho, 0.0);
        assert_eq!(m.gibbs_free_energy(pt(1.0, 1.0)).unwrap(), 2.5);
        let g = m.gibbs_free_energy(pt(2.0, 3.0)).unwrap();
        assert!((g - 4.6357).abs() < 1e-3);
    }

    #[test]
    fn invalid_points_are_rejected() {
        let m = EosModel::ideal(1.5).unwrap();
        let bad = ThermoPoint { rho: -1.0, theta: 1.0 };
        assert!(matches!(m.pressure(bad), Err(EosError::Domain { .. })));
        assert!(ThermoPoint::new(1.0, 0.0).is_err());
        assert!(IdealGas::new(1.0).is_err());
    }

    #[test]
    fn ideal_temperature_round_trip() {
        let m = EosModel::ideal(1.5).unwrap();
        let e = m.internal_energy(pt(0.7, 2.3)).unwrap();
        assert!((m.temperature(0.7, e).unwrap() - 2.3).abs() < 1e-14);
        assert!(m.temperature(1.0, -1.0).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec: EosSpec = serde_json::from_str(r#"{"name":"ideal","c_v":2.5}"#).unwrap();
        assert_eq!(spec, EosSpec::Ideal { c_v: 2.5 });
        let spec: EosSpec = serde_json::from_str(r#"{"name":"monatomic_radiation","a":1,"p_infinity":1}"#).unwrap();
        assert!(matches!(spec.build().unwrap(), EosModel::MonatomicRadiation(_)));
    }
}
