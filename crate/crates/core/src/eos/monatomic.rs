use std::fmt;
use std::sync::Arc;

use super::interp::MonotoneCubic;
use super::{EosError, Partials, ThermoPoint, Thermodynamics};
use crate::numerics::gauss_legendre5;

/// Degeneracy variable Z = rho / theta^{3/2}.
pub fn degeneracy(pt: ThermoPoint) -> f64 {
    pt.rho / (pt.theta * pt.theta.sqrt())
}

type ProfileFn = dyn Fn(f64) -> (f64, f64) + Send + Sync;

/// The monatomic pressure profile P(Z) together with its derivative.
#[derive(Clone)]
pub enum PressureProfile {
    /// P(Z) = Z (1 + k Z)^{2/3} with k = p_infinity^{3/2}.
    Default { k: f64 },
    /// Monotone cubic interpolation of ln P against ln Z, extended by the end
    /// power laws.
    Tabulated(MonotoneCubic),
    /// User closure returning (P(Z), P'(Z)).
    Custom(Arc<ProfileFn>),
}

impl fmt::Debug for PressureProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Default { k } => write!(f, "Default {{ k: {k} }}"),
            Self::Tabulated(t) => write!(f, "Tabulated({} nodes)", t.nodes().len()),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PressureProfile {
    pub fn default_for(p_infinity: f64) -> Self {
        Self::Default { k: p_infinity.powf(1.5) }
    }

    pub fn custom<F: Fn(f64) -> (f64, f64) + Send + Sync + 'static>(f: F) -> Self {
        Self::Custom(Arc::new(f))
    }

    /// Build from (Z, P) pairs with strictly increasing Z > 0 and P > 0.
    pub fn from_samples(z: &[f64], p: &[f64]) -> Result<Self, EosError> {
        let mut lz = Vec::with_capacity(z.len());
        let mut lp = Vec::with_capacity(p.len());
        for (&zi, &pi) in z.iter().zip(p) {
            if zi == 0.0 {
                if pi != 0.0 {
                    return Err(EosError::StructuralViolation {
                        clause: "vacuum_limit".into(),
                        detail: format!("table gives P(0) = {pi}"),
                    });
                }
                continue;
            }
            if !(zi > 0.0) || !(pi > 0.0) {
                return Err(EosError::InvalidParameter(format!("pressure table row ({zi}, {pi}) must be positive")));
            }
            lz.push(zi.ln());
            lp.push(pi.ln());
        }
        Ok(Self::Tabulated(MonotoneCubic::new(lz, lp)?))
    }

    /// Parse two whitespace-separated columns `Z P`; `#` starts a comment.
    pub fn from_table_text(text: &str) -> Result<Self, EosError> {
        let mut z = Vec::new();
        let mut p = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| EosError::InvalidParameter(format!("line {}: cannot parse `{s}`", lineno + 1)))
            };
            if cols.len() != 2 {
                return Err(EosError::InvalidParameter(format!("line {}: expected two columns", lineno + 1)));
            }
            z.push(parse(cols[0])?);
            p.push(parse(cols[1])?);
        }
        Self::from_samples(&z, &p)
    }

    /// (P(Z), P'(Z)).
    pub fn eval(&self, z: f64) -> (f64, f64) {
        match self {
            Self::Default { k } => {
                let w = 1.0 + k * z;
                let c = w.cbrt();
                (z * c * c, c * c + (2.0 / 3.0) * k * z / c)
            }
            Self::Tabulated(t) => {
                if z <= 0.0 {
                    let (x0, y0, a0) = t.first();
                    let slope0 = if a0 > 1.0 {
                        0.0
                    } else if a0 == 1.0 {
                        y0.exp() / x0.exp()
                    } else {
                        f64::INFINITY
                    };
                    return (0.0, slope0);
                }
                let x = z.ln();
                let (x0, y0, a0) = t.first();
                let (x1, y1, a1) = t.last();
                let (lp, slope) = if x < x0 {
                    (y0 + a0 * (x - x0), a0)
                } else if x > x1 {
                    (y1 + a1 * (x - x1), a1)
                } else {
                    t.eval(x)
                };
                let p = lp.exp();
                (p, slope * p / z)
            }
            Self::Custom(f) => f(z),
        }
    }

    /// (5/3 P(Z) - P'(Z) Z) / Z, the quantity that must stay positive.
    pub fn stability_margin(&self, z: f64) -> f64 {
        match self {
            Self::Default { k } => (2.0 / 3.0) / (1.0 + k * z).cbrt(),
            _ => {
                let (p, dp) = self.eval(z);
                (5.0 / 3.0 * p - dp * z) / z
            }
        }
    }
}

const TABLE_NODES: usize = 4096;
const Z_LOW: f64 = 1e-10;
const Z_CUT: f64 = 1e8;

/// The entropy profile S(Z), solution of S'(Z) = -(3/2)(5/3 P - P' Z)/Z^2
/// with S(infinity) = 0, tabulated on a uniform grid in ln Z.
#[derive(Debug, Clone)]
pub struct EntropyTable {
    x0: f64,
    dx: f64,
    interp: MonotoneCubic,
    low_slope: f64,
    high_value: f64,
    high_decay: f64,
}

impl EntropyTable {
    pub fn build(profile: &PressureProfile) -> Result<Self, EosError> {
        Self::build_with(profile, TABLE_NODES)
    }

    /// Tabulate with a given node count (used to check refinement stability).
    pub fn build_with(profile: &PressureProfile, nodes: usize) -> Result<Self, EosError> {
        let x0 = Z_LOW.ln();
        let x1 = Z_CUT.ln();
        let dx = (x1 - x0) / (nodes - 1) as f64;
        let xs: Vec<f64> = (0..nodes).map(|k| x0 + dx * k as f64).collect();
        // dS/d(ln Z) = -(3/2) * margin(Z).
        let rate = |x: f64| 1.5 * profile.stability_margin(x.exp());
        // Tail beyond the cutoff, exact for integrands decaying like t^{-4/3}.
        let tail = 3.0 * rate(x1);
        let mut s = vec![0.0; nodes];
        s[nodes - 1] = tail;
        for k in (0..nodes - 1).rev() {
            let xa = xs[k];
            let xb = if k + 1 == nodes - 1 { x1 } else { xs[k + 1] };
            s[k] = s[k + 1] + gauss_legendre5(rate, xa, xb);
        }
        let slopes: Vec<f64> = xs.iter().map(|&x| -rate(x)).collect();
        if let Some(bad) = s.iter().zip(&xs).find(|(v, _)| !v.is_finite()) {
            return Err(EosError::Tabulation { z: bad.1.exp(), reason: "non-finite entropy".into() });
        }
        let high_value = s[nodes - 1];
        let high_decay = -slopes[nodes - 1] / high_value;
        let low_slope = slopes[0];
        let interp = MonotoneCubic::with_slopes(xs, s, slopes)?;
        Ok(Self { x0, dx, interp, low_slope, high_value, high_decay })
    }

    /// (S(Z), dS/dZ).
    pub fn eval(&self, z: f64) -> Result<(f64, f64), EosError> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(EosError::Tabulation { z, reason: "Z must be positive and finite".into() });
        }
        let x = z.ln();
        let n = self.interp.nodes().len();
        let x_last = self.x0 + self.dx * (n - 1) as f64;
        if x < self.x0 {
            let (_, s0, _) = self.interp.first();
            return Ok((s0 + self.low_slope * (x - self.x0), self.low_slope / z));
        }
        if x > x_last {
            if !(self.high_value > 0.0 && self.high_decay.is_finite() && self.high_decay > 0.0) {
                return Err(EosError::Tabulation {
                    z,
                    reason: "power-law extension beyond the table is not decaying".into(),
                });
            }
            let v = self.high_value * (-(self.high_decay) * (x - x_last)).exp();
            return Ok((v, -self.high_decay * v / z));
        }
        let k = (((x - self.x0) / self.dx) as usize).min(n - 2);
        let (v, dv) = self.interp.eval_in(k, x);
        Ok((v, dv / z))
    }
}

/// Monatomic gas plus radiation: p = theta^{5/2} P(Z) + a theta^2,
/// e = (3/2) theta^{5/2} P(Z) / rho + a theta^2 / rho, s = S(Z) + 2 a theta / rho.
#[derive(Debug, Clone)]
pub struct MonatomicRadiation {
    a: f64,
    p_infinity: f64,
    profile: PressureProfile,
    table: Arc<EntropyTable>,
}

impl MonatomicRadiation {
    pub fn new(a: f64, p_infinity: f64, profile: PressureProfile) -> Result<Self, EosError> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(EosError::InvalidParameter(format!("radiation coefficient must be positive, got {a}")));
        }
        if !(p_infinity > 0.0) || !p_infinity.is_finite() {
            return Err(EosError::InvalidParameter(format!(
                "degenerate-limit coefficient must be positive, got {p_infinity}"
            )));
        }
        let table = Arc::new(EntropyTable::build(&profile)?);
        Ok(Self { a, p_infinity, profile, table })
    }

    pub fn with_default_profile(a: f64, p_infinity: f64) -> Result<Self, EosError> {
        Self::new(a, p_infinity, PressureProfile::default_for(p_infinity))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn p_infinity(&self) -> f64 {
        self.p_infinity
    }

    pub fn profile(&self) -> &PressureProfile {
        &self.profile
    }

    pub fn entropy_table(&self) -> &EntropyTable {
        &self.table
    }

    /// Pressure of the monatomic component alone.
    pub fn monatomic_pressure(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        pt.validate()?;
        let (p, _) = self.profile.eval(degeneracy(pt));
        Ok(pt.theta * pt.theta * pt.theta.sqrt() * p)
    }

    /// Specific internal energy of the monatomic component alone.
    pub fn monatomic_energy(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        Ok(1.5 * self.monatomic_pressure(pt)? / pt.rho)
    }

    /// Closed-form partials in terms of P, P' and S'.
    pub fn analytic_partials(&self, pt: ThermoPoint) -> Result<Partials, EosError> {
        pt.validate()?;
        let (rho, th) = (pt.rho, pt.theta);
        let z = degeneracy(pt);
        let (p, dp) = self.profile.eval(z);
        let sq = th.sqrt();
        let th15 = th * sq;
        let pm = th * th15 * p;
        let dpm_drho = th * dp;
        let dpm_dth = th15 * (2.5 * p - 1.5 * z * dp);
        let ds = -1.5 * self.profile.stability_margin(z) / z;
        Ok(Partials {
            dp_drho: dpm_drho,
            dp_dtheta: dpm_dth + 2.0 * self.a * th,
            de_drho: 1.5 * (dpm_drho / rho - pm / (rho * rho)) - self.a * th * th / (rho * rho),
            de_dtheta: 1.5 * dpm_dth / rho + 2.0 * self.a * th / rho,
            ds_drho: ds / th15 - 2.0 * self.a * th / (rho * rho),
            ds_dtheta: -1.5 * z / th * ds + 2.0 * self.a / rho,
        })
    }
}

impl Thermodynamics for MonatomicRadiation {
    fn pressure(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        Ok(self.monatomic_pressure(pt)? + self.a * pt.theta * pt.theta)
    }

    fn internal_energy(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        Ok(self.monatomic_energy(pt)? + self.a * pt.theta * pt.theta / pt.rho)
    }

    fn entropy(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        pt.validate()?;
        let (s, _) = self.table.eval(degeneracy(pt))?;
        Ok(s + 2.0 * self.a * pt.theta / pt.rho)
    }

    fn sound_speed_sq(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        let d = self.analytic_partials(pt)?;
        Ok(d.dp_drho + pt.theta * d.dp_dtheta * d.dp_dtheta / (pt.rho * pt.rho * d.de_dtheta))
    }

    fn heat_capacity(&self, pt: ThermoPoint) -> Result<f64, EosError> {
        Ok(self.analytic_partials(pt)?.de_dtheta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_margin_matches_closed_form() {
        let p = PressureProfile::default_for(1.0);
        for &z in &[1e-6, 0.1, 1.0, 10.0, 1e5] {
            let (pz, dpz) = p.eval(z);
            let generic = (5.0 / 3.0 * pz - dpz * z) / z;
            assert!((generic - p.stability_margin(z)).abs() < 1e-9 * (1.0 + generic.abs()));
        }
    }

    #[test]
    fn tabulated_profile_reproduces_power_law() {
        let z: Vec<f64> = (0..40).map(|k| 10f64.powf(-4.0 + 0.25 * k as f64)).collect();
        let p: Vec<f64> = z.iter().map(|v| 2.0 * v.powf(1.5)).collect();
        let prof = PressureProfile::from_samples(&z, &p).unwrap();
        let (v, d) = prof.eval(3.3);
        assert!((v - 2.0 * 3.3f64.powf(1.5)).abs() < 1e-9 * v);
        assert!((d - 3.0 * 3.3f64.sqrt()).abs() < 1e-8 * d);
        let (v, _) = prof.eval(1e9);
        assert!((v / (2.0 * 1e9f64.powf(1.5)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn table_text_parsing() {
        let prof = PressureProfile::from_table_text("# Z P\n0 0\n1 1\n2 4\n3 9\n").unwrap();
        assert!((prof.eval(2.0).0 - 4.0).abs() < 1e-12);
        assert!(PressureProfile::from_table_text("1 2 3\n").is_err());
        assert!(PressureProfile::from_table_text("1 x\n").is_err());
    }

    #[test]
    fn entropy_table_is_continuous_at_its_ends() {
        let t = EntropyTable::build(&PressureProfile::default_for(1.0)).unwrap();
        for z in [Z_LOW, Z_CUT] {
            let below = t.eval(z * (1.0 - 1e-12)).unwrap().0;
            let above = t.eval(z * (1.0 + 1e-12)).unwrap().0;
            assert!((below - above).abs() < 1e-10 * below.abs().max(1e-3));
        }
    }
}
