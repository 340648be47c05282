//! Transport coefficients, Newtonian stress, Fourier heat flux, Lorentz force
//! and the pointwise entropy production rate.
//!
//! Tensors are always 3x3; lower-dimensional runs embed their gradients with
//! zero rows/columns for the inactive directions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eos::ThermoPoint;
use crate::tensor::{cross, frob2, mat_scale, norm2, trace, transpose, Mat3, Vec3, IDENTITY, ZERO3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("state outside the domain: rho = {rho}, theta = {theta}")]
    Domain { rho: f64, theta: f64 },
    #[error("stencil at {index:?} lacks neighbours along axis {axis}")]
    Stencil { index: [usize; 3], axis: usize },
    #[error("invalid transport parameter: {0}")]
    InvalidParameter(String),
}

/// Values of the four transport coefficients at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub mu: f64,
    pub eta: f64,
    pub kappa: f64,
    pub zeta: f64,
}

/// Coefficients tabulated on a (rho, theta) lattice, interpolated bilinearly
/// and clamped at the lattice edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    rho: Vec<f64>,
    theta: Vec<f64>,
    /// Row-major over (rho, theta).
    values: Vec<Coefficients>,
}

impl CoefficientTable {
    pub fn new(rho: Vec<f64>, theta: Vec<f64>, values: Vec<Coefficients>) -> Result<Self, ConstitutiveError> {
        let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&rho) || !increasing(&theta) || values.len() != rho.len() * theta.len() {
            return Err(ConstitutiveError::InvalidParameter("malformed coefficient table".into()));
        }
        if values.iter().any(|c| !(c.mu > 0.0 && c.eta >= 0.0 && c.kappa > 0.0 && c.zeta > 0.0)) {
            return Err(ConstitutiveError::InvalidParameter("table coefficients must be admissible".into()));
        }
        Ok(Self { rho, theta, values })
    }

    fn locate(axis: &[f64], x: f64) -> (usize, f64) {
        let n = axis.len();
        if x <= axis[0] {
            return (0, 0.0);
        }
        if x >= axis[n - 1] {
            return (n - 2, 1.0);
        }
        let k = axis.partition_point(|&v| v <= x) - 1;
        (k, (x - axis[k]) / (axis[k + 1] - axis[k]))
    }

    pub fn eval(&self, rho: f64, theta: f64) -> Coefficients {
        let (i, a) = Self::locate(&self.rho, rho);
        let (j, b) = Self::locate(&self.theta, theta);
        let nt = self.theta.len();
        let at = |i: usize, j: usize| self.values[i * nt + j];
        let mix = |f: fn(&Coefficients) -> f64| {
            (1.0 - a) * (1.0 - b) * f(&at(i, j))
                + a * (1.0 - b) * f(&at(i + 1, j))
                + (1.0 - a) * b * f(&at(i, j + 1))
                + a * b * f(&at(i + 1, j + 1))
        };
        Coefficients { mu: mix(|c| c.mu), eta: mix(|c| c.eta), kappa: mix(|c| c.kappa), zeta: mix(|c| c.zeta) }
    }
}

/// Affine-in-temperature transport: mu = mu0 + mu1 theta, and likewise for
/// eta, kappa, zeta. An optional table replaces the affine law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportModel {
    #[serde(default)]
    pub mu0: f64,
    #[serde(default)]
    pub mu1: f64,
    #[serde(default)]
    pub eta0: f64,
    #[serde(default)]
    pub eta1: f64,
    #[serde(default)]
    pub kappa0: f64,
    #[serde(default)]
    pub kappa1: f64,
    #[serde(default)]
    pub zeta0: f64,
    #[serde(default)]
    pub zeta1: f64,
    #[serde(skip)]
    pub table: Option<Arc<CoefficientTable>>,
}

impl TransportModel {
    /// Temperature-independent coefficients.
    pub fn constant(mu: f64, eta: f64, kappa: f64, zeta: f64) -> Self {
        Self {
            mu0: mu,
            mu1: 0.0,
            eta0: eta,
            eta1: 0.0,
            kappa0: kappa,
            kappa1: 0.0,
            zeta0: zeta,
            zeta1: 0.0,
            table: None,
        }
    }

    pub fn with_table(mut self, table: CoefficientTable) -> Self {
        self.table = Some(Arc::new(table));
        self
    }

    /// Nonnegative finite parameters with mu, kappa, zeta positive for theta > 0.
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        let all = [self.mu0, self.mu1, self.eta0, self.eta1, self.kappa0, self.kappa1, self.zeta0, self.zeta1];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ConstitutiveError::InvalidParameter(
                "transport parameters must be finite and nonnegative".into(),
            ));
        }
        let positive = |a: f64, b: f64| a > 0.0 || b > 0.0;
        if !positive(self.mu0, self.mu1) {
            return Err(ConstitutiveError::InvalidParameter("shear viscosity must be positive".into()));
        }
        if !positive(self.kappa0, self.kappa1) {
            return Err(ConstitutiveError::InvalidParameter("heat conductivity must be positive".into()));
        }
        if !positive(self.zeta0, self.zeta1) {
            return Err(ConstitutiveError::InvalidParameter("resistivity must be positive".into()));
        }
        Ok(())
    }

    /// True when every coefficient is independent of temperature.
    pub fn is_constant(&self) -> bool {
        self.table.is_none() && self.mu1 == 0.0 && self.eta1 == 0.0 && self.kappa1 == 0.0 && self.zeta1 == 0.0
    }

    /// Coefficients at (rho, theta); no domain check.
    pub fn at(&self, rho: f64, theta: f64) -> Coefficients {
        if let Some(t) = &self.table {
            return t.eval(rho, theta);
        }
        Coefficients {
            mu: self.mu0 + self.mu1 * theta,
            eta: self.eta0 + self.eta1 * theta,
            kappa: self.kappa0 + self.kappa1 * theta,
            zeta: self.zeta0 + self.zeta1 * theta,
        }
    }

    pub fn coefficients(&self, pt: ThermoPoint) -> Result<Coefficients, ConstitutiveError> {
        check(pt)?;
        Ok(self.at(pt.rho, pt.theta))
    }
}

fn check(pt: ThermoPoint) -> Result<(), ConstitutiveError> {
    pt.validate().map_err(|_| ConstitutiveError::Domain { rho: pt.rho, theta: pt.theta })
}

/// Symmetric part (G + G^T)/2.
pub fn sym_grad(g: &Mat3) -> Mat3 {
    let t = transpose(g);
    let mut r = *g;
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = 0.5 * (g[i][j] + t[i][j]);
        }
    }
    r
}

/// D - (1/3) tr(D) I, with the factor 1/3 in every dimension.
pub fn traceless(d: &Mat3) -> Mat3 {
    let third = trace(d) / 3.0;
    let mut r = *d;
    for (i, row) in r.iter_mut().enumerate() {
        row[i] -= third;
    }
    r
}

/// mu (2D - (2/3) tr D I) + (eta/3) tr D I.
pub fn stress_from(c: &Coefficients, d: &Mat3) -> Mat3 {
    let tr = trace(d);
    let mut s = mat_scale(2.0 * c.mu, d);
    let diag = -(2.0 / 3.0) * c.mu * tr + c.eta / 3.0 * tr;
    for (i, row) in s.iter_mut().enumerate() {
        row[i] += diag * IDENTITY[i][i];
    }
    s
}

pub fn viscous_stress(tm: &TransportModel, pt: ThermoPoint, d: &Mat3) -> Result<Mat3, ConstitutiveError> {
    Ok(stress_from(&tm.coefficients(pt)?, d))
}

/// S(D):D written as a sum of squares, 2 mu |T[D]|^2 + (eta/3)(tr D)^2, so it
/// is nonnegative in floating point as well.
pub fn viscous_dissipation(c: &Coefficients, d: &Mat3) -> f64 {
    let tr = trace(d);
    2.0 * c.mu * frob2(&traceless(d)) + c.eta / 3.0 * tr * tr
}

/// q = -kappa grad(theta).
pub fn heat_flux(tm: &TransportModel, pt: ThermoPoint, grad_theta: Vec3) -> Result<Vec3, ConstitutiveError> {
    let k = tm.coefficients(pt)?.kappa;
    Ok([-k * grad_theta[0], -k * grad_theta[1], -k * grad_theta[2]])
}

/// Pointwise gradients entering the entropy production.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorPoint {
    pub d: Mat3,
    pub grad_theta: Vec3,
    pub curl_b: Vec3,
}

/// Production terms before the division by theta.
pub fn dissipation_terms(c: &Coefficients, theta: f64, t: &TensorPoint) -> (f64, f64, f64) {
    (viscous_dissipation(c, &t.d), c.kappa * norm2(t.grad_theta) / theta, c.zeta * norm2(t.curl_b))
}

/// (1/theta)(S:D + kappa |grad theta|^2 / theta + zeta |curl B|^2).
pub fn entropy_production(tm: &TransportModel, pt: ThermoPoint, t: &TensorPoint) -> Result<f64, ConstitutiveError> {
    let c = tm.coefficients(pt)?;
    let (v, h, r) = dissipation_terms(&c, pt.theta, t);
    Ok((v + h + r) / pt.theta)
}

/// A vector field sampled on a regular lattice (axes with one point are
/// treated as invariant directions).
#[derive(Debug, Clone, Copy)]
pub struct SampledField<'a> {
    pub shape: [usize; 3],
    pub spacing: [f64; 3],
    pub values: &'a [Vec3],
}

impl SampledField<'_> {
    fn at(&self, i: [usize; 3]) -> Vec3 {
        self.values[(i[2] * self.shape[1] + i[1]) * self.shape[0] + i[0]]
    }

    /// Centered-difference gradient g[c][axis] = d v_c / d x_axis.
    pub fn gradient(&self, idx: [usize; 3]) -> Result<Mat3, ConstitutiveError> {
        let mut g = [[0.0; 3]; 3];
        for axis in 0..3 {
            if self.shape[axis] == 1 {
                continue;
            }
            if idx[axis] == 0 || idx[axis] + 1 >= self.shape[axis] {
                return Err(ConstitutiveError::Stencil { index: idx, axis });
            }
            let mut lo = idx;
            let mut hi = idx;
            lo[axis] -= 1;
            hi[axis] += 1;
            let (a, b) = (self.at(lo), self.at(hi));
            for (c, row) in g.iter_mut().enumerate() {
                row[axis] = (b[c] - a[c]) / (2.0 * self.spacing[axis]);
            }
        }
        Ok(g)
    }

    pub fn curl(&self, idx: [usize; 3]) -> Result<Vec3, ConstitutiveError> {
        Ok(crate::tensor::curl_from_gradient(&self.gradient(idx)?))
    }
}

/// curl B x B with the centered discrete curl.
pub fn lorentz_force(field: &SampledField<'_>, idx: [usize; 3]) -> Result<Vec3, ConstitutiveError> {
    if field.values.len() != field.shape.iter().product::<usize>() {
        return Err(ConstitutiveError::Stencil { index: idx, axis: 0 });
    }
    let j = field.curl(idx)?;
    Ok(if j == ZERO3 { ZERO3 } else { cross(j, field.at(idx)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ddot;

    fn pt(rho: f64, theta: f64) -> ThermoPoint {
        ThermoPoint::new(rho, theta).unwrap()
    }

    #[test]
    fn sym_grad_and_traceless_examples() {
        let g = [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let d = sym_grad(&g);
        assert_eq!(d[0][1], 0.5);
        assert_eq!(d[1][0], 0.5);
        assert_eq!(sym_grad(&IDENTITY), IDENTITY);
        let t = traceless(&[[3.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(t, [[2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
        assert_eq!(traceless(&IDENTITY), [[0.0; 3]; 3]);
    }

    #[test]
    fn stress_examples() {
        let tm = TransportModel::constant(1.0, 0.7, 1.0, 1.0);
        let s = viscous_stress(&tm, pt(1.0, 1.0), &IDENTITY).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.7 } else { 0.0 };
                assert!((s[i][j] - expect).abs() < 1e-15);
            }
        }
        let tm = TransportModel { mu1: 1.0, ..TransportModel::constant(1.0, 0.0, 1.0, 1.0) };
        let d = [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let s = viscous_stress(&tm, pt(1.0, 1.0), &d).unwrap();
        assert!((s[0][0] - 8.0 / 3.0).abs() < 1e-14);
        assert!((s[1][1] + 4.0 / 3.0).abs() < 1e-14);
        assert!((s[2][2] + 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn dissipation_matches_contraction() {
        let c = Coefficients { mu: 1.3, eta: 0.4, kappa: 1.0, zeta: 1.0 };
        let d = sym_grad(&[[0.3, -1.0, 2.0], [0.5, 1.1, 0.0], [0.2, 0.7, -0.4]]);
        let s = stress_from(&c, &d);
        assert!((ddot(&s, &d) - viscous_dissipation(&c, &d)).abs() < 1e-13);
    }

    #[test]
    fn heat_flux_examples() {
        let tm = TransportModel { kappa1: 1.0, ..TransportModel::constant(1.0, 0.0, 1.0, 1.0) };
        assert_eq!(heat_flux(&tm, pt(1.0, 3.0), [0.0, 1.0, 0.0]).unwrap(), [0.0, -4.0, 0.0]);
        let tm = TransportModel::constant(1.0, 0.0, 2.0, 1.0);
        assert_eq!(heat_flux(&tm, pt(1.0, 3.0), [1.0, 0.0, 0.0]).unwrap(), [-2.0, 0.0, 0.0]);
        assert!(heat_flux(&tm, ThermoPoint { rho: 1.0, theta: -1.0 }, ZERO3).is_err());
    }

    #[test]
    fn entropy_production_resistive_example() {
        let tm = TransportModel::constant(1.0, 0.0, 1.0, 1.0);
        let t = TensorPoint { d: [[0.0; 3]; 3], grad_theta: ZERO3, curl_b: [1.0, 0.0, 0.0] };
        assert_eq!(entropy_production(&tm, pt(1.0, 1.0), &t).unwrap(), 1.0);
    }

    #[test]
    fn lorentz_force_linear_field() {
        let h = 0.1;
        let values: Vec<Vec3> = (0..5).map(|i| [0.0, i as f64 * h, 0.0]).collect();
        let f = SampledField { shape: [5, 1, 1], spacing: [h, 1.0, 1.0], values: &values };
        let force = lorentz_force(&f, [2, 0, 0]).unwrap();
        assert!((force[0] + 0.2).abs() < 1e-14);
        assert_eq!(force[1], 0.0);
        assert!(matches!(lorentz_force(&f, [0, 0, 0]), Err(ConstitutiveError::Stencil { .. })));
    }

    #[test]
    fn table_overrides_affine_law() {
        let c = Coefficients { mu: 2.0, eta: 0.0, kappa: 3.0, zeta: 4.0 };
        let table = CoefficientTable::new(vec![0.5, 2.0], vec![0.5, 2.0], vec![c; 4]).unwrap();
        let tm = TransportModel::constant(1.0, 0.0, 1.0, 1.0).with_table(table);
        let got = tm.at(1.3, 0.9);
        assert!((got.mu - 2.0).abs() < 1e-14 && (got.kappa - 3.0).abs() < 1e-14);
        assert!((got.zeta - 4.0).abs() < 1e-14 && got.eta == 0.0);
        assert!(!tm.is_constant());
    }
}
