use mhd_core::eos::{
    check_gibbs, check_stability, check_structural, growth_constant, structural_report, EntropyTable, EosError,
    EosModel, MonatomicRadiation, PressureProfile, Region, ThermoPoint, Thermodynamics,
};
use proptest::prelude::*;

/// Closed-form antiderivative of (1+t)^{-1/3}/t from Z to infinity, derived
/// with the substitution w = (1+t)^{1/3}.
fn entropy_oracle(z: f64) -> f64 {
    let w = (1.0 + z).cbrt();
    let r3 = 3f64.sqrt();
    // ln(w - 1) written via ln(z) - ln(w^2 + w + 1) to stay accurate for small z.
    let ln_w_minus_1 = z.ln() - (w * w + w + 1.0).ln();
    r3 * std::f64::consts::PI / 2.0 - ln_w_minus_1 + 0.5 * (w * w + w + 1.0).ln() - r3 * ((2.0 * w + 1.0) / r3).atan()
}

fn default_pressure(z: f64) -> f64 {
    z * (1.0 + z).powf(2.0 / 3.0)
}

fn mr() -> EosModel {
    EosModel::monatomic_radiation(1.0, 1.0).unwrap()
}

fn pt(rho: f64, theta: f64) -> ThermoPoint {
    ThermoPoint::new(rho, theta).unwrap()
}

#[test]
fn monatomic_pressure_and_energy_at_unit_state() {
    let m = mr();
    let p = m.pressure(pt(1.0, 1.0)).unwrap();
    assert!((p - (2f64.powf(2.0 / 3.0) + 1.0)).abs() < 1e-14);
    assert!((p - 2.5874).abs() < 1e-4);
    let e = m.internal_energy(pt(1.0, 1.0)).unwrap();
    assert!((e - (1.5 * default_pressure(1.0) + 1.0)).abs() < 1e-14);
    assert!((e - 3.3811).abs() < 1e-4);
}

#[test]
fn pressure_tends_to_radiation_part_in_vacuum() {
    let m = mr();
    let p = m.pressure(pt(1e-12, 1.0)).unwrap();
    assert!((p - 1.0).abs() < 1e-11);
}

#[test]
fn monatomic_energy_pressure_identity() {
    let m = match mr() {
        EosModel::MonatomicRadiation(m) => m,
        _ => unreachable!(),
    };
    let region = Region::square(0.01, 100.0);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let q = region.sample(k);
        let pm = m.monatomic_pressure(q).unwrap();
        let em = m.monatomic_energy(q).unwrap();
        worst = worst.max((pm - 2.0 / 3.0 * q.rho * em).abs() / pm);
    }
    assert!(worst < 1e-12, "worst relative residual {worst}");
}

#[test]
fn entropy_matches_closed_form() {
    let m = mr();
    for &z in &[1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3, 1e6, 1e9] {
        // Choose theta = 1 so Z = rho, and strip the radiation part.
        let s = m.entropy(pt(z, 1.0)).unwrap() - 2.0 / z;
        let oracle = entropy_oracle(z);
        assert!((s - oracle).abs() < 1e-8 * oracle.abs().max(1.0), "Z = {z}: {s} vs {oracle}");
    }
    let s6 = entropy_oracle(1e6);
    assert!(s6 > 0.0 && s6 < 0.031);
}

#[test]
fn entropy_profile_positive_and_decreasing() {
    let t = EntropyTable::build(&PressureProfile::default_for(1.0)).unwrap();
    let mut prev = f64::INFINITY;
    for k in 0..400 {
        let z = 10f64.powf(-8.0 + 17.0 * k as f64 / 399.0);
        let (s, ds) = t.eval(z).unwrap();
        assert!(s > 0.0 && s < prev && ds < 0.0);
        prev = s;
    }
}

#[test]
fn table_refinement_changes_entropy_little() {
    let prof = PressureProfile::default_for(1.0);
    let coarse = EntropyTable::build_with(&prof, 4096).unwrap();
    let fine = EntropyTable::build_with(&prof, 8191).unwrap();
    for k in 0..300 {
        let z = 10f64.powf(-9.0 + 16.5 * k as f64 / 299.0);
        let a = coarse.eval(z).unwrap().0;
        let b = fine.eval(z).unwrap().0;
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn monatomic_partials_match_closed_form() {
    let m = mr();
    let d = m.partials(pt(1.0, 1.0)).unwrap();
    // p = theta^{5/2} P(rho/theta^{3/2}) + theta^2, so dp/drho = theta P'(Z).
    let dp = (1.0f64 + 1.0).powf(2.0 / 3.0) + 2.0 / 3.0 * (2.0f64).powf(-1.0 / 3.0);
    assert!((d.dp_drho - dp).abs() < 1e-6 * dp);
    // de/dtheta at (1, 1): (3/2)[(5/2) P - (3/2) P'] + 2.
    let de = 1.5 * (2.5 * default_pressure(1.0) - 1.5 * dp) + 2.0;
    assert!((d.de_dtheta - de).abs() < 1e-6 * de);
}

#[test]
fn gibbs_residuals_ideal_and_monatomic() {
    let ideal = EosModel::ideal(1.5).unwrap();
    let r = check_gibbs(&ideal, Region::square(1.0, 2.0), 100).unwrap();
    assert!(r.max_residual() < 1e-14 && r.passed);
    let r = check_gibbs(&mr(), Region::square(0.5, 2.0), 100).unwrap();
    assert!(r.max_residual() < 1e-5 && r.passed, "{r:?}");
}

struct DoubledEnergy(EosModel);

impl Thermodynamics for DoubledEnergy {
    fn pressure(&self, p: ThermoPoint) -> Result<f64, EosError> {
        self.0.pressure(p)
    }
    fn internal_energy(&self, p: ThermoPoint) -> Result<f64, EosError> {
        Ok(2.0 * self.0.internal_energy(p)?)
    }
    fn entropy(&self, p: ThermoPoint) -> Result<f64, EosError> {
        self.0.entropy(p)
    }
}

struct NegativePressure;

impl Thermodynamics for NegativePressure {
    fn pressure(&self, p: ThermoPoint) -> Result<f64, EosError> {
        Ok(-p.rho * p.theta)
    }
    fn internal_energy(&self, p: ThermoPoint) -> Result<f64, EosError> {
        Ok(1.5 * p.theta)
    }
    fn entropy(&self, p: ThermoPoint) -> Result<f64, EosError> {
        Ok(1.5 * p.theta.ln() + p.rho.ln())
    }
}

#[test]
fn corrupted_energy_fails_gibbs() {
    let r = check_gibbs(&DoubledEnergy(EosModel::ideal(1.5).unwrap()), Region::square(1.0, 2.0), 50).unwrap();
    assert!(r.max_residual() > 0.1);
    assert!(!r.passed);
}

#[test]
fn stability_checks() {
    for m in [EosModel::ideal(1.5).unwrap(), mr()] {
        assert!(check_stability(&m, Region::square(0.1, 10.0), 200).unwrap().passed);
    }
    let r = check_stability(&NegativePressure, Region::square(0.5, 2.0), 40).unwrap();
    assert!(!r.passed);
    assert_eq!(r.violations, 40);
    assert!(r.first_violation.is_some());
}

#[test]
fn structural_checks_for_default_and_negative_controls() {
    let m = match mr() {
        EosModel::MonatomicRadiation(m) => m,
        _ => unreachable!(),
    };
    let r = check_structural(&m, 1e7).unwrap();
    assert!(r.passed() && r.growth_constant.is_finite());
    for z in [1e-3, 1.0, 1e3] {
        let margin = m.profile().stability_margin(z);
        assert!((margin - 2.0 / 3.0 * (1.0 + z).powf(-1.0 / 3.0)).abs() < 1e-14);
    }

    let linear = MonatomicRadiation::new(1.0, 1.0, PressureProfile::custom(|z| (z, 1.0))).unwrap();
    let r = structural_report(&linear, 1e7).unwrap();
    assert_eq!(r.first_failure().unwrap().name, "degenerate_limit");
    assert!(matches!(
        check_structural(&linear, 1e7),
        Err(EosError::StructuralViolation { clause, .. }) if clause == "degenerate_limit"
    ));

    let quadratic = MonatomicRadiation::new(1.0, 1.0, PressureProfile::custom(|z| (z * z, 2.0 * z))).unwrap();
    let r = structural_report(&quadratic, 1e7).unwrap();
    let margin = r.clauses.iter().find(|c| c.name == "stability_margin").unwrap();
    assert!(!margin.passed);
}

#[test]
fn growth_constant_of_ideal_gas() {
    let c = growth_constant(&EosModel::ideal(1.5).unwrap(), Region::square(1e-3, 1e3), 500).unwrap();
    assert!(c.is_finite() && c <= 1.0 / 1.5 + 1e-12);
}

#[test]
fn gibbs_free_energy_values() {
    let m = EosModel::ideal(1.5).unwrap();
    assert_eq!(m.gibbs_free_energy(pt(1.0, 1.0)).unwrap(), 2.5);
    let s = 1.5 * 3f64.ln() - 2f64.ln();
    let expect = 4.5 - 3.0 * s + 3.0;
    assert!((m.gibbs_free_energy(pt(2.0, 3.0)).unwrap() - expect).abs() < 1e-14);
}

#[test]
fn finite_difference_stencil_outside_domain() {
    let m = mr();
    assert!(matches!(m.partials(pt(1e-7, 1.0)), Err(EosError::Numerical(_))));
}

proptest! {
    #[test]
    fn monatomic_temperature_round_trip(rho in 0.01f64..100.0, theta in 0.01f64..100.0) {
        let m = mr();
        let e = m.internal_energy(pt(rho, theta)).unwrap();
        let back = m.temperature(rho, e).unwrap();
        prop_assert!((back - theta).abs() < 1e-11 * theta);
    }

    #[test]
    fn stability_holds_for_shipped_models(rho in 0.1f64..10.0, theta in 0.1f64..10.0) {
        for m in [EosModel::ideal(1.5).unwrap(), mr()] {
            let d = m.partials(pt(rho, theta)).unwrap();
            prop_assert!(d.dp_drho > 0.0 && d.de_dtheta > 0.0);
        }
    }

    #[test]
    fn values_continuous_across_table_nodes(k in 1usize..4000) {
        // Table nodes sit on a uniform ln Z grid between 1e-10 and 1e8.
        let x0 = 1e-10f64.ln();
        let dx = (1e8f64.ln() - x0) / 4095.0;
        let z = (x0 + dx * k as f64).exp();
        let m = mr();
        let a = m.entropy(pt(z * (1.0 - 1e-13), 1.0)).unwrap();
        let b = m.entropy(pt(z * (1.0 + 1e-13), 1.0)).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }
}
