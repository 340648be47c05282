//! Acceptance criteria 1-10, one PASS/FAIL line each. Exits nonzero when any
//! criterion fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mhd_core::eos::{check_structural, EosModel, ThermoPoint, Thermodynamics};
use mhd_core::harness::{
    cmd_dmv_audit, cmd_eos_check, cmd_kp_check, cmd_relent, cmd_simulate, AuditFault, ReferenceKind, RunConfig,
    Scenario,
};
use mhd_core::numerics::observed_orders;
use mhd_core::relative_energy::{density, korn_poincare_ratio, NodalField, RefPoint, RelEnergyError, StatePoint};

// Tolerances, fixed here.
const GIBBS_ANALYTIC: f64 = 1e-12;
const GIBBS_FD: f64 = 1e-5;
const BREGMAN_SAMPLES: usize = 100_000;
const BREGMAN_FLOOR: f64 = 1e-12;
const BREGMAN_DISTANCE: f64 = 1e-6;
const SLOPE: (f64, f64) = (2.0, 0.2);
const ZERO_H: f64 = 1e-10;
const STEPS: usize = 1000;
const C_FIT_BAND: f64 = 0.2;
const ENVELOPE_SLACK: f64 = 1e-9;
const MARGIN_C: f64 = 1e-2;
const FIRST_ORDER: f64 = 0.95;
const DIV_PROJECTION: f64 = 1e-10;
const DIV_CT: f64 = 1e-13;
const KP_BAND: f64 = 0.2;
const KP_FIELDS: usize = 100;

const PRESETS: [&str; 4] = ["bounded_dmv", "constant_coefficients", "perfect_gas", "unconditional"];

fn load(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn with_cells(mut c: RunConfig, n: usize) -> Scenario {
    c.grid.cells = vec![n; c.grid.dim];
    c.scenario().unwrap()
}

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn thermodynamic_consistency() -> Outcome {
    let ideal = cmd_eos_check(&load("perfect_gas"), None).map_err(|e| e.to_string())?;
    let mr = cmd_eos_check(&load("unconditional"), None).map_err(|e| e.to_string())?;
    let model = match load("unconditional").eos.build().map_err(|e| e.to_string())? {
        EosModel::MonatomicRadiation(m) => m,
        EosModel::Ideal(_) => return Err("unconditional config must use the radiation closure".into()),
    };
    let structural = check_structural(&model, 1e7).map_err(|e| e.to_string())?;
    let (ri, rm) = (ideal.gibbs.max_residual(), mr.gibbs.max_residual());
    verdict(
        ri < GIBBS_ANALYTIC
            && rm < GIBBS_FD
            && ideal.stability.passed
            && mr.stability.passed
            && structural.passed()
            && structural.growth_constant.is_finite(),
        format!(
            "gibbs ideal {ri:.2e}, radiation {rm:.2e}; stability {}/{}; structural clauses {}; growth constant {:.3}",
            ideal.stability.passed,
            mr.stability.passed,
            structural.clauses.iter().map(|c| format!("{}={}", c.name, c.passed)).collect::<Vec<_>>().join(" "),
            structural.growth_constant
        ),
    )
}

fn bregman() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut notes = Vec::new();
    let mut ok = true;
    for eos in [EosModel::ideal(1.5).unwrap(), EosModel::monatomic_radiation(1.0, 1.0).unwrap()] {
        let (mut worst, mut near_zero) = (f64::INFINITY, 0usize);
        for k in 0..BREGMAN_SAMPLES {
            let v3 = |rng: &mut ChaCha8Rng| [0; 3].map(|_: i32| rng.gen_range(-1.0..1.0));
            let r = RefPoint {
                r: rng.gen_range(0.1..10.0),
                theta: rng.gen_range(0.1..10.0),
                u: v3(&mut rng),
                h: v3(&mut rng),
            };
            // Every tenth sample sits close to the reference.
            let s = if k % 10 == 0 {
                let eps = 10f64.powf(rng.gen_range(-5.0..-2.0));
                let jitter = |x: f64, rng: &mut ChaCha8Rng| x * (1.0 + eps * rng.gen_range(-1.0..1.0));
                StatePoint {
                    rho: jitter(r.r, &mut rng),
                    theta: jitter(r.theta, &mut rng),
                    u: r.u.map(|x| x + eps * rng.gen_range(-1.0..1.0)),
                    b: r.h.map(|x| x + eps * rng.gen_range(-1.0..1.0)),
                }
            } else {
                StatePoint {
                    rho: rng.gen_range(0.1..10.0),
                    theta: rng.gen_range(0.1..10.0),
                    u: v3(&mut rng),
                    b: v3(&mut rng),
                }
            };
            let h = density(&eos, &s, &r).map_err(|e| e.to_string())?;
            let energy = |rho: f64, theta: f64, u: [f64; 3], b: [f64; 3]| {
                let e = eos.internal_energy(ThermoPoint::new(rho, theta).unwrap()).unwrap();
                rho * e + 0.5 * rho * u.iter().map(|x| x * x).sum::<f64>() + 0.5 * b.iter().map(|x| x * x).sum::<f64>()
            };
            let scale = 1.0 + energy(s.rho, s.theta, s.u, s.b) + energy(r.r, r.theta, r.u, r.h);
            let distance = (s.rho - r.r).abs()
                + (s.theta - r.theta).abs()
                + (0..3).map(|q| (s.u[q] - r.u[q]).abs() + (s.b[q] - r.h[q]).abs()).sum::<f64>();
            worst = worst.min(h / scale);
            if h < -BREGMAN_FLOOR * scale || (distance > BREGMAN_DISTANCE && !(h > 0.0)) {
                ok = false;
            }
            if distance > BREGMAN_DISTANCE && h <= 0.0 {
                near_zero += 1;
            }
        }
        let diag = density(
            &eos,
            &StatePoint { rho: 2.0, theta: 3.0, u: [0.1; 3], b: [0.2; 3] },
            &RefPoint { r: 2.0, theta: 3.0, u: [0.1; 3], h: [0.2; 3] },
        )
        .map_err(|e| e.to_string())?;
        ok &= diag.abs() <= BREGMAN_FLOOR;
        notes.push(format!(
            "{}: min H/scale {worst:.2e}, nonpositive off-diagonal {near_zero}, diagonal {diag:.1e}",
            eos.name()
        ));
    }
    verdict(ok, format!("{BREGMAN_SAMPLES} samples per closure; {}", notes.join("; ")))
}

fn quadratic_coincidence() -> Outcome {
    let sc = with_cells(load("relent_1d"), 64);
    let rep = cmd_relent(&sc, ReferenceKind::Equilibrium, true, None).map_err(|e| e.to_string())?;
    let sups: Vec<String> = rep.sweep.iter().map(|p| format!("{:.0e}->{:.3e}", p.amplitude, p.sup_h)).collect();
    verdict((rep.sweep_slope - SLOPE.0).abs() <= SLOPE.1, format!("slope {:.4} ({})", rep.sweep_slope, sups.join(", ")))
}

fn uniqueness() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for name in PRESETS {
        // Coinciding initial data over at least a thousand steps.
        let mut rest = load(name);
        rest.initial.perturbations.clear();
        rest.solver.t_end = 2.0;
        let r0 =
            cmd_relent(&with_cells(rest, 64), ReferenceKind::Equilibrium, false, None).map_err(|e| e.to_string())?;
        let fits: Vec<_> = [64, 128]
            .into_iter()
            .map(|n| cmd_relent(&with_cells(load(name), n), ReferenceKind::Equilibrium, false, None))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let (c64, c128) = (fits[0].gronwall.c_fit, fits[1].gronwall.c_fit);
        let stable = (c64 - c128).abs() <= C_FIT_BAND * c64.abs().max(c128.abs());
        let envelope = fits
            .iter()
            .all(|f| f.rows.iter().all(|r| r.h_rel <= f.h0 * (f.gronwall.c_fit * r.t).exp() * (1.0 + ENVELOPE_SLACK)));
        let zero = r0.sup_h <= ZERO_H && r0.steps >= STEPS;
        ok &= zero && stable && envelope;
        notes.push(format!(
            "{name}: rest sup H {:.1e} over {} steps, c_fit {c64:.3}/{c128:.3}, H(0) {:.3e}",
            r0.sup_h, r0.steps, fits[0].h0
        ));
    }
    verdict(ok, notes.join("; "))
}

fn relative_energy_inequality() -> Outcome {
    let mut margins = Vec::new();
    for n in [64, 128, 256] {
        let rep = cmd_relent(&with_cells(load("resistive_decay"), n), ReferenceKind::Fine, false, None)
            .map_err(|e| e.to_string())?;
        margins.push((1.0 / n as f64, rep.min_margin));
    }
    let bounded = margins.iter().all(|&(h, m)| m >= -MARGIN_C * h);
    let violations: Vec<f64> = margins.iter().map(|&(_, m)| (-m).max(0.0)).collect();
    let orders = if violations.iter().all(|&v| v > 0.0) { observed_orders(&violations) } else { Vec::new() };
    let shrinking =
        violations.iter().all(|&v| v == 0.0) || (orders.len() == 2 && orders.iter().all(|&p| p >= FIRST_ORDER));
    verdict(
        bounded && shrinking,
        format!(
            "min margins {} (bound -{MARGIN_C} h); violation orders {:?}",
            margins.iter().map(|(_, m)| format!("{m:.3e}")).collect::<Vec<_>>().join(", "),
            orders.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn entropy_dissipation() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let scenarios = [
        "bounded_dmv",
        "constant_coefficients",
        "perfect_gas",
        "unconditional",
        "resistive_decay",
        "relent_1d",
        "dmv_audit",
        "ct_2d",
        "projection_2d",
    ];
    let mut min_prod = f64::INFINITY;
    for name in scenarios {
        let rep = cmd_simulate(&load(name).scenario().map_err(|e| e.to_string())?, None).map_err(|e| e.to_string())?;
        ok &= rep.production_min >= 0.0;
        min_prod = min_prod.min(rep.production_min);
    }
    notes.push(format!("min production over {} scenarios {min_prod:.3e}", scenarios.len()));
    for name in ["bounded_dmv", "unconditional", "resistive_decay"] {
        let worst: Vec<f64> = [64, 128, 256]
            .into_iter()
            .map(|n| cmd_simulate(&with_cells(load(name), n), None).map(|r| r.entropy_audit_worst.abs()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let orders = observed_orders(&worst);
        ok &= orders.iter().all(|&p| p >= FIRST_ORDER);
        notes.push(format!("{name} audit orders {:?}", orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()));
    }
    verdict(ok, notes.join("; "))
}

fn magnetic_constraint() -> Outcome {
    let ct = cmd_simulate(&load("ct_2d").scenario().map_err(|e| e.to_string())?, None).map_err(|e| e.to_string())?;
    let pr =
        cmd_simulate(&load("projection_2d").scenario().map_err(|e| e.to_string())?, None).map_err(|e| e.to_string())?;
    verdict(
        ct.steps >= STEPS
            && pr.steps >= STEPS
            && ct.frames == ct.steps + 1
            && pr.frames == pr.steps + 1
            && ct.div_b_max <= DIV_CT
            && pr.div_b_max <= DIV_PROJECTION,
        format!(
            "constrained transport {:.2e} over {} steps, projection {:.2e} over {} steps",
            ct.div_b_max, ct.steps, pr.div_b_max, pr.steps
        ),
    )
}

fn measure_audit() -> Outcome {
    let sc = with_cells(load("dmv_audit"), 64);
    let rep = cmd_dmv_audit(&sc, 4, None, None).map_err(|e| e.to_string())?;
    let a = &rep.audit;
    let defects_ok = a.defects.iter().all(|d| d.defect >= 0.0);
    let mut controls = Vec::new();
    let mut controls_fail = true;
    for f in AuditFault::ALL {
        let r = cmd_dmv_audit(&sc, 4, Some(f), None).map_err(|e| e.to_string())?;
        let target = r.audit.identity(f.target()).ok_or("missing identity")?;
        controls_fail &= !target.passed;
        controls.push(format!("{}:{}", f.name(), if target.passed { "PASS" } else { "FAIL" }));
    }
    let worst = a.identities.iter().map(|i| i.worst_residual.abs() / i.tolerance).fold(0.0, f64::max);
    verdict(
        a.passed && defects_ok && a.budget_consistent && controls_fail,
        format!(
            "{} identities PASS, worst |residual|/tol {worst:.3}, defects >= 0 {defects_ok}, budget {}; controls {}",
            a.identities.iter().filter(|i| i.passed).count(),
            a.budget_consistent,
            controls.join(" ")
        ),
    )
}

fn korn_poincare() -> Outcome {
    let sc = with_cells(load("relent_1d"), 64);
    let rep = cmd_kp_check(&sc, KP_FIELDS, None).map_err(|e| e.to_string())?;
    let grid = &sc.problem.grid;
    let trace = NodalField::from_fn(grid, |x| [1.0 + x[0], 0.0, 0.0]);
    let zero = NodalField::from_fn(grid, |_| [0.0; 3]);
    let rejected = matches!(korn_poincare_ratio(&trace, &zero), Err(RelEnergyError::Constraint(_)));
    let identical = korn_poincare_ratio(&zero, &zero).map(|r| r.identical).unwrap_or(false);
    verdict(
        rep.stable && rep.relative_change < KP_BAND && rejected && identical,
        format!(
            "max ratio {:.5} (64) vs {:.5} (128), change {:.2e}; trace rejected {rejected}, identical flagged {identical}",
            rep.coarse.max_ratio, rep.fine.max_ratio, rep.relative_change
        ),
    )
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .map(|d| {
            d.map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect()
        })
        .unwrap_or_default();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let everything = |threads: usize, out: PathBuf| -> Result<(Vec<String>, Vec<(String, Vec<u8>)>), String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let mut c = load("dmv_audit");
            c.diagnostics.frames = 10;
            let sc = c.scenario().map_err(|e| e.to_string())?;
            let s = |e: mhd_core::harness::HarnessError| e.to_string();
            let reports = vec![
                serde_json::to_string(&cmd_eos_check(&load("unconditional"), Some(&out.join("eos"))).map_err(s)?)
                    .unwrap(),
                serde_json::to_string(&cmd_simulate(&sc, Some(&out.join("sim"))).map_err(s)?).unwrap(),
                serde_json::to_string(&cmd_relent(&sc, ReferenceKind::Fine, true, Some(&out.join("rel"))).map_err(s)?)
                    .unwrap(),
                serde_json::to_string(&cmd_dmv_audit(&sc, 4, None, Some(&out.join("dmv"))).map_err(s)?).unwrap(),
                serde_json::to_string(&cmd_kp_check(&sc, 20, Some(&out.join("kp"))).map_err(s)?).unwrap(),
            ];
            let files = ["eos", "sim", "rel", "dmv", "kp"].iter().flat_map(|d| listing(&out.join(d))).collect();
            Ok((reports, files))
        })
    };
    let (d1, d4) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = everything(1, d1.path().to_path_buf())?;
    let four = everything(4, d4.path().to_path_buf())?;
    verdict(
        one == four && !one.1.is_empty(),
        format!("5 commands, {} output files, 1 vs 4 threads bit-identical: {}", one.1.len(), one == four),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("thermodynamic consistency", thermodynamic_consistency),
        ("Bregman property", bregman),
        ("quadratic coincidence", quadratic_coincidence),
        ("uniqueness demonstration", uniqueness),
        ("discrete relative energy inequality", relative_energy_inequality),
        ("entropy dissipation", entropy_dissipation),
        ("magnetic constraint", magnetic_constraint),
        ("measure-valued audit", measure_audit),
        ("Korn-Poincare", korn_poincare),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} [{secs:.1}s] {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} [{secs:.1}s] {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
