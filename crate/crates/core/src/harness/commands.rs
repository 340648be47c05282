use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{HarnessError, Preset, RunConfig, Scenario};
use crate::eos::{
    check_gibbs, check_stability, growth_constant, structural_report, EosModel, GibbsReport, Region, StabilityReport,
    StructuralReport,
};
use crate::grid::{
    run, run_aligned, time_series, write_snapshot, write_time_series, BoundaryData, Problem, Trajectory,
};
use crate::numerics::fit_slope;
use crate::relative_energy::{
    gronwall_fit, korn_poincare_ratio, kp_sweep, rei_sides, total, Cutoff, GronwallFit, KpSweep, NodalField,
    ReferenceSolution, RelEnergyError,
};
use crate::young_measure::{audit, AuditConfig, Dictionary, DmvAudit, MeasureFault, MeasureSeries};

/// Largest perturbation amplitudes of the relative-energy sweep.
pub const SWEEP_AMPLITUDES: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

const EOS_REGION: (f64, f64) = (0.1, 10.0);
const EOS_SAMPLES: usize = 2000;
const STRUCTURAL_Z_MAX: f64 = 1e7;
const KP_STABILITY: f64 = 0.2;

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, HarnessError> {
    std::fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), HarnessError> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn finish(mut w: BufWriter<File>) -> Result<(), HarnessError> {
    Ok(w.flush()?)
}

impl Scenario {
    /// Whether the constant initial rest state solves the boundary problem.
    fn equilibrium_is_admissible(&self) -> bool {
        let i = &self.config.initial;
        self.problem.boundary == BoundaryData::uniform(i.theta, i.b)
    }

    fn equilibrium_reference(&self) -> Result<ReferenceSolution, HarnessError> {
        if !self.equilibrium_is_admissible() {
            return Err(RelEnergyError::Constraint(
                "the rest state does not match the boundary data, so it is not a solution".into(),
            )
            .into());
        }
        let i = &self.config.initial;
        Ok(ReferenceSolution::equilibrium(&self.problem.grid, i.rho, i.theta, i.b)?)
    }

    fn run_monitored(
        &self,
        problem: &Problem,
        scale: &[f64],
        times: Option<&[f64]>,
    ) -> Result<Trajectory, HarnessError> {
        let init = self.initial_state(scale)?;
        let traj = match times {
            Some(t) => run_aligned(problem, &init, t)?,
            None => run(problem, &init)?,
        };
        self.monitor_all(&traj.frames)?;
        Ok(traj)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub config_hash: String,
    pub preset: Option<Preset>,
    pub steps: usize,
    pub frames: usize,
    pub final_time: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Smallest cell entropy production over all frames.
    pub production_min: f64,
    pub div_b_max: f64,
    pub entropy_audit_worst: f64,
    pub entropy_audit_passed: bool,
    pub files: Vec<String>,
}

/// Full run with diagnostics; writes the time series and snapshots when an
/// output directory is given.
pub fn cmd_simulate(sc: &Scenario, out: Option<&Path>) -> Result<SimulateReport, HarnessError> {
    let problem = &sc.problem;
    let traj = sc.run_monitored(problem, &sc.unit_scale(), None)?;
    let (mut rows, audit) = time_series(problem, &traj, sc.config.c_audit)?;
    if sc.equilibrium_is_admissible() {
        let reference = sc.equilibrium_reference()?;
        for (row, f) in rows.iter_mut().zip(&traj.frames) {
            row.relative_energy = total(problem, f, reference.frame(0, f.t)?)?;
        }
    }
    let mut files = Vec::new();
    if let Some(out) = out {
        if sc.config.diagnostics.time_series {
            let mut w = create(out, "time_series.csv")?;
            write_time_series(&mut w, &rows, &[], &[])?;
            finish(w)?;
            files.push("time_series.csv".to_string());
        }
        if sc.config.diagnostics.snapshots {
            for (k, f) in traj.frames.iter().enumerate() {
                let name = format!("snapshot_{k:05}.txt");
                let mut w = create(out, &name)?;
                write_snapshot(&mut w, &problem.grid, f)?;
                finish(w)?;
                files.push(name);
            }
        }
    }
    let report = SimulateReport {
        config_hash: sc.hash.clone(),
        preset: sc.config.preset,
        steps: traj.steps,
        frames: traj.frames.len(),
        final_time: traj.last().t,
        dt_min: traj.dt_min,
        dt_max: traj.dt_max,
        production_min: rows.iter().map(|r| r.production_min).fold(f64::INFINITY, f64::min),
        div_b_max: rows.iter().map(|r| r.div_b_max).fold(0.0, f64::max),
        entropy_audit_worst: audit.worst,
        entropy_audit_passed: audit.passed,
        files,
    };
    if let Some(out) = out {
        write_json(out, "simulate_report.json", &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// The constant rest state of the configuration.
    Equilibrium,
    /// The same run on a grid refined fourfold, restricted by cell averaging.
    Fine,
}

impl FromStr for ReferenceKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equilibrium" => Ok(Self::Equilibrium),
            "fine" => Ok(Self::Fine),
            _ => Err(HarnessError::Config(format!("unknown reference '{s}' (equilibrium | fine)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelentRow {
    pub t: f64,
    pub h_rel: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Korn-Poincare quotient of the velocity difference; NaN when degenerate.
    pub kp_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub amplitude: f64,
    pub sup_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelentReport {
    pub config_hash: String,
    pub reference: ReferenceKind,
    pub cells: usize,
    pub steps: usize,
    pub h0: f64,
    pub sup_h: f64,
    pub min_margin: f64,
    pub gronwall: GronwallFit,
    pub rows: Vec<RelentRow>,
    pub sweep: Vec<SweepPoint>,
    /// Log-log slope of sup H against amplitude; NaN without a usable sweep.
    pub sweep_slope: f64,
}

const FINE_FACTOR: usize = 4;

impl Scenario {
    /// Relative-energy history of one perturbation scale against the chosen reference.
    fn relent_run(
        &self,
        fine: Option<&Scenario>,
        scale: &[f64],
        times: &[f64],
    ) -> Result<(Trajectory, ReferenceSolution, crate::relative_energy::ReiReport), HarnessError> {
        let traj = self.run_monitored(&self.problem, scale, Some(times))?;
        let reference = match fine {
            None => self.equilibrium_reference()?,
            Some(f) => {
                let ft = f.run_monitored(&f.problem, scale, Some(times))?;
                ReferenceSolution::from_fine(&self.problem.grid, &f.problem, &ft)?
            }
        };
        let cutoff = Cutoff::new(self.config.cutoff_delta)?;
        let rep = rei_sides(&self.problem, &traj.frames, &reference, &cutoff, self.config.rei_c)?;
        Ok((traj, reference, rep))
    }
}

/// Perturbed run against a reference, the Gronwall envelope, and (when
/// `sweep` is set) the amplitude sweep of sup H.
pub fn cmd_relent(
    sc: &Scenario,
    kind: ReferenceKind,
    sweep: bool,
    out: Option<&Path>,
) -> Result<RelentReport, HarnessError> {
    let fine = match kind {
        ReferenceKind::Equilibrium => {
            sc.equilibrium_reference()?;
            None
        }
        ReferenceKind::Fine => Some(sc.refined(FINE_FACTOR)?),
    };
    let mut times = vec![0.0];
    times.extend(sc.output_times());
    let (traj, reference, rep) = sc.relent_run(fine.as_ref(), &sc.unit_scale(), &times[1..])?;
    let grid = &sc.problem.grid;
    let rows: Vec<RelentRow> = rep
        .rows
        .iter()
        .zip(&traj.frames)
        .enumerate()
        .map(|(k, (r, f))| -> Result<RelentRow, HarnessError> {
            let u: Vec<_> = (0..f.len()).map(|i| f.velocity(i)).collect();
            let reference_u = &reference.frame(k, f.t)?.u;
            let kp =
                korn_poincare_ratio(&NodalField::from_cells(grid, &u)?, &NodalField::from_cells(grid, reference_u)?)
                    .map_or(f64::NAN, |q| q.ratio);
            Ok(RelentRow { t: r.t, h_rel: r.h_rel, lhs: r.lhs, rhs: r.rhs, margin: r.margin, kp_ratio: kp })
        })
        .collect::<Result<_, _>>()?;
    let h = rep.h_series();
    let gronwall = gronwall_fit(&rep.times(), &h)?;

    let peak = sc.config.initial.perturbations.iter().map(|p| p.amplitude.abs()).fold(0.0, f64::max);
    let sweep: Vec<SweepPoint> = if sweep && peak > 0.0 {
        SWEEP_AMPLITUDES
            .par_iter()
            .map(|&a| -> Result<SweepPoint, HarnessError> {
                let scale = vec![a / peak; sc.config.initial.perturbations.len()];
                let (_, _, r) = sc.relent_run(fine.as_ref(), &scale, &times[1..])?;
                Ok(SweepPoint { amplitude: a, sup_h: r.h_series().into_iter().fold(0.0, f64::max) })
            })
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let usable: Vec<&SweepPoint> = sweep.iter().filter(|p| p.sup_h > 0.0).collect();
    let sweep_slope = if usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|p| p.amplitude.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|p| p.sup_h.ln()).collect();
        fit_slope(&xs, &ys)
    } else {
        f64::NAN
    };

    let report = RelentReport {
        config_hash: sc.hash.clone(),
        reference: kind,
        cells: grid.cells()[0],
        steps: traj.steps,
        h0: h[0],
        sup_h: h.iter().copied().fold(0.0, f64::max),
        min_margin: rep.min_margin,
        gronwall,
        rows,
        sweep,
        sweep_slope,
    };
    if let Some(out) = out {
        let (mut ts, _) = time_series(&sc.problem, &traj, sc.config.c_audit)?;
        for (row, r) in ts.iter_mut().zip(&report.rows) {
            row.relative_energy = r.h_rel;
        }
        let extra: Vec<Vec<f64>> = vec![
            report.rows.iter().map(|r| r.h_rel).collect(),
            report.rows.iter().map(|r| r.lhs).collect(),
            report.rows.iter().map(|r| r.rhs).collect(),
            report.rows.iter().map(|r| r.margin).collect(),
            report.rows.iter().map(|r| r.kp_ratio).collect(),
        ];
        let mut w = create(out, "relent_series.csv")?;
        write_time_series(&mut w, &ts, &["H_rel", "rei_lhs", "rei_rhs", "rei_margin", "kp_ratio"], &extra)?;
        finish(w)?;
        let mut w = create(out, "relent_sweep.csv")?;
        writeln!(w, "amplitude,sup_H")?;
        for p in &report.sweep {
            writeln!(w, "{:?},{:?}", p.amplitude, p.sup_h)?;
        }
        finish(w)?;
        write_json(out, "relent_report.json", &report)?;
    }
    Ok(report)
}

/// Negative controls for the measure audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditFault {
    /// The solver subtracts the resistive heating instead of adding it.
    FlipHeating,
    MassLoss,
    MomentumKick,
    Monopole,
    EntropyDrain,
    CorruptStrain,
}

impl AuditFault {
    pub const ALL: [AuditFault; 6] = [
        Self::FlipHeating,
        Self::MassLoss,
        Self::MomentumKick,
        Self::Monopole,
        Self::EntropyDrain,
        Self::CorruptStrain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::FlipHeating => "flip-heating",
            Self::MassLoss => "mass-loss",
            Self::MomentumKick => "momentum-kick",
            Self::Monopole => "monopole",
            Self::EntropyDrain => "entropy-drain",
            Self::CorruptStrain => "corrupt-strain",
        }
    }

    /// The identity this fault is built to break.
    pub fn target(self) -> &'static str {
        match self {
            Self::FlipHeating | Self::EntropyDrain => "entropy",
            Self::MassLoss => "continuity",
            Self::MomentumKick => "momentum",
            Self::Monopole => "divergence",
            Self::CorruptStrain => "strain_compatibility",
        }
    }

    fn measure_fault(self) -> Option<MeasureFault> {
        match self {
            Self::FlipHeating => None,
            Self::MassLoss => Some(MeasureFault::MassLoss),
            Self::MomentumKick => Some(MeasureFault::MomentumKick),
            Self::Monopole => Some(MeasureFault::Monopole),
            Self::EntropyDrain => Some(MeasureFault::EntropyDrain),
            Self::CorruptStrain => Some(MeasureFault::CorruptStrain),
        }
    }
}

impl FromStr for AuditFault {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|f| f.name()).collect();
            HarnessError::Config(format!("unknown fault '{s}' ({})", names.join(" | ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmvAuditReport {
    pub config_hash: String,
    pub ensemble: usize,
    pub fault: Option<AuditFault>,
    /// Perturbation scales of each member.
    pub scales: Vec<Vec<f64>>,
    pub audit: DmvAudit,
}

/// Seeded ensemble of perturbed runs, its empirical measure, and the audit
/// of every weak identity.
pub fn cmd_dmv_audit(
    sc: &Scenario,
    ensemble: usize,
    fault: Option<AuditFault>,
    out: Option<&Path>,
) -> Result<DmvAuditReport, HarnessError> {
    if ensemble == 0 {
        return Err(HarnessError::Config("the ensemble needs at least one member".into()));
    }
    let mut problem = sc.problem.clone();
    problem.config.flip_resistive_heating |= fault == Some(AuditFault::FlipHeating);
    let mut rng = ChaCha8Rng::seed_from_u64(sc.config.seed);
    let k = sc.config.initial.perturbations.len();
    let scales: Vec<Vec<f64>> = if ensemble == 1 {
        vec![sc.unit_scale()]
    } else {
        (0..ensemble).map(|_| (0..k).map(|_| rng.gen_range(0.5..1.5)).collect()).collect()
    };
    let times = sc.output_times();
    let members: Vec<Trajectory> =
        scales.par_iter().map(|s| sc.run_monitored(&problem, s, Some(&times))).collect::<Result<_, _>>()?;
    let weights = vec![1.0 / ensemble as f64; ensemble];
    let mut series = MeasureSeries::from_ensemble(&problem, &members, &weights)?;
    if let Some(f) = fault.and_then(AuditFault::measure_fault) {
        series = series.with_fault(f);
    }
    let dict = Dictionary::build(
        &problem.grid,
        &problem.boundary,
        sc.config.diagnostics.dictionary_size,
        problem.config.t_end,
        sc.config.seed,
    )?;
    let cfg = AuditConfig { c_audit: sc.config.c_audit, ..AuditConfig::default() };
    let report = DmvAuditReport {
        config_hash: sc.hash.clone(),
        ensemble,
        fault,
        scales,
        audit: audit(&problem, &series, &dict, &cfg)?,
    };
    if let Some(out) = out {
        write_json(out, "dmv_audit.json", &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EosCheckReport {
    pub config_hash: String,
    pub eos: &'static str,
    pub gibbs: GibbsReport,
    pub stability: StabilityReport,
    /// Absent for closures without the structural hypotheses.
    pub structural: Option<StructuralReport>,
    /// "pass", "not applicable", or "fail: <clause>".
    pub structural_status: String,
    pub growth_constant: f64,
    pub passed: bool,
}

/// Thermodynamic checks of the configured closure on [0.1, 10]^2. Only the
/// closure is built, so structurally broken tables produce a failing report.
pub fn cmd_eos_check(cfg: &RunConfig, out: Option<&Path>) -> Result<EosCheckReport, HarnessError> {
    let eos = cfg.eos.build()?;
    let region = Region::square(EOS_REGION.0, EOS_REGION.1);
    let gibbs = check_gibbs(&eos, region, EOS_SAMPLES)?;
    let stability = check_stability(&eos, region, EOS_SAMPLES)?;
    let growth = growth_constant(&eos, region, EOS_SAMPLES)?;
    let structural = match &eos {
        EosModel::Ideal(_) => None,
        EosModel::MonatomicRadiation(m) => Some(structural_report(m, STRUCTURAL_Z_MAX)?),
    };
    let structural_status = match &structural {
        None => "not applicable".to_string(),
        Some(r) => match r.first_failure() {
            None => "pass".to_string(),
            Some(c) => format!("fail: {}", c.name),
        },
    };
    let report = EosCheckReport {
        config_hash: cfg.content_hash(),
        eos: eos.name(),
        passed: gibbs.passed && stability.passed && structural.as_ref().is_none_or(|r| r.passed()),
        gibbs,
        stability,
        structural,
        structural_status,
        growth_constant: growth,
    };
    if let Some(out) = out {
        write_json(out, "eos_check.json", &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpCheckReport {
    pub config_hash: String,
    pub count: usize,
    pub coarse: KpSweep,
    pub fine: KpSweep,
    /// |max_fine - max_coarse| / max_coarse.
    pub relative_change: f64,
    pub stable: bool,
}

/// Korn-Poincare sweep on the configured grid and on its twofold refinement.
pub fn cmd_kp_check(sc: &Scenario, count: usize, out: Option<&Path>) -> Result<KpCheckReport, HarnessError> {
    if count == 0 {
        return Err(HarnessError::Config("the sweep needs at least one field".into()));
    }
    let grid = &sc.problem.grid;
    let fine_grid = grid.refined(2);
    let seed = sc.config.seed;
    let (coarse, fine) = rayon::join(|| kp_sweep(grid, count, seed), || kp_sweep(&fine_grid, count, seed));
    let (coarse, fine) = (coarse?, fine?);
    let relative_change = (fine.max_ratio - coarse.max_ratio).abs() / coarse.max_ratio;
    let report = KpCheckReport {
        config_hash: sc.hash.clone(),
        count,
        stable: coarse.max_ratio.is_finite() && fine.max_ratio.is_finite() && relative_change < KP_STABILITY,
        coarse,
        fine,
        relative_change,
    };
    if let Some(out) = out {
        write_json(out, "kp_check.json", &report)?;
    }
    Ok(report)
}
