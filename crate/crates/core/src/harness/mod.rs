//! Run configuration, scenario presets with their hypothesis monitors, and
//! the experiment drivers behind the command-line front end.

mod commands;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constitutive::{ConstitutiveError, TransportModel};
use crate::eos::{check_gibbs, check_stability, growth_constant, EosError, EosModel, EosSpec, Region, Thermodynamics};
use crate::grid::{
    make_equilibrium, project_div_b, BoundaryData, DivControl, FaceTags, FluidState, Grid, MagneticBc, Primitive,
    Problem, SolverConfig, SolverError, ThermalBc,
};
use crate::relative_energy::RelEnergyError;
use crate::tensor::Vec3;
use crate::young_measure::YoungMeasureError;

pub use commands::{
    cmd_dmv_audit, cmd_eos_check, cmd_kp_check, cmd_relent, cmd_simulate, AuditFault, DmvAuditReport, EosCheckReport,
    KpCheckReport, ReferenceKind, RelentReport, RelentRow, SimulateReport, SweepPoint, SWEEP_AMPLITUDES,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A scenario hypothesis failed, either up front or during the run.
    #[error("{hypothesis}: {detail}")]
    Hypothesis { hypothesis: &'static str, detail: String },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    RelativeEnergy(#[from] RelEnergyError),
    #[error(transparent)]
    YoungMeasure(#[from] YoungMeasureError),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        Self::Config(e.to_string())
    }
}

/// Box geometry. `faces` holds one entry per axis, or a single entry used
/// for every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub cells: Vec<usize>,
    #[serde(default)]
    pub extent: Option<Vec<f64>>,
    pub faces: Vec<[FaceTags; 2]>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, HarnessError> {
        let extent = self.extent.clone().unwrap_or_else(|| vec![1.0; self.dim]);
        let mut faces = [[FaceTags::new(ThermalBc::Neumann, MagneticBc::Tangential); 2]; 3];
        match self.faces.len() {
            1 => faces = [self.faces[0]; 3],
            n if n == self.dim => faces[..n].copy_from_slice(&self.faces),
            n => return Err(HarnessError::Config(format!("{n} face entries for a {}-dimensional grid", self.dim))),
        }
        Ok(Grid::new(self.dim, &self.cells, &extent, faces)?)
    }

    /// The same box with every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self { cells: self.cells.iter().map(|n| n * factor).collect(), ..self.clone() }
    }
}

/// Boundary data; `theta_b` holds one pair per axis or a single pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub theta_b: Vec<[f64; 2]>,
    pub b_b: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Field increment derived from a stream function, hence divergence free.
    SolenoidalB,
    /// Polynomial bubble in the first velocity component.
    VelocityBump,
    /// Relative temperature bubble.
    TemperatureBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub amplitude: f64,
}

/// A constant rest state plus perturbations that vanish with their first
/// derivatives on the walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub rho: f64,
    pub theta: f64,
    #[serde(default)]
    pub b: Vec3,
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSpec {
    pub time_series: bool,
    pub snapshots: bool,
    /// Equally spaced output frames for relative-energy and audit runs.
    pub frames: usize,
    /// Members per identity in the audit dictionary.
    pub dictionary_size: usize,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self { time_series: true, snapshots: true, frames: 20, dictionary_size: 20 }
    }
}

/// State bounds watched by the presets that need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorBounds {
    pub rho: [f64; 2],
    pub theta: [f64; 2],
    pub u_max: f64,
    pub s_max: f64,
}

impl Default for MonitorBounds {
    fn default() -> Self {
        Self { rho: [0.1, 10.0], theta: [0.1, 10.0], u_max: 10.0, s_max: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    BoundedDmv,
    ConstantCoefficients,
    PerfectGas,
    Unconditional,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Self::BoundedDmv, Self::ConstantCoefficients, Self::PerfectGas, Self::Unconditional];

    pub fn name(self) -> &'static str {
        match self {
            Self::BoundedDmv => "bounded-dmv",
            Self::ConstantCoefficients => "constant-coefficients",
            Self::PerfectGas => "perfect-gas",
            Self::Unconditional => "unconditional",
        }
    }
}

fn default_delta() -> f64 {
    0.05
}

fn default_ten() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    pub grid: GridSpec,
    pub eos: EosSpec,
    pub transport: TransportModel,
    /// Defaults to the data under which the initial rest state is an equilibrium.
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    pub initial: InitialSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub monitor: MonitorBounds,
    #[serde(default = "default_delta")]
    pub cutoff_delta: f64,
    #[serde(default = "default_ten")]
    pub rei_c: f64,
    #[serde(default = "default_ten")]
    pub c_audit: f64,
    /// Not part of the content hash.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

/// A validated configuration with its built components.
#[derive(Clone)]
pub struct Scenario {
    pub config: RunConfig,
    pub eos: Arc<EosModel>,
    pub problem: Problem,
    pub hash: String,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario").field("config", &self.config).field("hash", &self.hash).finish()
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Git-style blob hash (SHA-256) of the canonical JSON, output directory excluded.
    pub fn content_hash(&self) -> String {
        let body = serde_json::to_string(&Self { out: None, ..self.clone() }).expect("configuration serialises");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn boundary_data(&self, grid: &Grid) -> Result<BoundaryData, HarnessError> {
        let Some(spec) = &self.boundary else {
            return Ok(BoundaryData::uniform(self.initial.theta, self.initial.b));
        };
        let mut theta_b = [[self.initial.theta; 2]; 3];
        match spec.theta_b.len() {
            1 => theta_b = [spec.theta_b[0]; 3],
            n if n == grid.dim() => theta_b[..n].copy_from_slice(&spec.theta_b),
            n => {
                return Err(HarnessError::Config(format!(
                    "{n} boundary temperature pairs for dimension {}",
                    grid.dim()
                )))
            }
        }
        let bd = BoundaryData { theta_b, b_b: spec.b_b };
        bd.validate(grid)?;
        Ok(bd)
    }

    /// Validate every component and build the problem; nothing is computed
    /// before this succeeds.
    pub fn scenario(&self) -> Result<Scenario, HarnessError> {
        let grid = self.grid.build()?;
        let eos = Arc::new(self.eos.build()?);
        self.transport.validate()?;
        let boundary = self.boundary_data(&grid)?;
        let i = &self.initial;
        if !(i.rho > 0.0 && i.theta > 0.0 && i.rho.is_finite() && i.theta.is_finite()) {
            return Err(HarnessError::Config(format!("initial rest state ({}, {}) must be positive", i.rho, i.theta)));
        }
        if i.b.iter().chain(i.perturbations.iter().map(|p| &p.amplitude)).any(|v| !v.is_finite()) {
            return Err(HarnessError::Config("initial field and amplitudes must be finite".into()));
        }
        if i.perturbations.iter().any(|p| p.kind == PerturbationKind::TemperatureBump && p.amplitude.abs() >= 1.0) {
            return Err(HarnessError::Config("temperature bump amplitude must lie in (-1, 1)".into()));
        }
        if !(self.cutoff_delta > 0.0 && self.cutoff_delta < 1.0) {
            return Err(HarnessError::Config(format!("cut-off delta {} outside (0, 1)", self.cutoff_delta)));
        }
        for (name, v) in [("inequality constant", self.rei_c), ("audit constant", self.c_audit)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(HarnessError::Config(format!("{name} {v} must be finite and nonnegative")));
            }
        }
        if self.diagnostics.frames < 2 || self.diagnostics.dictionary_size == 0 {
            return Err(HarnessError::Config("need at least two output frames and a nonempty dictionary".into()));
        }
        let m = &self.monitor;
        if !(0.0 < m.rho[0] && m.rho[0] < m.rho[1] && 0.0 < m.theta[0] && m.theta[0] < m.theta[1])
            || !(m.u_max > 0.0 && m.s_max > 0.0)
        {
            return Err(HarnessError::Config("monitor bounds must be positive, ordered intervals".into()));
        }
        let problem = Problem::new(grid, eos.clone(), self.transport.clone(), boundary, self.solver.clone())?;
        let scenario = Scenario { config: self.clone(), eos, problem, hash: self.content_hash() };
        if let Some(p) = self.preset {
            scenario.check_hypotheses(p)?;
        }
        Ok(scenario)
    }
}

const HYPOTHESIS_SAMPLES: usize = 400;

/// 16 xi^2 (1 - xi)^2 and its derivative in xi; peak value one.
fn bubble(xi: f64) -> (f64, f64) {
    let w = xi * (1.0 - xi);
    (16.0 * w * w, 32.0 * w * (1.0 - 2.0 * xi))
}

impl Scenario {
    /// Initial state with every perturbation amplitude multiplied by the
    /// matching entry of `scale`.
    pub fn initial_state(&self, scale: &[f64]) -> Result<FluidState, HarnessError> {
        let grid = &self.problem.grid;
        let init = &self.config.initial;
        if scale.len() != init.perturbations.len() {
            return Err(HarnessError::Config(format!(
                "{} scales for {} perturbations",
                scale.len(),
                init.perturbations.len()
            )));
        }
        let (dim, len) = (grid.dim(), grid.extent());
        let amp = |kind: PerturbationKind| -> f64 {
            init.perturbations.iter().zip(scale).filter(|(p, _)| p.kind == kind).map(|(p, s)| p.amplitude * s).sum()
        };
        let (a_u, a_t, a_b) = (
            amp(PerturbationKind::VelocityBump),
            amp(PerturbationKind::TemperatureBump),
            amp(PerturbationKind::SolenoidalB),
        );
        // psi = prod bubble(x_d / L_d); B += a (d_y psi, -d_x psi, 0).
        let psi = move |x: [f64; 3]| -> (f64, Vec3) {
            let mut v = 1.0;
            let mut grad = [1.0, 1.0, 1.0];
            for d in 0..dim {
                let (f, df) = bubble(x[d] / len[d]);
                v *= f;
                for (e, g) in grad.iter_mut().enumerate() {
                    *g *= if e == d { df / len[d] } else { f };
                }
            }
            for g in grad.iter_mut().skip(dim) {
                *g = 0.0;
            }
            (v, grad)
        };
        let mut state = FluidState::from_primitives(grid, self.eos.as_ref(), |x| {
            let (v, g) = psi(x);
            Primitive {
                rho: init.rho,
                u: [a_u * v, 0.0, 0.0],
                theta: init.theta * (1.0 + a_t * v),
                b: [init.b[0] + a_b * g[1], init.b[1] - a_b * g[0], init.b[2]],
            }
        })?;
        match self.problem.config.div_control {
            DivControl::ConstrainedTransport => {
                let b0 = init.b;
                state.attach_potential(grid, move |x, y| b0[0] * y - b0[1] * x + a_b * psi([x, y, 0.0]).0)?;
            }
            DivControl::Projection => {
                project_div_b(grid, &self.problem.boundary, &mut state, self.problem.config.div_tol)?;
            }
            DivControl::None => {}
        }
        Ok(state)
    }

    /// The unperturbed rest state.
    pub fn equilibrium_state(&self) -> Result<FluidState, HarnessError> {
        let i = &self.config.initial;
        Ok(make_equilibrium(&self.problem.grid, self.eos.as_ref(), i.rho, i.theta, i.b)?.0)
    }

    /// Perturbation scales of one (all ones).
    pub fn unit_scale(&self) -> Vec<f64> {
        vec![1.0; self.config.initial.perturbations.len()]
    }

    fn monitor_region(&self) -> Result<Region, HarnessError> {
        let m = &self.config.monitor;
        Ok(Region::new((m.rho[0], m.rho[1]), (m.theta[0], m.theta[1]))?)
    }

    fn require(hypothesis: &'static str, ok: bool, detail: impl FnOnce() -> String) -> Result<(), HarnessError> {
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Hypothesis { hypothesis, detail: detail() })
        }
    }

    /// Check the structural hypotheses of a preset on the monitor window.
    pub fn check_hypotheses(&self, preset: Preset) -> Result<(), HarnessError> {
        let region = self.monitor_region()?;
        let tm = &self.config.transport;
        let gibbs = check_gibbs(self.eos.as_ref(), region, HYPOTHESIS_SAMPLES)?;
        Self::require("thermodynamic consistency", gibbs.passed, || {
            format!("Gibbs residual {:e} at {:?}", gibbs.max_residual(), gibbs.worst)
        })?;
        let stab = check_stability(self.eos.as_ref(), region, HYPOTHESIS_SAMPLES)?;
        Self::require("thermodynamic stability", stab.passed, || format!("{:?}", stab.first_violation))?;
        match preset {
            Preset::BoundedDmv => {
                let corners = [
                    (region.rho.0, region.theta.0),
                    (region.rho.1, region.theta.1),
                    (region.rho.0, region.theta.1),
                    (region.rho.1, region.theta.0),
                ];
                for (r, t) in corners {
                    let c = tm.at(r, t);
                    Self::require(
                        "positive coefficients",
                        c.mu > 0.0 && c.eta >= 0.0 && c.kappa > 0.0 && c.zeta > 0.0,
                        || format!("coefficients {c:?} at rho = {r}, theta = {t}"),
                    )?;
                }
            }
            Preset::ConstantCoefficients => {
                Self::require("constant coefficients", tm.is_constant(), || "temperature slopes must vanish".into())?;
                Self::require(
                    "constant coefficients",
                    tm.mu0 > 0.0 && tm.eta0 > 0.0 && tm.kappa0 > 0.0 && tm.zeta0 > 0.0,
                    || {
                        format!(
                            "mu = {}, eta = {}, kappa = {}, zeta = {} must be positive",
                            tm.mu0, tm.eta0, tm.kappa0, tm.zeta0
                        )
                    },
                )?;
                let c = growth_constant(self.eos.as_ref(), region, HYPOTHESIS_SAMPLES)?;
                Self::require("pressure growth", c.is_finite(), || format!("growth constant {c}"))?;
            }
            Preset::PerfectGas | Preset::Unconditional => {
                match (preset, self.eos.as_ref()) {
                    (Preset::PerfectGas, EosModel::Ideal(m)) => {
                        Self::require("perfect gas", m.c_v() > 1.0, || format!("c_v = {} must exceed one", m.c_v()))?
                    }
                    (Preset::Unconditional, EosModel::MonatomicRadiation(_)) => {}
                    (_, other) => {
                        return Err(HarnessError::Hypothesis {
                            hypothesis: if preset == Preset::PerfectGas { "perfect gas" } else { "radiation closure" },
                            detail: format!("closure {} is not admitted by this preset", other.name()),
                        })
                    }
                }
                Self::require("affine coefficients", tm.table.is_none(), || {
                    "tabulated coefficients are not affine".into()
                })?;
                Self::require(
                    "affine coefficients",
                    tm.mu0 > 0.0
                        && tm.mu1 > 0.0
                        && tm.eta0 >= 0.0
                        && tm.eta1 >= 0.0
                        && tm.kappa0 > 0.0
                        && tm.kappa1 >= 0.0
                        && tm.zeta0 > 0.0
                        && tm.zeta1 >= 0.0,
                    || format!("{tm:?} violates mu0, mu1, kappa0, zeta0 > 0 and eta0, eta1, kappa1, zeta1 >= 0"),
                )?;
            }
        }
        Ok(())
    }

    /// Run-time state monitor of the preset, if any.
    pub fn monitor(&self, state: &FluidState) -> Result<(), HarnessError> {
        let Some(preset) = self.config.preset else { return Ok(()) };
        let m = &self.config.monitor;
        let grid = &self.problem.grid;
        let eos = self.eos.as_ref();
        let fail = |hypothesis: &'static str, what: String, i: usize| {
            let c = grid.coords(i);
            let cell = match grid.dim() {
                1 => format!("({})", c[0]),
                2 => format!("({}, {})", c[0], c[1]),
                _ => format!("({}, {}, {})", c[0], c[1], c[2]),
            };
            Err(HarnessError::Hypothesis { hypothesis, detail: format!("{what} at cell {cell}, t = {}", state.t) })
        };
        for i in 0..state.len() {
            let p = state.primitive(eos, i)?;
            match preset {
                Preset::BoundedDmv => {
                    let hyp = "bounded state";
                    if !(p.rho >= m.rho[0] && p.rho <= m.rho[1]) {
                        return fail(hyp, format!("rho = {} left [{}, {}]", p.rho, m.rho[0], m.rho[1]), i);
                    }
                    if p.theta > m.theta[1] {
                        return fail(hyp, format!("theta = {} exceeded upper bound {}", p.theta, m.theta[1]), i);
                    }
                    if p.theta < m.theta[0] {
                        return fail(hyp, format!("theta = {} fell below lower bound {}", p.theta, m.theta[0]), i);
                    }
                }
                Preset::ConstantCoefficients => {
                    let hyp = "bounded temperature and velocity";
                    if !(p.theta <= m.theta[1]) {
                        return fail(hyp, format!("theta = {} exceeded upper bound {}", p.theta, m.theta[1]), i);
                    }
                    let speed = p.u.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if !(speed <= m.u_max) {
                        return fail(hyp, format!("|u| = {speed} exceeded upper bound {}", m.u_max), i);
                    }
                }
                Preset::PerfectGas => {
                    let s = eos.entropy(crate::eos::ThermoPoint::new(p.rho, p.theta)?)?;
                    if !(s.abs() <= m.s_max) {
                        return fail(
                            "bounded entropy",
                            format!("|s| = {} exceeded upper bound {}", s.abs(), m.s_max),
                            i,
                        );
                    }
                }
                Preset::Unconditional => return Ok(()),
            }
        }
        Ok(())
    }

    pub fn monitor_all(&self, frames: &[FluidState]) -> Result<(), HarnessError> {
        frames.iter().try_for_each(|f| self.monitor(f))
    }

    /// Output times k T / frames, k = 1..=frames.
    pub fn output_times(&self) -> Vec<f64> {
        let n = self.config.diagnostics.frames;
        let t_end = self.problem.config.t_end;
        (1..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    /// The scenario with `cells` refined by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Scenario, HarnessError> {
        RunConfig { grid: self.config.grid.refined(factor), ..self.config.clone() }.scenario()
    }
}
