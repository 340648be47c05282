use super::boundary::Extended;
use super::diagnostics::{ballistic_energy, entropy_audit, production_field, totals, EntropyAudit};
use super::divb::max_divergence;
use super::io::TimeSeriesRow;
use super::solver::{dt_from, step_from, Problem};
use super::{DivControl, FluidState, SolverError, ThermalBc};

/// Frames recorded at the configured cadence, first and last always included.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frames: Vec<FluidState>,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Trajectory {
    pub fn last(&self) -> &FluidState {
        self.frames.last().expect("trajectory holds the initial frame")
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }
}

/// Advance `initial` to the end time (or the step cap).
pub fn run(problem: &Problem, initial: &FluidState) -> Result<Trajectory, SolverError> {
    check_initial(problem, initial)?;
    let mut traj = Trajectory { frames: vec![initial.clone()], steps: 0, dt_min: f64::INFINITY, dt_max: 0.0 };
    let state = advance(problem, initial.clone(), problem.config.t_end, &mut traj, true)?;
    if traj.last().t != state.t {
        traj.frames.push(state);
    }
    Ok(traj)
}

/// Advance through the given increasing output times, recording exactly one
/// frame at each (the initial frame first). The step cap applies per segment.
pub fn run_aligned(problem: &Problem, initial: &FluidState, times: &[f64]) -> Result<Trajectory, SolverError> {
    check_initial(problem, initial)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|&t| !(t > initial.t)) {
        return Err(SolverError::Config("output times must increase past the initial time".into()));
    }
    let mut traj = Trajectory { frames: vec![initial.clone()], steps: 0, dt_min: f64::INFINITY, dt_max: 0.0 };
    let mut state = initial.clone();
    for &t in times {
        state = advance(problem, state, t, &mut traj, false)?;
        traj.frames.push(state.clone());
    }
    Ok(traj)
}

fn check_initial(problem: &Problem, initial: &FluidState) -> Result<(), SolverError> {
    if initial.len() != problem.grid.len() {
        return Err(SolverError::GridMismatch(format!(
            "state has {} cells, grid {}",
            initial.len(),
            problem.grid.len()
        )));
    }
    if problem.config.div_control == DivControl::ConstrainedTransport && initial.ct.is_none() {
        return Err(SolverError::Config("constrained transport needs a vector potential on the initial state".into()));
    }
    Ok(())
}

fn advance(
    problem: &Problem,
    mut state: FluidState,
    t_end: f64,
    traj: &mut Trajectory,
    record: bool,
) -> Result<FluidState, SolverError> {
    let cfg = &problem.config;
    let t_stop = t_end - 1e-12 * t_end.abs();
    let mut steps = 0;
    while state.t < t_stop && (cfg.max_steps == 0 || steps < cfg.max_steps) {
        let ext = Extended::build(&problem.grid, problem.eos.as_ref(), &problem.boundary, &state)?;
        let dt = dt_from(problem, &ext)?.min(t_end - state.t);
        state = step_from(problem, &state, &ext, dt)?;
        steps += 1;
        traj.steps += 1;
        traj.dt_min = traj.dt_min.min(dt);
        traj.dt_max = traj.dt_max.max(dt);
        if record && traj.steps % cfg.snapshot_every == 0 {
            traj.frames.push(state.clone());
        }
    }
    // The final state must also be physical.
    Extended::build(&problem.grid, problem.eos.as_ref(), &problem.boundary, &state)?;
    Ok(state)
}

/// Default ballistic test temperature: the common boundary temperature, or in
/// 1D the linear profile between two Dirichlet ends.
fn default_theta_tilde(problem: &Problem) -> Option<Box<dyn Fn([f64; 3]) -> f64 + '_>> {
    if let Some(t) = problem.uniform_boundary_temperature() {
        return Some(Box::new(move |_| t));
    }
    let g = &problem.grid;
    if g.dim() == 1 && g.face(0, 0).thermal == ThermalBc::Dirichlet && g.face(0, 1).thermal == ThermalBc::Dirichlet {
        let [a, b] = problem.boundary.theta_b[0];
        let len = g.extent()[0];
        return Some(Box::new(move |x| a + (b - a) * x[0] / len));
    }
    None
}

/// Per-frame diagnostics in the time-series layout; relative energy is left
/// NaN for callers that have a reference solution.
pub fn time_series(
    problem: &Problem,
    trajectory: &Trajectory,
    c_audit: f64,
) -> Result<(Vec<TimeSeriesRow>, EntropyAudit), SolverError> {
    let audit = entropy_audit(problem, &trajectory.frames, c_audit)?;
    let theta_tilde = default_theta_tilde(problem);
    let bb = problem.boundary.b_b;
    let mut rows = Vec::with_capacity(trajectory.frames.len());
    for (k, f) in trajectory.frames.iter().enumerate() {
        let tot = totals(problem, f)?;
        let prod = production_field(problem, f)?;
        let ballistic = match &theta_tilde {
            Some(tt) => ballistic_energy(problem, f, tt.as_ref(), &|_| bb)?,
            None => f64::NAN,
        };
        rows.push(TimeSeriesRow {
            t: f.t,
            mass: tot.mass,
            momentum: tot.momentum,
            energy: tot.energy,
            entropy: tot.entropy,
            ballistic,
            relative_energy: f64::NAN,
            production_min: prod.iter().fold(f64::INFINITY, |m, &v| m.min(v)),
            div_b_max: max_divergence(&problem.grid, &problem.boundary, f),
            entropy_residual: if k == 0 { 0.0 } else { audit.intervals[k - 1].residual },
        });
    }
    Ok((rows, audit))
}
