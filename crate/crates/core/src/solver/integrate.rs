use serde::{Deserialize, Serialize};

use super::{EulerRhs, SolverError};
use crate::field::{FieldError, FlowState, PressureLaw, ScalarField, Spectral, TorusGrid, VectorField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Courant factor in `(0, 1]`.
    pub cfl: f64,
    /// 2/3-rule dealiasing of products.
    pub dealias: bool,
    /// Monitored Sobolev index; `None` picks the smallest integer above `d/2 + 1`.
    pub k_monitor: Option<u32>,
    /// Abort once the monitored norm exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// Abort once the spectral tail holds more than this fraction of the energy.
    pub tail_fraction: f64,
    pub t_end: f64,
    /// Keep every `snap_every`-th step (the final state is always kept).
    pub snap_every: usize,
    /// Uniform step overriding the CFL rule (used for convergence studies).
    pub dt: Option<f64>,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            dealias: true,
            k_monitor: None,
            blowup_factor: 1e3,
            tail_fraction: 0.01,
            t_end: 0.1,
            snap_every: 1,
            dt: None,
            max_steps: 1_000_000,
        }
    }
}

impl SolverConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn k_monitor_for(&self, grid: TorusGrid) -> u32 {
        self.k_monitor.unwrap_or_else(|| grid.default_sobolev_index())
    }

    pub fn validate(&self, grid: TorusGrid) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        let k = self.k_monitor_for(grid) as f64;
        if k <= grid.dim() as f64 / 2.0 + 1.0 {
            return bad(format!("k_monitor must exceed d/2 + 1, got {k}"));
        }
        if self.snap_every == 0 {
            return bad("snap_every must be at least 1".into());
        }
        if !(self.blowup_factor > 1.0) {
            return bad("blowup_factor must exceed 1".into());
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return bad("tail_fraction must lie in (0, 1)".into());
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("fixed dt must be positive, got {dt}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    NormGrowth,
    DensityExit,
    SpectralTail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blowup {
    pub reason: BlowupReason,
    /// Time of the last accepted state.
    pub time: f64,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub step: usize,
    pub time: f64,
    pub rho: f64,
    pub m: f64,
    pub tail_fraction: f64,
}

/// Snapshots of a smooth run plus its monitors. Immutable once produced.
#[derive(Clone, Debug)]
pub struct SmoothSolution {
    pub trajectory: Vec<FlowState>,
    pub t_reached: f64,
    pub blowup: Option<Blowup>,
    pub norm_history: Vec<NormSample>,
    pub dt_history: Vec<f64>,
    pub k_monitor: u32,
}

impl SmoothSolution {
    /// Wraps externally supplied snapshots (e.g. read back from disk).
    pub fn from_snapshots(trajectory: Vec<FlowState>, k_monitor: u32) -> Result<Self, SolverError> {
        let first = trajectory
            .first()
            .ok_or_else(|| SolverError::Config("empty trajectory".into()))?;
        let grid = first.grid();
        if trajectory.iter().any(|s| s.grid() != grid) {
            return Err(FieldError::GridMismatch("snapshots on different grids".into()).into());
        }
        if trajectory.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(SolverError::Config("snapshot times must increase".into()));
        }
        Ok(Self {
            t_reached: trajectory.last().unwrap().time,
            trajectory,
            blowup: None,
            norm_history: Vec::new(),
            dt_history: Vec::new(),
            k_monitor,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.trajectory[0].grid()
    }

    pub fn initial(&self) -> &FlowState {
        &self.trajectory[0]
    }

    pub fn last(&self) -> &FlowState {
        self.trajectory.last().unwrap()
    }

    pub fn times(&self) -> Vec<f64> {
        self.trajectory.iter().map(|s| s.time).collect()
    }

    /// Linear interpolation between the bracketing snapshots, clamped to the
    /// recorded interval.
    pub fn state_at(&self, t: f64) -> FlowState {
        let traj = &self.trajectory;
        if t <= traj[0].time {
            return traj[0].clone();
        }
        if t >= self.last().time {
            return self.last().clone();
        }
        let i = traj.partition_point(|s| s.time <= t);
        let (a, b) = (&traj[i - 1], &traj[i]);
        if t == a.time {
            return a.clone();
        }
        FlowState::lerp(a, b, (t - a.time) / (b.time - a.time))
    }
}

struct Stage {
    rho: ScalarField,
    m: VectorField,
}

fn shifted(base: &FlowState, k: &Stage, a: f64, time: f64) -> FlowState {
    let mut rho = base.rho.clone();
    rho.axpy(a, &k.rho);
    let mut m = base.m.clone();
    m.axpy(a, &k.m);
    FlowState { rho, m, time }
}

fn rk4_step(rhs: &EulerRhs, s: &FlowState, dt: f64) -> Result<FlowState, FieldError> {
    let eval = |st: &FlowState| rhs.eval(st).map(|(rho, m)| Stage { rho, m });
    let k1 = eval(s)?;
    let k2 = eval(&shifted(s, &k1, 0.5 * dt, s.time + 0.5 * dt))?;
    let k3 = eval(&shifted(s, &k2, 0.5 * dt, s.time + 0.5 * dt))?;
    let k4 = eval(&shifted(s, &k3, dt, s.time + dt))?;
    let mut next = s.clone();
    next.time = s.time + dt;
    for (k, w) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
        next.rho.axpy(w * dt / 6.0, &k.rho);
        next.m.axpy(w * dt / 6.0, &k.m);
    }
    Ok(next)
}

/// Largest characteristic speed `|u| + √p′(ϱ)`.
fn max_wavespeed(s: &FlowState, law: &PressureLaw) -> f64 {
    let d = s.grid().dim();
    let rho = s.rho.values();
    (0..rho.len())
        .map(|k| {
            let m = s.m.at(k);
            let u = m[..d].iter().map(|x| x * x).sum::<f64>().sqrt() / rho[k];
            u + law.sound_speed(rho[k])
        })
        .fold(0.0, f64::max)
}

fn sample(spectral: &Spectral, s: &FlowState, order: u32, step: usize) -> (NormSample, f64) {
    let d = s.grid().dim();
    let mr = spectral.monitor(s.rho.values(), order);
    let mut m_sq = 0.0;
    let (mut tail, mut total) = (mr.tail, mr.total);
    for c in 0..d {
        let mc = spectral.monitor(s.m.component(c), order);
        m_sq += mc.sobolev_sq;
        tail += mc.tail;
        total += mc.total;
    }
    let frac = if total > 0.0 { tail / total } else { 0.0 };
    let norm = NormSample {
        step,
        time: s.time,
        rho: mr.sobolev_sq.sqrt(),
        m: m_sq.sqrt(),
        tail_fraction: frac,
    };
    (norm, (mr.sobolev_sq + m_sq).sqrt())
}

/// Integrates the Euler system from `data` up to `cfg.t_end` or until one of
/// the blow-up proxies fires (norm growth, density exit, spectral tail).
///
/// The step is `cfl · h / max(|u| + √p′)` unless `cfg.dt` fixes a uniform
/// step; the last step is shortened to land on `t_end`. With dealiasing on,
/// the data are first projected onto the 2/3-rule band.
pub fn solve_smooth(
    data: &FlowState,
    law: &PressureLaw,
    cfg: &SolverConfig,
) -> Result<SmoothSolution, SolverError> {
    let grid = data.grid();
    cfg.validate(grid)?;
    data.check_density(law)?;
    let spectral = Spectral::new(grid);
    let order = cfg.k_monitor_for(grid);
    let mut state = data.clone();
    if cfg.dealias {
        state.rho = spectral.dealias(&state.rho);
        state.m = spectral.dealias_vector(&state.m);
        state.check_density(law)?;
    }
    let rhs = EulerRhs::new(spectral.clone(), law.clone(), cfg.dealias);

    let t0 = state.time;
    let t_final = t0 + cfg.t_end;
    let (first, norm0) = sample(&spectral, &state, order, 0);
    let mut sol = SmoothSolution {
        trajectory: vec![state.clone()],
        t_reached: t0,
        blowup: None,
        norm_history: vec![first],
        dt_history: Vec::new(),
        k_monitor: order,
    };
    let fixed_steps = cfg
        .dt
        .map(|dt| ((cfg.t_end / dt) - 1e-9).ceil().max(1.0) as usize);
    let h = grid.spacing();
    let mut step = 0usize;
    while state.time < t_final {
        if step >= cfg.max_steps {
            return Err(SolverError::Config(format!(
                "max_steps = {} reached at t = {}",
                cfg.max_steps, state.time
            )));
        }
        let remaining = t_final - state.time;
        let (dt, last) = match fixed_steps {
            Some(nsteps) => (cfg.t_end / nsteps as f64, step + 1 == nsteps),
            None => {
                let dt = cfg.cfl * h / max_wavespeed(&state, law);
                if dt >= remaining * (1.0 - 1e-12) {
                    (remaining, true)
                } else {
                    (dt, false)
                }
            }
        };
        let next = match rk4_step(&rhs, &state, dt) {
            Ok(next) => next,
            Err(FieldError::DensityOutOfRange { rho, a, b }) => {
                sol.blowup = Some(Blowup {
                    reason: BlowupReason::DensityExit,
                    time: state.time,
                    detail: format!("density {rho} left ({a}, {b}) within the step from t = {}", state.time),
                });
                break;
            }
            Err(e) => return Err(e.into()),
        };
        step += 1;
        if let Err(FieldError::DensityOutOfRange { rho, a, b }) = next.check_density(law) {
            sol.blowup = Some(Blowup {
                reason: BlowupReason::DensityExit,
                time: state.time,
                detail: format!("density {rho} left ({a}, {b}) at t = {}", next.time),
            });
            break;
        }
        let mut next = next;
        if last {
            next.time = t_final;
        }
        let (norms, norm) = sample(&spectral, &next, order, step);
        sol.norm_history.push(norms);
        sol.dt_history.push(dt);
        let reason = if !(norm <= cfg.blowup_factor * norm0) {
            Some((
                BlowupReason::NormGrowth,
                format!("W^{{{order},2}} norm grew from {norm0:e} to {norm:e}"),
            ))
        } else if norms.tail_fraction > cfg.tail_fraction {
            Some((
                BlowupReason::SpectralTail,
                format!("spectral tail holds {:.3e} of the energy", norms.tail_fraction),
            ))
        } else {
            None
        };
        if let Some((reason, detail)) = reason {
            sol.blowup = Some(Blowup {
                reason,
                time: state.time,
                detail: format!("{detail} at t = {}", next.time),
            });
            break;
        }
        state = next;
        sol.t_reached = state.time;
        if step % cfg.snap_every == 0 || last {
            sol.trajectory.push(state.clone());
        }
        if last {
            break;
        }
    }
    if sol.last().time < sol.t_reached {
        sol.trajectory.push(state);
    }
    Ok(sol)
}
