use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InitialSection};
use super::{render, ConfigError, RunError};
use crate::admissibility::{
    budget_report, first_nonempty_eps, wild_window_with, BudgetReport, EnergyWindow, EpsSearch,
    WindowOptions,
};
use crate::ansatz::{AnsatzFields, ProfileTag};
use crate::field::wef::{WefBlock, WefFile};
use crate::field::{FieldError, FlowState, PressureLaw, ScalarField, VectorField};
use crate::solver::{solve_smooth, total_energy_profile, Blowup, SmoothSolution, SolverError};
use crate::subsolution::{
    max_amplitude_search, subsolution_margin, AmplitudeSearch, CertificationReport,
    SearchStatus, SubsolutionCandidate, Verdict,
};

pub const FORMAT_VERSION: &str = "wildlab-report/1";

const SNAPSHOT_DIR: &str = "snapshots";
const FIELD_DIR: &str = "fields";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Certify,
    Window,
    Budget,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Certify => "certify",
            Command::Window => "window",
            Command::Budget => "budget",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Parent of the content-addressed run directories.
    pub out: PathBuf,
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Report failed certifications through the exit status.
    pub strict: bool,
}

/// `<out>/<first 16 hex digits of the config hash>`.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub path: PathBuf,
    pub hash: String,
}

impl RunDir {
    pub fn prepare(out: &Path, cfg: &ExperimentConfig) -> Result<Self, RunError> {
        let hash = cfg.hash();
        let path = out.join(&hash[..16]);
        fs::create_dir_all(&path).map_err(|e| RunError::io(&path, e))?;
        let dir = Self { path, hash };
        dir.write("config.toml", cfg.to_toml().as_bytes())?;
        Ok(dir)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let p = self.file(name);
        fs::write(&p, bytes).map_err(|e| RunError::io(p, e))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Output(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_csv(&self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), RunError> {
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    /// Wall-clock timings live apart from the reproducible reports.
    fn record_timing(&self, cmd: Command, seconds: f64) -> Result<(), RunError> {
        let p = self.file("timings.json");
        let mut map: BTreeMap<String, f64> = fs::read_to_string(&p)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default();
        map.insert(cmd.name().to_string(), seconds);
        self.write_json("timings.json", &map)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub format_version: String,
    pub command: Command,
    pub config_hash: String,
    pub seed: u64,
}

impl ReportHeader {
    fn new(cmd: Command, dir: &RunDir, cfg: &ExperimentConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            command: cmd,
            config_hash: dir.hash.clone(),
            seed: cfg.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub t_end: f64,
    pub t_reached: f64,
    pub completed: bool,
    pub steps: usize,
    pub snapshots: usize,
    pub k_monitor: u32,
    pub blowup: Option<Blowup>,
    /// `max_t |∫ϱ(t) − ∫ϱ(0)|`.
    pub mass_drift: f64,
    /// `max_t max_i |∫mᵢ(t) − ∫mᵢ(0)|`.
    pub momentum_drift: f64,
    /// `max_t |E(t) − E(0)|`.
    pub energy_drift: f64,
    pub energy_max_increase: f64,
    pub final_tail_fraction: f64,
    /// Sup-norm distance to the linear standing wave (acoustic data only).
    pub acoustic_oracle_error: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveRunReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub config: ExperimentConfig,
    pub solver: SolveSummary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveVerdict {
    pub n: u32,
    pub verdict: Verdict,
    pub amplitude: f64,
    pub search: AmplitudeSearch,
    pub certification: Option<CertificationReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifyRunReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub config: ExperimentConfig,
    pub solver: SolveSummary,
    pub profile: ProfileTag,
    pub eps: Option<f64>,
    pub zero: CertificationReport,
    pub waves: Vec<WaveVerdict>,
    pub all_pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowRunReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub config: ExperimentConfig,
    pub solver: SolveSummary,
    pub window: EnergyWindow,
    pub sweep: EpsSearch,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetRunReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    pub config: ExperimentConfig,
    pub budget: BudgetReport,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Ok,
    NumericalAbort(String),
    CertificationFailed(String),
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Command,
    pub run_dir: PathBuf,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
    pub status: Status,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::NumericalAbort(_) => 3,
            Status::CertificationFailed(_) => 4,
        }
    }
}

fn solver_error(e: SolverError) -> RunError {
    match e {
        SolverError::Config(m) | SolverError::TestFunction(m) => ConfigError::Invalid(m).into(),
        SolverError::Field(f) => field_error(f),
    }
}

fn field_error(e: FieldError) -> RunError {
    match e {
        FieldError::Io(io) => RunError::io("<field data>", io),
        other => RunError::Numerical(other.to_string()),
    }
}

fn invalid(e: impl std::fmt::Display) -> RunError {
    ConfigError::Invalid(e.to_string()).into()
}

/// Runs one pipeline command for `cfg` inside its run directory.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome, RunError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let dir = RunDir::prepare(&opts.out, &cfg)?;
    let start = Instant::now();
    let (summary, status) = match cmd {
        Command::Solve => cmd_solve(&cfg, &dir)?,
        Command::Certify => cmd_certify(&cfg, &dir, opts.strict)?,
        Command::Window => cmd_window(&cfg, &dir, opts.strict)?,
        Command::Budget => cmd_budget(&cfg, &dir, opts.strict)?,
        Command::Report => (render::render_run_dir(&dir.path)?, Status::Ok),
    };
    if cmd != Command::Report {
        dir.record_timing(cmd, start.elapsed().as_secs_f64())?;
    }
    Ok(Outcome {
        command: cmd,
        run_dir: dir.path,
        summary,
        status,
    })
}

fn summarize(cfg: &ExperimentConfig, sol: &SmoothSolution, law: &PressureLaw) -> Result<SolveSummary, RunError> {
    let d = sol.grid().dim();
    let first = sol.initial();
    let mass0 = first.rho.integral();
    let mom0 = first.m.integral();
    let mut mass_drift = 0.0f64;
    let mut momentum_drift = 0.0f64;
    for s in &sol.trajectory {
        mass_drift = mass_drift.max((s.rho.integral() - mass0).abs());
        let mom = s.m.integral();
        for i in 0..d {
            momentum_drift = momentum_drift.max((mom[i] - mom0[i]).abs());
        }
    }
    let energy = total_energy_profile(sol, law).map_err(solver_error)?;
    let oracle = match &cfg.initial {
        InitialSection::Acoustic { rho, amplitude } if sol.blowup.is_none() => {
            Some(acoustic_oracle_error(sol.last(), law, *rho, *amplitude))
        }
        _ => None,
    };
    Ok(SolveSummary {
        t_end: first.time + cfg.solver.t_end,
        t_reached: sol.t_reached,
        completed: sol.blowup.is_none(),
        steps: sol.dt_history.len(),
        snapshots: sol.trajectory.len(),
        k_monitor: sol.k_monitor,
        blowup: sol.blowup.clone(),
        mass_drift,
        momentum_drift,
        energy_drift: energy.drift(),
        energy_max_increase: energy.max_increase,
        final_tail_fraction: sol.norm_history.last().map_or(0.0, |n| n.tail_fraction),
        acoustic_oracle_error: oracle,
    })
}

/// Distance to `ϱ = ϱ₀ + δ cos(πx₁) cos(cπt)`, `m₁ = δc sin(πx₁) sin(cπt)`.
fn acoustic_oracle_error(state: &FlowState, law: &PressureLaw, rho0: f64, delta: f64) -> f64 {
    use std::f64::consts::PI;
    let grid = state.grid();
    let c = law.sound_speed(rho0);
    let t = state.time;
    let rho = ScalarField::from_fn(grid, |x| rho0 + delta * (PI * x[0]).cos() * (c * PI * t).cos());
    let m = VectorField::from_fn(grid, |x| [delta * c * (PI * x[0]).sin() * (c * PI * t).sin(), 0.0, 0.0]);
    let drho = state.rho.zip_map(&rho, |a, b| a - b).sup_norm();
    let mut dm = state.m.clone();
    dm.axpy(-1.0, &m);
    drho.max(dm.sup_norm())
}

fn snapshot_name(i: usize) -> String {
    format!("{SNAPSHOT_DIR}/snap_{i:05}.wef")
}

fn solve_and_store(cfg: &ExperimentConfig, dir: &RunDir) -> Result<(SmoothSolution, SolveSummary), RunError> {
    let law = cfg.law()?;
    let data = cfg.initial_data()?;
    let sol = solve_smooth(&data, &law, &cfg.solver).map_err(solver_error)?;
    let summary = summarize(cfg, &sol, &law)?;

    let snap_dir = dir.file(SNAPSHOT_DIR);
    if snap_dir.exists() {
        fs::remove_dir_all(&snap_dir).map_err(|e| RunError::io(&snap_dir, e))?;
    }
    fs::create_dir_all(&snap_dir).map_err(|e| RunError::io(&snap_dir, e))?;
    for (i, s) in sol.trajectory.iter().enumerate() {
        let mut f = WefFile::new(s.grid(), s.time);
        f.push("rho", s.rho.clone()).map_err(field_error)?;
        f.push("m", s.m.clone()).map_err(field_error)?;
        let p = dir.file(&snapshot_name(i));
        f.save(&p).map_err(|e| match e {
            FieldError::Io(io) => RunError::io(&p, io),
            other => field_error(other),
        })?;
    }
    dir.write_csv(
        "norms.csv",
        "step,time,rho_norm,m_norm,tail_fraction",
        sol.norm_history
            .iter()
            .map(|n| format!("{},{},{},{},{}", n.step, n.time, n.rho, n.m, n.tail_fraction)),
    )?;
    let energy = total_energy_profile(&sol, &law).map_err(solver_error)?;
    dir.write_csv(
        "energy.csv",
        "time,energy,mass",
        energy
            .times
            .iter()
            .zip(&energy.energy)
            .zip(&sol.trajectory)
            .map(|((t, e), s)| format!("{t},{e},{}", s.rho.integral())),
    )?;
    dir.write_json(
        "solve.json",
        &SolveRunReport {
            header: ReportHeader::new(Command::Solve, dir, cfg),
            config: cfg.clone(),
            solver: summary.clone(),
        },
    )?;
    Ok((sol, summary))
}

/// Reuses stored snapshots when `solve` already ran for this config.
fn load_or_solve(cfg: &ExperimentConfig, dir: &RunDir) -> Result<(SmoothSolution, SolveSummary), RunError> {
    if let Some(found) = load_solution(dir) {
        return Ok(found);
    }
    solve_and_store(cfg, dir)
}

fn load_solution(dir: &RunDir) -> Option<(SmoothSolution, SolveSummary)> {
    let text = fs::read_to_string(dir.file("solve.json")).ok()?;
    let report: SolveRunReport = serde_json::from_str(&text).ok()?;
    if report.header.config_hash != dir.hash || report.header.format_version != FORMAT_VERSION {
        return None;
    }
    let mut traj = Vec::with_capacity(report.solver.snapshots);
    for i in 0..report.solver.snapshots {
        let f = WefFile::load(&dir.file(&snapshot_name(i))).ok()?;
        let rho = match f.get("rho")? {
            WefBlock::Scalar(s) => s.clone(),
            _ => return None,
        };
        let m = match f.get("m")? {
            WefBlock::Vector(v) => v.clone(),
            _ => return None,
        };
        traj.push(FlowState::new(rho, m, f.time).ok()?);
    }
    let mut sol = SmoothSolution::from_snapshots(traj, report.solver.k_monitor).ok()?;
    sol.blowup = report.solver.blowup.clone();
    Some((sol, report.solver))
}

fn solve_lines(s: &SolveSummary) -> Vec<String> {
    let mut lines = vec![
        format!("t_reached       {} of {}", s.t_reached, s.t_end),
        format!("steps           {} ({} snapshots)", s.steps, s.snapshots),
        format!("mass drift      {:e}", s.mass_drift),
        format!("momentum drift  {:e}", s.momentum_drift),
        format!("energy drift    {:e}", s.energy_drift),
    ];
    if let Some(e) = s.acoustic_oracle_error {
        lines.push(format!("acoustic error  {e:e}"));
    }
    if let Some(b) = &s.blowup {
        lines.push(format!("blow-up         {:?} at t = {}: {}", b.reason, b.time, b.detail));
    }
    lines
}

fn cmd_solve(cfg: &ExperimentConfig, dir: &RunDir) -> Result<(Vec<String>, Status), RunError> {
    let (_, summary) = solve_and_store(cfg, dir)?;
    let status = match &summary.blowup {
        Some(b) => Status::NumericalAbort(format!(
            "smooth solution aborted at t = {} ({:?}): {}",
            b.time, b.reason, b.detail
        )),
        None => Status::Ok,
    };
    Ok((solve_lines(&summary), status))
}

fn cmd_certify(cfg: &ExperimentConfig, dir: &RunDir, strict: bool) -> Result<(Vec<String>, Status), RunError> {
    let prof = cfg.profile()?;
    let (sol, summary) = load_or_solve(cfg, dir)?;
    let ans = AnsatzFields::build(&sol, &prof).map_err(invalid)?;
    let times = sol.times();
    let grid = sol.grid();
    let zero = subsolution_margin(&SubsolutionCandidate::zero(grid, &times), &ans, &sol).map_err(invalid)?;

    let mut waves = Vec::with_capacity(cfg.wave.n.len());
    for &n in &cfg.wave.n {
        let shape = cfg.wave_shape(n);
        let search = max_amplitude_search(&shape, &ans, &sol, cfg.wave.target_fraction).map_err(invalid)?;
        let certification = if search.status == SearchStatus::Certified {
            let cand = SubsolutionCandidate::plane_wave(&shape, search.amplitude, grid, &times).map_err(invalid)?;
            Some(subsolution_margin(&cand, &ans, &sol).map_err(invalid)?)
        } else {
            None
        };
        let verdict = match &certification {
            Some(c) if c.passed() => Verdict::Pass,
            _ => Verdict::Fail,
        };
        waves.push(WaveVerdict {
            n,
            verdict,
            amplitude: search.amplitude,
            search,
            certification,
        });
    }

    if cfg.output.dump_fields {
        let fdir = dir.file(FIELD_DIR);
        fs::create_dir_all(&fdir).map_err(|e| RunError::io(&fdir, e))?;
        for (i, t) in times.iter().enumerate() {
            let mut f = WefFile::new(grid, *t);
            f.push("H", ans.h[i].clone()).map_err(field_error)?;
            f.push("e", ans.e[i].clone()).map_err(field_error)?;
            f.push("margin_zero", zero.margin[i].clone()).map_err(field_error)?;
            let p = dir.file(&format!("{FIELD_DIR}/certify_{i:05}.wef"));
            f.save(&p).map_err(field_error)?;
        }
    }

    let mut margin_rows = Vec::new();
    let mut push_rows = |label: &str, n: u32, rep: &CertificationReport| {
        for s in &rep.snapshots {
            margin_rows.push(format!(
                "{label},{n},{},{},{},{},{},{}",
                s.time, s.min, s.mean, s.max, s.energy_gap_min, s.sup_v
            ));
        }
    };
    push_rows("zero", 0, &zero);
    for w in &waves {
        if let Some(c) = &w.certification {
            push_rows("wave", w.n, c);
        }
    }
    dir.write_csv(
        "margins.csv",
        "candidate,n,time,min,mean,max,energy_gap_min,sup_v",
        margin_rows,
    )?;
    dir.write_csv(
        "amplitude_curve.csv",
        "n,amplitude,margin_min",
        waves.iter().flat_map(|w| {
            w.search
                .curve
                .iter()
                .map(move |s| format!("{},{},{}", w.n, s.amplitude, s.margin_min))
        }),
    )?;

    let all_pass = zero.passed() && waves.iter().all(|w| w.verdict == Verdict::Pass);
    let mut lines = vec![format!(
        "zero candidate  {:?}  margin_min {}",
        zero.verdict, zero.margin_min
    )];
    for w in &waves {
        let m = w.certification.as_ref().map_or(f64::NAN, |c| c.margin_min);
        lines.push(format!(
            "wave N={:<4}     {:?}  A* {}  margin_min {}",
            w.n, w.verdict, w.amplitude, m
        ));
    }
    let report = CertifyRunReport {
        header: ReportHeader::new(Command::Certify, dir, cfg),
        config: cfg.clone(),
        solver: summary,
        profile: prof.tag(),
        eps: prof.eps(),
        zero,
        waves,
        all_pass,
    };
    dir.write_json("certify.json", &report)?;
    let status = if strict && !all_pass {
        Status::CertificationFailed("at least one candidate failed certification".into())
    } else {
        Status::Ok
    };
    Ok((lines, status))
}

fn cmd_window(cfg: &ExperimentConfig, dir: &RunDir, strict: bool) -> Result<(Vec<String>, Status), RunError> {
    let prof = cfg.profile()?;
    let law = cfg.law()?;
    let (sol, summary) = load_or_solve(cfg, dir)?;
    let opts = WindowOptions {
        tolerance: cfg.window.tolerance,
        ..Default::default()
    };
    let window = wild_window_with(&sol, &law, &prof, opts).map_err(|e| RunError::Numerical(e.to_string()))?;
    let sweep = first_nonempty_eps(&sol, &law, cfg.window.eps_start, cfg.window.max_halvings, opts)
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    dir.write_csv(
        "window_curve.csv",
        "t,m,lambda_prime,bracket",
        window
            .curve
            .iter()
            .map(|s| format!("{},{},{},{}", s.t, s.m, s.lambda_prime, s.bracket)),
    )?;
    dir.write_csv(
        "eps_sweep.csv",
        "eps,m0",
        sweep.tried.iter().map(|(e, m)| format!("{e},{m}")),
    )?;
    let mut lines = vec![format!(
        "configured profile  T_w {} of {}{}",
        window.t_w,
        window.horizon,
        if window.empty { " (empty)" } else { "" }
    )];
    if let Some(a) = &window.advice {
        lines.push(format!("advice              {a}"));
    }
    match (sweep.eps, &sweep.window) {
        (Some(e), Some(w)) => lines.push(format!("eps halving         eps {e}  T_w {}", w.t_w)),
        _ => lines.push("eps halving         no eps with a nonempty window".into()),
    }
    let empty = window.empty;
    let report = WindowRunReport {
        header: ReportHeader::new(Command::Window, dir, cfg),
        config: cfg.clone(),
        solver: summary,
        window,
        sweep,
    };
    dir.write_json("window.json", &report)?;
    let status = if strict && empty {
        Status::CertificationFailed("energy window is empty for the configured profile".into())
    } else {
        Status::Ok
    };
    Ok((lines, status))
}

fn cmd_budget(cfg: &ExperimentConfig, dir: &RunDir, strict: bool) -> Result<(Vec<String>, Status), RunError> {
    let prof = cfg.profile()?;
    let (sol, _) = load_or_solve(cfg, dir)?;
    let shape = cfg.wave_shape(cfg.wave.n[0]);
    let budget = budget_report(
        &sol,
        &prof,
        &shape,
        &cfg.wave.n,
        cfg.budget.target_eps,
        cfg.budget.p,
        cfg.budget.match_time,
    )
    .map_err(invalid)?;
    dir.write_csv(
        "budget.csv",
        "n,amplitude,l2_norm,within_budget,lp_rho,lp_u,route",
        budget.entries.iter().map(|e| {
            format!(
                "{},{},{},{},{},{},{:?}",
                e.n, e.amplitude, e.l2_norm, e.within_budget, e.closeness.rho, e.closeness.u, e.closeness.route
            )
        }),
    )?;
    let mut lines = vec![
        format!("target eps    {}", budget.target_eps),
        format!("lambda0       {}", budget.lambda0),
        format!("predicted l2  {}", budget.predicted_l2),
    ];
    let mut row = String::new();
    for e in &budget.entries {
        let _ = write!(row, " N={}:{:.3e}", e.n, e.l2_norm);
    }
    lines.push(format!("measured l2  {row}"));
    lines.push(match budget.n0 {
        Some(n) => format!("N0            {n}"),
        None => "N0            none (budget exceeded at the largest N)".into(),
    });
    let n0 = budget.n0;
    dir.write_json(
        "budget.json",
        &BudgetRunReport {
            header: ReportHeader::new(Command::Budget, dir, cfg),
            config: cfg.clone(),
            budget,
        },
    )?;
    let status = if strict && n0.is_none() {
        Status::CertificationFailed("no listed N keeps the wave within the L2 budget".into())
    } else {
        Status::Ok
    };
    Ok((lines, status))
}
