use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ConfigError;
use crate::ansatz::EnergyProfile;
use crate::field::wef::{WefBlock, WefFile};
use crate::field::{FlowState, PressureLaw, ScalarField, TorusGrid, VectorField};
use crate::solver::SolverConfig;
use crate::subsolution::{Envelope, WaveShape};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PressureSection {
    GammaLaw {
        coef: f64,
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        interval: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho_ref: Option<f64>,
    },
    Table {
        rho: Vec<f64>,
        p: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        interval: Option<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho_ref: Option<f64>,
    },
}

impl Default for PressureSection {
    fn default() -> Self {
        PressureSection::GammaLaw {
            coef: 1.0,
            gamma: 2.0,
            interval: None,
            rho_ref: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    /// Uniform state.
    Constant {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default)]
        momentum: Vec<f64>,
    },
    /// `ϱ = ϱ₀ + δ cos(πx₁)`, `m = 0`.
    Acoustic {
        #[serde(default = "one")]
        rho: f64,
        amplitude: f64,
    },
    /// `ϱ = ϱ₀ + A exp(−Σ(1 − cos πxᵢ)/(π²σ²))`, `m = 0`.
    GaussianBump {
        #[serde(default = "one")]
        rho: f64,
        amplitude: f64,
        sigma: f64,
    },
    /// Random trigonometric perturbation with modes up to `max_mode`, drawn
    /// from the run seed.
    RandomLowMode {
        #[serde(default = "one")]
        rho: f64,
        amplitude: f64,
        max_mode: u32,
    },
    /// `WEF1` file with a scalar block `rho` and a vector block `m`.
    File { path: PathBuf },
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection::Constant {
            rho: 1.0,
            momentum: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSection {
    /// `Λ(t) = ε exp(−t/ε²)`.
    Exponential { eps: f64 },
    Constant { value: f64 },
    Table { times: Vec<f64>, values: Vec<f64> },
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection::Exponential { eps: 0.1 }
    }
}

fn default_xi() -> Vec<i64> {
    vec![1, 0]
}
fn default_a_dir() -> Vec<i64> {
    vec![0, 1]
}
fn default_ns() -> Vec<u32> {
    vec![2, 4, 8]
}
fn default_fraction() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveSection {
    #[serde(default = "default_xi")]
    pub xi: Vec<i64>,
    #[serde(default = "default_a_dir")]
    pub a_dir: Vec<i64>,
    #[serde(default = "default_ns")]
    pub n: Vec<u32>,
    pub envelope: Envelope,
    /// Envelope horizon; defaults to the solver horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Amplitude search keeps `margin ≥ fraction · μ₀`.
    #[serde(default = "default_fraction")]
    pub target_fraction: f64,
}

impl Default for WaveSection {
    fn default() -> Self {
        Self {
            xi: default_xi(),
            a_dir: default_a_dir(),
            n: default_ns(),
            envelope: Envelope::default(),
            horizon: None,
            target_fraction: default_fraction(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub target_eps: f64,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_time: Option<f64>,
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self {
            target_eps: 0.1,
            p: 2.0,
            match_time: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    /// Start of the ε-halving sweep.
    pub eps_start: f64,
    pub max_halvings: usize,
    pub tolerance: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self {
            eps_start: 0.2,
            max_halvings: 20,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Also dump `H`, `e` and margin fields as `WEF1`.
    pub dump_fields: bool,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    #[serde(default)]
    pub pressure: PressureSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub wave: WaveSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads and validates a config file; relative data paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Missing(format!("config file {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let InitialSection::File { path: p } = &mut cfg.initial {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the canonical JSON form; names the run directory.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn grid(&self) -> Result<TorusGrid, ConfigError> {
        TorusGrid::new(self.grid.dim, self.grid.n).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn law(&self) -> Result<PressureLaw, ConfigError> {
        let inv = |e: crate::field::FieldError| ConfigError::Invalid(format!("pressure: {e}"));
        let (law, interval, rho_ref) = match &self.pressure {
            PressureSection::GammaLaw {
                coef,
                gamma,
                interval,
                rho_ref,
            } => (PressureLaw::gamma_law(*coef, *gamma).map_err(inv)?, interval, rho_ref),
            PressureSection::Table {
                rho,
                p,
                interval,
                rho_ref,
            } => (PressureLaw::table(rho.clone(), p.clone()).map_err(inv)?, interval, rho_ref),
        };
        let law = match interval {
            Some([a, b]) => law.with_interval(*a, *b).map_err(inv)?,
            None => law,
        };
        match rho_ref {
            Some(r) => law.with_rho_ref(*r).map_err(inv),
            None => Ok(law),
        }
    }

    pub fn profile(&self) -> Result<EnergyProfile, ConfigError> {
        let prof = match &self.profile {
            ProfileSection::Exponential { eps } => EnergyProfile::exponential(*eps),
            ProfileSection::Constant { value } => EnergyProfile::constant(*value),
            ProfileSection::Table { times, values } => {
                EnergyProfile::table(times.clone(), values.clone())
            }
        };
        prof.map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Envelope horizon used by wave candidates.
    pub fn wave_horizon(&self) -> f64 {
        self.wave.horizon.unwrap_or(self.solver.t_end)
    }

    pub fn wave_shape(&self, n: u32) -> WaveShape {
        WaveShape {
            xi: self.wave.xi.clone(),
            a_dir: self.wave.a_dir.clone(),
            n,
            envelope: self.wave.envelope,
            horizon: self.wave_horizon(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = self.grid()?;
        let law = self.law()?;
        self.profile()?;
        self.solver
            .validate(grid)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let inv = |m: String| Err(ConfigError::Invalid(m));
        if self.wave.n.is_empty() {
            return inv("wave.n must list at least one frequency multiplier".into());
        }
        for &n in &self.wave.n {
            self.wave_shape(n)
                .validate(grid)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if !(0.0..=1.0).contains(&self.wave.target_fraction) {
            return inv(format!(
                "wave.target_fraction must lie in [0, 1], got {}",
                self.wave.target_fraction
            ));
        }
        if !(self.budget.target_eps > 0.0) || !(self.budget.p >= 1.0 && self.budget.p.is_finite()) {
            return inv("budget needs target_eps > 0 and finite p ≥ 1".into());
        }
        if !(self.window.eps_start > 0.0 && self.window.tolerance > 0.0) {
            return inv("window needs eps_start > 0 and tolerance > 0".into());
        }
        if let InitialSection::Constant { momentum, .. } = &self.initial {
            if !momentum.is_empty() && momentum.len() != grid.dim() {
                return inv(format!("initial.momentum needs {} components", grid.dim()));
            }
        }
        if let InitialSection::File { path } = &self.initial {
            if !path.exists() {
                return Err(ConfigError::Missing(format!("initial data file {}", path.display())));
            }
        }
        let data = self.initial_data()?;
        data.check_density(&law)
            .map_err(|e| ConfigError::Invalid(format!("initial data: {e}")))?;
        Ok(())
    }

    /// Builds the initial state; randomized families draw from `seed`.
    pub fn initial_data(&self) -> Result<FlowState, ConfigError> {
        use std::f64::consts::PI;
        let grid = self.grid()?;
        let d = grid.dim();
        let state = match &self.initial {
            InitialSection::Constant { rho, momentum } => {
                let m = if momentum.is_empty() { vec![0.0; d] } else { momentum.clone() };
                FlowState::constant(grid, *rho, &m)
            }
            InitialSection::Acoustic { rho, amplitude } => FlowState {
                rho: ScalarField::from_fn(grid, |x| rho + amplitude * (PI * x[0]).cos()),
                m: VectorField::zeros(grid),
                time: 0.0,
            },
            InitialSection::GaussianBump {
                rho,
                amplitude,
                sigma,
            } => {
                if !(*sigma > 0.0) {
                    return Err(ConfigError::Invalid("initial.sigma must be positive".into()));
                }
                let w = PI * PI * sigma * sigma;
                FlowState {
                    rho: ScalarField::from_fn(grid, |x| {
                        let s: f64 = x.iter().map(|xi| 1.0 - (PI * xi).cos()).sum();
                        rho + amplitude * (-s / w).exp()
                    }),
                    m: VectorField::zeros(grid),
                    time: 0.0,
                }
            }
            InitialSection::RandomLowMode {
                rho,
                amplitude,
                max_mode,
            } => random_low_mode(grid, self.seed, *rho, *amplitude, *max_mode),
            InitialSection::File { path } => {
                let file = WefFile::load(path)
                    .map_err(|e| ConfigError::Invalid(format!("config file {}: {e}", path.display())))?;
                if file.grid != grid {
                    return Err(ConfigError::Invalid(format!(
                        "{} holds a d={} n={} grid, config asks for d={} n={}",
                        path.display(),
                        file.grid.dim(),
                        file.grid.n(),
                        grid.dim(),
                        grid.n()
                    )));
                }
                let rho = match file.get("rho") {
                    Some(WefBlock::Scalar(f)) => f.clone(),
                    _ => return Err(ConfigError::Invalid("WEF1 data needs a scalar block `rho`".into())),
                };
                let m = match file.get("m") {
                    Some(WefBlock::Vector(f)) => f.clone(),
                    _ => return Err(ConfigError::Invalid("WEF1 data needs a vector block `m`".into())),
                };
                FlowState {
                    rho,
                    m,
                    time: file.time,
                }
            }
        };
        Ok(state)
    }
}

/// `ϱ = ϱ₀ + A Σ aₖ cos(πk·x + φₖ)`, `mᵢ = A Σ bᵢₖ cos(πk·x + ψᵢₖ)` over
/// wave vectors with entries in `[−K, K]`, coefficients normalized so
/// `Σ|aₖ| = 1`.
fn random_low_mode(grid: TorusGrid, seed: u64, rho0: f64, amp: f64, max_mode: u32) -> FlowState {
    use std::f64::consts::PI;
    let d = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = max_mode as i64;
    let mut modes: Vec<[i64; 3]> = Vec::new();
    let range = || -k..=k;
    for a in range() {
        for b in range() {
            for c in if d == 3 { range() } else { 0..=0 } {
                if (a, b, c) != (0, 0, 0) {
                    modes.push([a, b, c]);
                }
            }
        }
    }
    let mut draw = |count: usize| -> Vec<(f64, f64)> {
        let raw: Vec<(f64, f64)> = (0..count)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI)))
            .collect();
        let norm: f64 = raw.iter().map(|r| r.0.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        raw.into_iter().map(|(a, p)| (a / norm, p)).collect()
    };
    let rho_c = draw(modes.len());
    let m_c: Vec<Vec<(f64, f64)>> = (0..d).map(|_| draw(modes.len())).collect();
    let series = |coef: &[(f64, f64)], x: &[f64]| -> f64 {
        modes
            .iter()
            .zip(coef)
            .map(|(kv, (a, ph))| {
                let dot: f64 = (0..x.len()).map(|i| kv[i] as f64 * x[i]).sum();
                a * (PI * dot + ph).cos()
            })
            .sum()
    };
    FlowState {
        rho: ScalarField::from_fn(grid, |x| rho0 + amp * series(&rho_c, x)),
        m: VectorField::from_fn(grid, |x| {
            let mut out = [0.0; 3];
            for (i, c) in m_c.iter().enumerate() {
                out[i] = amp * series(c, x);
            }
            out
        }),
        time: 0.0,
    }
}
