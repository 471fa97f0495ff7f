use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SubsolutionError;
use crate::field::{sym_index, sym_len, SymTensorField, TorusGrid, VectorField};

/// Temporal envelope of a wave candidate on `[0, T]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// `χ(t) = sin²(πt/T)`.
    #[default]
    SinSquared,
}

impl Envelope {
    #[inline]
    pub fn value(self, t: f64, horizon: f64) -> f64 {
        match self {
            Envelope::SinSquared => {
                let s = (PI * t / horizon).sin();
                s * s
            }
        }
    }

    #[inline]
    pub fn derivative(self, t: f64, horizon: f64) -> f64 {
        match self {
            Envelope::SinSquared => PI / horizon * (2.0 * PI * t / horizon).sin(),
        }
    }
}

/// Shape of a plane-wave candidate without its amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveShape {
    pub xi: Vec<i64>,
    /// Polarization; normalized to unit length when the wave is built.
    pub a_dir: Vec<i64>,
    pub n: u32,
    #[serde(default)]
    pub envelope: Envelope,
    /// Horizon `T` of the envelope.
    pub horizon: f64,
}

impl WaveShape {
    pub fn validate(&self, grid: TorusGrid) -> Result<(), SubsolutionError> {
        let d = grid.dim();
        if self.xi.len() != d || self.a_dir.len() != d {
            return Err(SubsolutionError::Wave(format!(
                "xi and a_dir need {d} components"
            )));
        }
        if self.xi.iter().all(|&k| k == 0) || self.a_dir.iter().all(|&k| k == 0) {
            return Err(SubsolutionError::Wave("xi and a_dir must be nonzero".into()));
        }
        let dot: i64 = self.xi.iter().zip(&self.a_dir).map(|(x, a)| x * a).sum();
        if dot != 0 {
            return Err(SubsolutionError::Wave(format!(
                "a_dir·xi = {dot}, the wave must be transversal"
            )));
        }
        if self.n == 0 {
            return Err(SubsolutionError::Wave("frequency multiplier N must be positive".into()));
        }
        let top = self.xi.iter().map(|k| k.unsigned_abs()).max().unwrap() * self.n as u64;
        if 2 * top >= grid.n() as u64 {
            return Err(SubsolutionError::Wave(format!(
                "mode N·xi = {top} is not resolved on n = {}",
                grid.n()
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SubsolutionError::Wave("horizon T must be positive".into()));
        }
        Ok(())
    }

    fn xi_f(&self) -> [f64; 3] {
        let mut x = [0.0; 3];
        for (o, &k) in x.iter_mut().zip(&self.xi) {
            *o = k as f64;
        }
        x
    }

    fn a_unit(&self) -> [f64; 3] {
        let norm = self.a_dir.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
        let mut a = [0.0; 3];
        for (o, &k) in a.iter_mut().zip(&self.a_dir) {
            *o = k as f64 / norm;
        }
        a
    }
}

/// One modulated plane wave `A χ(t) â cos(πN ξ·x)` with its compensating flux.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    #[serde(flatten)]
    pub shape: WaveShape,
    pub amplitude: f64,
}

impl PlaneWave {
    pub fn new(shape: WaveShape, amplitude: f64, grid: TorusGrid) -> Result<Self, SubsolutionError> {
        shape.validate(grid)?;
        if !amplitude.is_finite() {
            return Err(SubsolutionError::Wave("amplitude must be finite".into()));
        }
        Ok(Self { shape, amplitude })
    }

    #[inline]
    fn phase(&self, x: &[f64]) -> f64 {
        let xi = self.shape.xi_f();
        PI * self.shape.n as f64 * x.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `v(t, x)`.
    pub fn velocity_at(&self, t: f64, x: &[f64]) -> [f64; 3] {
        let c = self.amplitude * self.shape.envelope.value(t, self.shape.horizon) * self.phase(x).cos();
        self.shape.a_unit().map(|a| a * c)
    }

    /// `∂t v(t, x)`.
    pub fn rate_at(&self, t: f64, x: &[f64]) -> [f64; 3] {
        let c = self.amplitude * self.shape.envelope.derivative(t, self.shape.horizon) * self.phase(x).cos();
        self.shape.a_unit().map(|a| a * c)
    }

    /// `F(t, x)` in packed order.
    pub fn flux_at(&self, t: f64, x: &[f64]) -> [f64; 6] {
        let d = x.len();
        let xi = self.shape.xi_f();
        let a = self.shape.a_unit();
        let xi2: f64 = xi.iter().map(|k| k * k).sum();
        let coef = -self.amplitude * self.shape.envelope.derivative(t, self.shape.horizon)
            / (PI * self.shape.n as f64 * xi2)
            * self.phase(x).sin();
        let mut out = [0.0; 6];
        for i in 0..d {
            for j in i..d {
                out[sym_index(d, i, j)] = coef * (a[i] * xi[j] + xi[i] * a[j]);
            }
        }
        out
    }
}

/// A candidate subsolution `(v, F)` sampled at fixed times.
#[derive(Clone, Debug)]
pub struct SubsolutionCandidate {
    grid: TorusGrid,
    pub times: Vec<f64>,
    pub v: Vec<VectorField>,
    pub f: Vec<SymTensorField>,
    /// Generating waves; empty for the zero candidate.
    pub waves: Vec<PlaneWave>,
}

impl SubsolutionCandidate {
    pub fn zero(grid: TorusGrid, times: &[f64]) -> Self {
        Self {
            grid,
            times: times.to_vec(),
            v: times.iter().map(|_| VectorField::zeros(grid)).collect(),
            f: times.iter().map(|_| SymTensorField::zeros(grid)).collect(),
            waves: Vec::new(),
        }
    }

    /// Samples a single plane wave at `times`.
    pub fn plane_wave(
        shape: &WaveShape,
        amplitude: f64,
        grid: TorusGrid,
        times: &[f64],
    ) -> Result<Self, SubsolutionError> {
        let wave = PlaneWave::new(shape.clone(), amplitude, grid)?;
        Ok(Self::from_waves(grid, times, vec![wave]))
    }

    pub fn from_waves(grid: TorusGrid, times: &[f64], waves: Vec<PlaneWave>) -> Self {
        let (v, f) = times
            .iter()
            .map(|&t| sample_waves(grid, &waves, t))
            .unzip();
        Self {
            grid,
            times: times.to_vec(),
            v,
            f,
            waves,
        }
    }

    /// Superposition; both candidates must share grid and times.
    pub fn sum(&self, other: &Self) -> Result<Self, SubsolutionError> {
        if self.grid != other.grid || self.times != other.times {
            return Err(SubsolutionError::Cadence(
                "candidates differ in grid or sampling times".into(),
            ));
        }
        let mut out = self.clone();
        for (a, b) in out.v.iter_mut().zip(&other.v) {
            a.axpy(1.0, b);
        }
        for (a, b) in out.f.iter_mut().zip(&other.f) {
            a.axpy(1.0, b);
        }
        out.waves.extend(other.waves.iter().cloned());
        Ok(out)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn velocity_at(&self, t: f64, x: &[f64]) -> [f64; 3] {
        sum_over(&self.waves, |w| w.velocity_at(t, x))
    }

    pub fn rate_at(&self, t: f64, x: &[f64]) -> [f64; 3] {
        sum_over(&self.waves, |w| w.rate_at(t, x))
    }

    pub fn flux_at(&self, t: f64, x: &[f64]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for w in &self.waves {
            for (o, f) in out.iter_mut().zip(w.flux_at(t, x)) {
                *o += f;
            }
        }
        out
    }

    /// `(v, F, ∂t v)` on the grid at an arbitrary `t`, from the generating waves.
    pub fn fields_at(&self, t: f64) -> (VectorField, SymTensorField, VectorField) {
        let (v, f) = sample_waves(self.grid, &self.waves, t);
        let rate = VectorField::from_fn(self.grid, |x| self.rate_at(t, x));
        (v, f, rate)
    }

    /// `sup |v|` over all samples.
    pub fn sup_velocity(&self) -> f64 {
        self.v
            .iter()
            .map(|v| v.magnitude().max())
            .fold(0.0, f64::max)
    }
}

fn sum_over(waves: &[PlaneWave], f: impl Fn(&PlaneWave) -> [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for w in waves {
        for (o, x) in out.iter_mut().zip(f(w)) {
            *o += x;
        }
    }
    out
}

fn sample_waves(grid: TorusGrid, waves: &[PlaneWave], t: f64) -> (VectorField, SymTensorField) {
    let d = grid.dim();
    let pts: Vec<([f64; 3], [f64; 6])> = (0..grid.len())
        .into_par_iter()
        .with_min_len(4096)
        .map(|k| {
            let x = grid.point(k);
            let x = &x[..d];
            let v = sum_over(waves, |w| w.velocity_at(t, x));
            let mut f = [0.0; 6];
            for w in waves {
                for (o, y) in f.iter_mut().zip(w.flux_at(t, x)) {
                    *o += y;
                }
            }
            (v, f)
        })
        .collect();
    let v = VectorField::from_raw(
        grid,
        (0..d).map(|i| pts.iter().map(|p| p.0[i]).collect()).collect(),
    )
    .expect("grid length");
    let f = SymTensorField::from_raw(
        grid,
        (0..sym_len(d)).map(|c| pts.iter().map(|p| p.1[c]).collect()).collect(),
    )
    .expect("grid length")
    .into_traceless()
    .expect("wave flux is traceless");
    (v, f)
}

/// `∫ v·φ` for a sampled `v` and test field `φ`.
pub fn pairing(v: &VectorField, phi: &VectorField) -> f64 {
    v.dot(phi).integral()
}

/// Divergence-free test: spectral `sup |div v|`.
pub fn divergence_defect(spectral: &crate::field::Spectral, v: &VectorField) -> f64 {
    spectral.divergence(v).sup_norm()
}

