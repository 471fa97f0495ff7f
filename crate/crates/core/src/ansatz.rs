//! Convex-integration data built from a smooth solution `(ϱ̃, m̃)`:
//!
//! * `H = m̃⊗m̃/ϱ̃ − (1/d)(|m̃|²/ϱ̃) I`, the traceless part of the convective flux;
//! * `e = ½|m̃|²/ϱ̃ + Λ(t)`, the prescribed kinetic energy;
//! * `Λ`, a positive, nonincreasing, spatially homogeneous energy profile.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{
    sym_index, FieldError, FlowState, MonotoneCubic, ScalarField, Spectral, SymTensorField,
    VectorField,
};
use crate::solver::SmoothSolution;

#[derive(Debug, Error)]
pub enum AnsatzError {
    #[error("energy profile: {0}")]
    Profile(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ProfileKind {
    Exponential { eps: f64 },
    Constant { value: f64 },
    User { value: ProfileFn, derivative: ProfileFn },
    Table(MonotoneCubic),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTag {
    Exponential,
    Constant,
    UserSupplied,
}

/// `Λ(t)` carried analytically together with `Λ′(t)`.
#[derive(Clone)]
pub struct EnergyProfile {
    kind: ProfileKind,
}

impl fmt::Debug for EnergyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Exponential { eps } => write!(f, "EnergyProfile::Exponential(eps={eps})"),
            ProfileKind::Constant { value } => write!(f, "EnergyProfile::Constant({value})"),
            ProfileKind::User { .. } => write!(f, "EnergyProfile::UserSupplied"),
            ProfileKind::Table(c) => write!(f, "EnergyProfile::Table({} knots)", c.knots().len()),
        }
    }
}

impl EnergyProfile {
    /// `Λ(t) = ε exp(−t/ε²)`.
    pub fn exponential(eps: f64) -> Result<Self, AnsatzError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(AnsatzError::Profile(format!("eps must be positive, got {eps}")));
        }
        Ok(Self {
            kind: ProfileKind::Exponential { eps },
        })
    }

    /// Time-independent `Λ`; must be strictly positive.
    pub fn constant(value: f64) -> Result<Self, AnsatzError> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(AnsatzError::Profile(format!(
                "Λ must be strictly positive for the zero field to be a subsolution, got {value}"
            )));
        }
        Ok(Self {
            kind: ProfileKind::Constant { value },
        })
    }

    /// User-supplied `C¹` pair. `Λ′` is checked against a centered
    /// difference of `Λ` (to 1e-6) and for `Λ′ ≤ 0` on `samples`.
    pub fn user<F, G>(value: F, derivative: G, samples: &[f64]) -> Result<Self, AnsatzError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        const H: f64 = 1e-5;
        for &t in samples {
            let fd = (value(t + H) - value(t - H)) / (2.0 * H);
            let dl = derivative(t);
            if !((fd - dl).abs() <= 1e-6) {
                return Err(AnsatzError::Profile(format!(
                    "Λ′({t}) = {dl} disagrees with the difference quotient {fd}"
                )));
            }
            if dl > 0.0 {
                return Err(AnsatzError::Profile(format!("Λ is increasing at t = {t}")));
            }
        }
        Ok(Self {
            kind: ProfileKind::User {
                value: Arc::new(value),
                derivative: Arc::new(derivative),
            },
        })
    }

    /// Monotone cubic interpolant of positive, nonincreasing samples;
    /// constant outside the sampled interval.
    pub fn table(times: Vec<f64>, values: Vec<f64>) -> Result<Self, AnsatzError> {
        if values.iter().any(|&v| !(v > 0.0)) {
            return Err(AnsatzError::Profile(
                "tabulated Λ must be strictly positive".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(AnsatzError::Profile("tabulated Λ must be nonincreasing".into()));
        }
        let curve = MonotoneCubic::new(times, values).ok_or_else(|| {
            AnsatzError::Profile(
                "profile table needs at least two finite samples at increasing times".into(),
            )
        })?;
        Ok(Self {
            kind: ProfileKind::Table(curve),
        })
    }

    pub fn tag(&self) -> ProfileTag {
        match self.kind {
            ProfileKind::Exponential { .. } => ProfileTag::Exponential,
            ProfileKind::Constant { .. } => ProfileTag::Constant,
            ProfileKind::User { .. } | ProfileKind::Table(_) => ProfileTag::UserSupplied,
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Exponential { eps } => Some(eps),
            _ => None,
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Exponential { eps } => eps * (-t / (eps * eps)).exp(),
            ProfileKind::Constant { value } => *value,
            ProfileKind::User { value, .. } => value(t),
            ProfileKind::Table(c) => {
                let k = c.knots();
                c.eval(t.clamp(k[0], k[k.len() - 1])).0
            }
        }
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        match &self.kind {
            ProfileKind::Exponential { eps } => -(-t / (eps * eps)).exp() / eps,
            ProfileKind::Constant { .. } => 0.0,
            ProfileKind::User { derivative, .. } => derivative(t),
            ProfileKind::Table(c) => {
                let k = c.knots();
                if t < k[0] || t > k[k.len() - 1] {
                    0.0
                } else {
                    c.eval(t).1
                }
            }
        }
    }

    /// Same profile with `Λ` scaled by `factor > 0` (`ε` is not rescaled for
    /// the exponential kind; the result is a user-supplied pair).
    pub fn scaled(&self, factor: f64) -> Self {
        let base = self.clone();
        let base2 = self.clone();
        match &self.kind {
            ProfileKind::Constant { value } => Self {
                kind: ProfileKind::Constant { value: value * factor },
            },
            _ => Self {
                kind: ProfileKind::User {
                    value: Arc::new(move |t| factor * base.value(t)),
                    derivative: Arc::new(move |t| factor * base2.derivative(t)),
                },
            },
        }
    }

    fn require_positive(&self, t: f64) -> Result<f64, AnsatzError> {
        let v = self.value(t);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(AnsatzError::Profile(format!(
                "Λ({t}) = {v} must be strictly positive"
            )))
        }
    }
}

/// `½|m̃|²/ϱ̃` pointwise.
pub fn kinetic_energy(state: &FlowState) -> ScalarField {
    let d = state.grid().dim();
    let rho = state.rho.values();
    let values = (0..rho.len())
        .map(|k| {
            let m = state.m.at(k);
            0.5 * m[..d].iter().map(|x| x * x).sum::<f64>() / rho[k]
        })
        .collect();
    ScalarField::new(state.grid(), values).expect("grid length")
}

/// `H = m̃⊗m̃/ϱ̃ − (1/d)(|m̃|²/ϱ̃) I`, flagged traceless.
pub fn build_h(state: &FlowState) -> SymTensorField {
    let grid = state.grid();
    let d = grid.dim();
    let rho = state.rho.values();
    let mut h = SymTensorField::zeros(grid);
    {
        let comps = h.packed_mut();
        for k in 0..grid.len() {
            let m = state.m.at(k);
            let q = m[..d].iter().map(|x| x * x).sum::<f64>() / rho[k] / d as f64;
            for i in 0..d {
                for j in i..d {
                    let mut v = m[i] * m[j] / rho[k];
                    if i == j {
                        v -= q;
                    }
                    comps[sym_index(d, i, j)][k] = v;
                }
            }
        }
    }
    h.into_traceless().expect("H is traceless by construction")
}

/// `e = ½|m̃|²/ϱ̃ + Λ(t)`; fails unless `Λ(t) > 0`.
pub fn build_e(state: &FlowState, prof: &EnergyProfile, t: f64) -> Result<ScalarField, AnsatzError> {
    let lambda = prof.require_positive(t)?;
    Ok(kinetic_energy(state).map(|k| k + lambda))
}

/// `H` and `e` sampled at the snapshot times of a smooth solution.
#[derive(Clone, Debug)]
pub struct AnsatzFields {
    pub times: Vec<f64>,
    pub h: Vec<SymTensorField>,
    pub e: Vec<ScalarField>,
    kinetic: Vec<ScalarField>,
    profile: EnergyProfile,
}

impl AnsatzFields {
    pub fn build(sol: &SmoothSolution, profile: &EnergyProfile) -> Result<Self, AnsatzError> {
        let mut out = Self {
            times: Vec::with_capacity(sol.trajectory.len()),
            h: Vec::with_capacity(sol.trajectory.len()),
            e: Vec::with_capacity(sol.trajectory.len()),
            kinetic: Vec::with_capacity(sol.trajectory.len()),
            profile: profile.clone(),
        };
        for state in &sol.trajectory {
            let lambda = profile.require_positive(state.time)?;
            let kin = kinetic_energy(state);
            out.times.push(state.time);
            out.h.push(build_h(state));
            out.e.push(kin.map(|k| k + lambda));
            out.kinetic.push(kin);
        }
        Ok(out)
    }

    pub fn profile(&self) -> &EnergyProfile {
        &self.profile
    }

    /// `(H, e)` at an arbitrary `t`: linear in time between snapshots for
    /// `H` and `½|m̃|²/ϱ̃`, with `Λ(t)` evaluated exactly.
    pub fn at(&self, t: f64) -> Result<(SymTensorField, ScalarField), AnsatzError> {
        let lambda = self.profile.require_positive(t)?;
        let last = self.times.len() - 1;
        let (i, theta) = if t <= self.times[0] {
            (0, 0.0)
        } else if t >= self.times[last] {
            (last, 0.0)
        } else {
            let j = self.times.partition_point(|&s| s <= t) - 1;
            (j, (t - self.times[j]) / (self.times[j + 1] - self.times[j]))
        };
        if theta == 0.0 {
            return Ok((self.h[i].clone(), self.kinetic[i].map(|k| k + lambda)));
        }
        let mut h = self.h[i].clone();
        let mut dh = self.h[i + 1].clone();
        dh.axpy(-1.0, &self.h[i]);
        h.axpy(theta, &dh);
        let e = self.kinetic[i].zip_map(&self.kinetic[i + 1], |a, b| a + theta * (b - a) + lambda);
        Ok((h.into_traceless()?, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReformulationGap {
    /// `sup |div(flux_C4 − flux_C7)|`; the two fluxes differ by
    /// `(1/d)(|v+m̃|² − |m̃|²)/ϱ̃ · I`, whose divergence vanishes iff that
    /// scalar is constant in space.
    pub flux_gap: f64,
    /// `sup |½|v+m̃|²/ϱ̃ − ½|m̃|²/ϱ̃ − Λ(t)|`.
    pub energy_defect: f64,
}

/// Compares the two flux formulations of the perturbation equation for a
/// given divergence-free `v`.
pub fn reformulation_gap(
    spectral: &Spectral,
    v: &VectorField,
    state: &FlowState,
    prof: &EnergyProfile,
    t: f64,
) -> ReformulationGap {
    let grid = state.grid();
    let d = grid.dim();
    let rho = state.rho.values();
    let mut c4 = SymTensorField::zeros(grid);
    let mut c7 = SymTensorField::zeros(grid);
    let lambda = prof.value(t);
    let mut defect = 0.0f64;
    {
        let (p4, p7) = (c4.packed_mut(), c7.packed_mut());
        for k in 0..grid.len() {
            let m = state.m.at(k);
            let vk = v.at(k);
            let w: Vec<f64> = (0..d).map(|i| vk[i] + m[i]).collect();
            let ww: f64 = w.iter().map(|x| x * x).sum::<f64>() / rho[k];
            let mm: f64 = m[..d].iter().map(|x| x * x).sum::<f64>() / rho[k];
            defect = defect.max((0.5 * ww - 0.5 * mm - lambda).abs());
            for i in 0..d {
                for j in i..d {
                    let base = (w[i] * w[j] - m[i] * m[j]) / rho[k];
                    let idx = sym_index(d, i, j);
                    p4[idx][k] = base;
                    p7[idx][k] = if i == j {
                        base - ww / d as f64 + mm / d as f64
                    } else {
                        base
                    };
                }
            }
        }
    }
    let div4 = spectral.tensor_divergence(&c4);
    let div7 = spectral.tensor_divergence(&c7);
    let mut diff = div4;
    diff.axpy(-1.0, &div7);
    ReformulationGap {
        flux_gap: diff.sup_norm(),
        energy_defect: defect,
    }
}
