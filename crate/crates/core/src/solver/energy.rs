use serde::{Deserialize, Serialize};

use super::{SmoothSolution, SolverError};
use crate::field::{FlowState, PressureLaw};

/// `t ↦ ∫ ½|m|²/ϱ + P(ϱ)` along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `max_{s<t} (E(t) − E(s))`, zero for a non-increasing profile.
    pub max_increase: f64,
}

impl EnergySeries {
    pub fn drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }
}

pub fn total_energy(state: &FlowState, law: &PressureLaw) -> Result<f64, SolverError> {
    let d = state.grid().dim();
    let mut density = law.potential_field(&state.rho)?;
    let rho = state.rho.values();
    for (k, e) in density.values_mut().iter_mut().enumerate() {
        let mm: f64 = (0..d).map(|c| state.m.component(c)[k].powi(2)).sum();
        *e += 0.5 * mm / rho[k];
    }
    Ok(density.integral())
}

pub fn total_energy_profile(sol: &SmoothSolution, law: &PressureLaw) -> Result<EnergySeries, SolverError> {
    let energy = sol
        .trajectory
        .iter()
        .map(|s| total_energy(s, law))
        .collect::<Result<Vec<_>, _>>()?;
    let mut running_min = f64::INFINITY;
    let mut max_increase = 0.0f64;
    for &e in &energy {
        running_min = running_min.min(e);
        max_increase = max_increase.max(e - running_min);
    }
    Ok(EnergySeries {
        times: sol.times(),
        energy,
        max_increase,
    })
}
