use serde::{Deserialize, Serialize};

use super::AdmissibilityError;
use crate::ansatz::EnergyProfile;
use crate::field::{FlowState, ScalarField};
use crate::solver::SmoothSolution;
use crate::subsolution::{PlaneWave, WaveShape};

/// `Λ(0) = ε²/(2∫ϱ̃₀)`, so that `√(2Λ(0)∫ϱ̃₀) ≤ ε`.
pub fn choose_lambda0(target_eps: f64, rho0: &ScalarField) -> Result<f64, AdmissibilityError> {
    if !(target_eps > 0.0 && target_eps.is_finite()) {
        return Err(AdmissibilityError::Budget(format!(
            "target eps must be positive, got {target_eps}"
        )));
    }
    let mass = rho0.integral();
    if !(mass > 0.0) {
        return Err(AdmissibilityError::Budget(format!("total mass {mass} is not positive")));
    }
    // squaring the scaled root keeps the result exact in common cases
    let s = target_eps / (2.0 * mass).sqrt();
    let mut lambda0 = s * s;
    while (2.0 * lambda0 * mass).sqrt() > target_eps {
        lambda0 = f64::from_bits(lambda0.to_bits() - 1);
    }
    Ok(lambda0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpRoute {
    /// `p = 2`, computed directly.
    Direct,
    /// `p > 2`: `‖f‖_p ≤ ‖f‖_∞^{1−2/p} ‖f‖_2^{2/p}`.
    Interpolation,
    /// `p < 2`: `‖f‖_p ≤ |𝕋|^{1/p−1/2} ‖f‖_2`.
    Holder,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpCloseness {
    pub p: f64,
    pub route: LpRoute,
    /// Bound on `‖ϱ_a − ϱ_b‖_p` via `route`.
    pub rho: f64,
    /// Bound on `‖u_a − u_b‖_p` via `route`.
    pub u: f64,
    pub rho_direct: f64,
    pub u_direct: f64,
}

/// `L^p` distances of densities and velocities, transferred from `L²`.
pub fn lp_closeness(a: &FlowState, b: &FlowState, p: f64) -> Result<LpCloseness, AdmissibilityError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(AdmissibilityError::Budget(format!("p must be finite and ≥ 1, got {p}")));
    }
    if a.grid() != b.grid() {
        return Err(AdmissibilityError::Budget("states live on different grids".into()));
    }
    let route = if p == 2.0 {
        LpRoute::Direct
    } else if p > 2.0 {
        LpRoute::Interpolation
    } else {
        LpRoute::Holder
    };
    let vol = a.grid().volume();
    let transfer = |f: &ScalarField| -> f64 {
        let l2 = f.lp_norm(2.0);
        match route {
            LpRoute::Direct => l2,
            LpRoute::Interpolation => f.sup_norm().powf(1.0 - 2.0 / p) * l2.powf(2.0 / p),
            LpRoute::Holder => vol.powf(1.0 / p - 0.5) * l2,
        }
    };
    let drho = a.rho.zip_map(&b.rho, |x, y| x - y).map(f64::abs);
    let mut du = a.velocity();
    du.axpy(-1.0, &b.velocity());
    let du = du.magnitude();
    Ok(LpCloseness {
        p,
        route,
        rho: transfer(&drho),
        u: transfer(&du),
        rho_direct: drho.lp_norm(p),
        u_direct: du.lp_norm(p),
    })
}

/// Effective amplitude `A` of `v = A â cos(πN ξ·x)` for which the
/// integrated energy constraint `∫(|v+m̃|² − |m̃|²)/(2ϱ̃) = Λ|𝕋|` holds.
pub fn energy_matched_amplitude(state: &FlowState, shape: &WaveShape, lambda: f64) -> f64 {
    let grid = state.grid();
    let unit = PlaneWave {
        shape: WaveShape {
            horizon: 2.0,
            ..shape.clone()
        },
        amplitude: 1.0,
    };
    // χ(1) = 1 for the default envelope on [0, 2]
    let phi = crate::field::VectorField::from_fn(grid, |x| unit.velocity_at(1.0, x));
    let inv_rho = state.rho.map(|r| 1.0 / r);
    let qa = 0.5 * phi.dot(&phi).zip_map(&inv_rho, |a, b| a * b).integral();
    let qb = phi.dot(&state.m).zip_map(&inv_rho, |a, b| a * b).integral();
    let qc = lambda * grid.volume();
    let disc = (qb * qb + 4.0 * qa * qc).sqrt();
    if qb >= 0.0 {
        2.0 * qc / (qb + disc)
    } else {
        (disc - qb) / (2.0 * qa)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub n: u32,
    /// Wave amplitude `A` whose field at the matching time meets the constraint.
    pub amplitude: f64,
    pub l2_norm: f64,
    pub within_budget: bool,
    pub closeness: LpCloseness,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetReport {
    pub target_eps: f64,
    pub lambda0: f64,
    pub mass: f64,
    pub predicted_l2: f64,
    pub match_time: f64,
    pub lambda_at_match: f64,
    pub entries: Vec<BudgetEntry>,
    /// Smallest listed `N` from which every larger listed `N` stays within budget.
    pub n0: Option<u32>,
}

/// Picks `Λ(0)` for `target_eps` and measures energy-matched waves of the
/// given shape for each `N` in `ns` at `match_time` (default: the first
/// positive snapshot time). The profile is rescaled to start at `Λ(0)`.
pub fn budget_report(
    sol: &SmoothSolution,
    prof: &EnergyProfile,
    shape: &WaveShape,
    ns: &[u32],
    target_eps: f64,
    p: f64,
    match_time: Option<f64>,
) -> Result<BudgetReport, AdmissibilityError> {
    let rho0 = &sol.initial().rho;
    let lambda0 = choose_lambda0(target_eps, rho0)?;
    let mass = rho0.integral();
    let scaled = prof.scaled(lambda0 / prof.value(sol.initial().time));
    let times = sol.times();
    let tau = match match_time {
        Some(t) => t,
        None => times.iter().copied().find(|&t| t > times[0]).unwrap_or(times[0]),
    };
    if !(tau > 0.0 && tau < shape.horizon) {
        return Err(AdmissibilityError::Budget(format!(
            "matching time {tau} must lie inside the envelope horizon (0, {})",
            shape.horizon
        )));
    }
    let lambda = scaled.value(tau);
    let state = sol.state_at(tau);
    let grid = state.grid();
    let mut entries = Vec::with_capacity(ns.len());
    for &n in ns {
        let sh = WaveShape { n, ..shape.clone() };
        sh.validate(grid)?;
        let eff = energy_matched_amplitude(&state, &sh, lambda);
        let chi = sh.envelope.value(tau, sh.horizon);
        let wave = PlaneWave::new(sh, eff / chi, grid)?;
        let v = crate::field::VectorField::from_fn(grid, |x| wave.velocity_at(tau, x));
        let l2 = v.lp_norm(2.0);
        let mut perturbed = state.clone();
        perturbed.m.axpy(1.0, &v);
        entries.push(BudgetEntry {
            n,
            amplitude: wave.amplitude,
            l2_norm: l2,
            within_budget: l2 <= target_eps,
            closeness: lp_closeness(&state, &perturbed, p)?,
        });
    }
    let mut order: Vec<&BudgetEntry> = entries.iter().collect();
    order.sort_by_key(|e| e.n);
    let mut n0 = None;
    for e in order.iter().rev() {
        if e.within_budget {
            n0 = Some(e.n);
        } else {
            break;
        }
    }
    Ok(BudgetReport {
        target_eps,
        lambda0,
        mass,
        predicted_l2: (2.0 * lambda0 * mass).sqrt(),
        match_time: tau,
        lambda_at_match: lambda,
        entries,
        n0,
    })
}
