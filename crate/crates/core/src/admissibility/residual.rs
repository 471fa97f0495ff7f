use super::AdmissibilityError;
use crate::ansatz::{kinetic_energy, AnsatzFields, EnergyProfile};
use crate::field::{FlowState, PressureLaw, ScalarField, Spectral, VectorField};
use crate::solver::SmoothSolution;

/// `G = ∇[(½|m̃|²/ϱ̃ + P(ϱ̃) + p(ϱ̃))/ϱ̃] + Λ ∇(1/ϱ̃)`.
pub fn energy_gradient(
    spectral: &Spectral,
    state: &FlowState,
    law: &PressureLaw,
    lambda: f64,
) -> Result<VectorField, AdmissibilityError> {
    let kin = kinetic_energy(state);
    let pot = law.potential_field(&state.rho)?;
    let p = law.pressure_field(&state.rho);
    let rho = state.rho.values();
    let enthalpy = ScalarField::new(
        state.grid(),
        (0..rho.len())
            .map(|k| (kin.values()[k] + pot.values()[k] + p.values()[k]) / rho[k])
            .collect(),
    )?;
    let mut g = spectral.gradient(&enthalpy);
    if lambda != 0.0 {
        g.axpy(lambda, &spectral.gradient(&state.rho.map(|r| 1.0 / r)));
    }
    Ok(g)
}

/// `R = Λ′ + Λ div ũ + G·v` at time `t`, for a divergence-free `v`.
pub fn energy_residual(
    spectral: &Spectral,
    sol: &SmoothSolution,
    law: &PressureLaw,
    prof: &EnergyProfile,
    t: f64,
    v: &VectorField,
) -> Result<ScalarField, AdmissibilityError> {
    let div_v = spectral.divergence(v).sup_norm();
    if div_v > 1e-9 * (1.0 + v.sup_norm()) {
        return Err(AdmissibilityError::Divergence(div_v));
    }
    let state = sol.state_at(t);
    let lambda = prof.value(t);
    let g = energy_gradient(spectral, &state, law, lambda)?;
    let div_u = spectral.divergence(&state.velocity());
    let gv = g.dot(v);
    let dl = prof.derivative(t);
    Ok(div_u.zip_map(&gv, |du, gv| dl + lambda * du + gv))
}

/// `V = √(2ϱ̃e) + |m̃|`, bounding `|v|` for any `v` with `|v + m̃|² ≤ 2ϱ̃e`.
pub fn velocity_bound(state: &FlowState, e: &ScalarField) -> ScalarField {
    let mag = state.m.magnitude();
    let root = state.rho.zip_map(e, |r, e| (2.0 * r * e).max(0.0).sqrt());
    root.zip_map(&mag, |a, b| a + b)
}

/// [`velocity_bound`] at every snapshot of the ansatz.
pub fn velocity_bounds(ans: &AnsatzFields, sol: &SmoothSolution) -> Vec<ScalarField> {
    sol.trajectory
        .iter()
        .zip(&ans.e)
        .map(|(s, e)| velocity_bound(s, e))
        .collect()
}
