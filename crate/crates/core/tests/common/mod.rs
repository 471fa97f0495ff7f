#![allow(dead_code)]

use std::f64::consts::PI;

use wildlab::field::{FlowState, PressureLaw, ScalarField, TorusGrid, VectorField};

pub fn quadratic_law() -> PressureLaw {
    PressureLaw::gamma_law(1.0, 2.0).unwrap()
}

/// ϱ = 1 + δ cos(πx₁), m = 0.
pub fn acoustic_data(grid: TorusGrid, delta: f64) -> FlowState {
    FlowState::new(
        ScalarField::from_fn(grid, |x| 1.0 + delta * (PI * x[0]).cos()),
        VectorField::zeros(grid),
        0.0,
    )
    .unwrap()
}

/// Standing-wave solution of the linearization about (1, 0) with sound
/// speed c: ϱ = 1 + δ cos(πx₁) cos(cπt), m₁ = δ c sin(πx₁) sin(cπt).
pub fn acoustic_linear(grid: TorusGrid, delta: f64, c: f64, t: f64) -> FlowState {
    FlowState::new(
        ScalarField::from_fn(grid, |x| 1.0 + delta * (PI * x[0]).cos() * (c * PI * t).cos()),
        VectorField::from_fn(grid, |x| {
            [delta * c * (PI * x[0]).sin() * (c * PI * t).sin(), 0.0, 0.0]
        }),
        t,
    )
    .unwrap()
}

pub fn state_distance(a: &FlowState, b: &FlowState) -> f64 {
    let dr = a.rho.zip_map(&b.rho, |x, y| x - y).sup_norm();
    let mut dm = 0.0f64;
    for c in 0..a.grid().dim() {
        dm = dm.max(
            a.m.component_field(c)
                .zip_map(&b.m.component_field(c), |x, y| x - y)
                .sup_norm(),
        );
    }
    dr.max(dm)
}

/// Smooth, strongly nonlinear periodic data used for convergence studies.
pub fn nonlinear_data(grid: TorusGrid) -> FlowState {
    FlowState::new(
        ScalarField::from_fn(grid, |x| 1.0 + 0.2 * (PI * x[0]).cos() * (PI * x[1]).sin()),
        VectorField::from_fn(grid, |x| {
            [0.3 * (PI * x[1]).sin(), 0.2 * (PI * x[0]).cos(), 0.0]
        }),
        0.0,
    )
    .unwrap()
}

/// Periodic Gaussian-like bump ϱ = 1 + A exp(−Σ(1 − cos πxᵢ)/(π²σ²)), m = 0.
pub fn gaussian_bump(grid: TorusGrid, amp: f64, sigma: f64) -> FlowState {
    FlowState::new(
        ScalarField::from_fn(grid, |x| {
            let s: f64 = x.iter().map(|xi| 1.0 - (PI * xi).cos()).sum();
            1.0 + amp * (-s / (PI * PI * sigma * sigma)).exp()
        }),
        VectorField::zeros(grid),
        0.0,
    )
    .unwrap()
}

/// A time-independent trajectory sampled at `samples + 1` equispaced times.
pub fn frozen_solution(state: &FlowState, t_end: f64, samples: usize) -> wildlab::solver::SmoothSolution {
    let traj = (0..=samples)
        .map(|i| {
            let mut s = state.clone();
            s.time = if i == samples { t_end } else { t_end * i as f64 / samples as f64 };
            s
        })
        .collect();
    wildlab::solver::SmoothSolution::from_snapshots(traj, 3).unwrap()
}
