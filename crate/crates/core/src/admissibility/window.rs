use serde::{Deserialize, Serialize};

use super::residual::{energy_gradient, velocity_bound};
use super::AdmissibilityError;
use crate::ansatz::{build_e, EnergyProfile};
use crate::field::{reduce, PressureLaw, Spectral};
use crate::solver::SmoothSolution;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub t: f64,
    /// Worst-case residual `M(t)`.
    pub m: f64,
    pub lambda_prime: f64,
    /// `sup_x [Λ div ũ + V|G|]`.
    pub bracket: f64,
}

/// Horizon on which the pessimized energy inequality holds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub eps: Option<f64>,
    pub t_w: f64,
    pub horizon: f64,
    pub empty: bool,
    pub tolerance: f64,
    /// `sup V` over the sampled snapshots.
    pub v_bound_sup: f64,
    pub curve: Vec<WindowSample>,
    pub advice: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct WindowOptions {
    /// Bisection width in `t`.
    pub tolerance: f64,
    /// Multiplies the speed bound `V`; values above 1 enlarge it.
    pub v_scale: f64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            v_scale: 1.0,
        }
    }
}

/// Window for `M(t) = Λ′(t) + bracket(t)` sampled at `times`: the prefix on
/// which `M ≤ 0`, refined by bisection on the first sign change.
///
/// Returns `(T_w, samples)`; `T_w = 0` with an empty window if `M(t₀) > 0`.
pub fn window_from_bracket<E>(
    times: &[f64],
    prof: &EnergyProfile,
    tolerance: f64,
    mut bracket: impl FnMut(f64) -> Result<f64, E>,
) -> Result<(f64, bool, Vec<WindowSample>), E> {
    let mut curve = Vec::with_capacity(times.len());
    let mut eval = |t: f64, curve: &mut Vec<WindowSample>| -> Result<f64, E> {
        let b = bracket(t)?;
        let dl = prof.derivative(t);
        let m = dl + b;
        curve.push(WindowSample {
            t,
            m,
            lambda_prime: dl,
            bracket: b,
        });
        Ok(m)
    };
    let mut prev: Option<f64> = None;
    for &t in times {
        let m = eval(t, &mut curve)?;
        if !(m <= 0.0) {
            let Some(mut lo) = prev else {
                return Ok((times[0], true, curve));
            };
            let mut hi = t;
            while hi - lo > tolerance {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if eval(mid, &mut curve)? <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            curve.sort_by(|a, b| a.t.total_cmp(&b.t));
            return Ok((lo, false, curve));
        }
        prev = Some(t);
    }
    Ok((*times.last().expect("nonempty sample"), false, curve))
}

/// [`wild_window_with`] using the default options.
pub fn wild_window(
    sol: &SmoothSolution,
    law: &PressureLaw,
    prof: &EnergyProfile,
) -> Result<EnergyWindow, AdmissibilityError> {
    wild_window_with(sol, law, prof, WindowOptions::default())
}

/// `M(t) = Λ′ + sup_x[Λ div ũ + V|G|]` along the trajectory, with states
/// between snapshots interpolated linearly.
pub fn wild_window_with(
    sol: &SmoothSolution,
    law: &PressureLaw,
    prof: &EnergyProfile,
    opts: WindowOptions,
) -> Result<EnergyWindow, AdmissibilityError> {
    let spectral = Spectral::new(sol.grid());
    let mut v_sup = 0.0f64;
    let times = sol.times();
    let mut bracket = |t: f64| -> Result<f64, AdmissibilityError> {
        let state = sol.state_at(t);
        let lambda = prof.value(t);
        let e = build_e(&state, prof, t)?;
        let v = velocity_bound(&state, &e);
        v_sup = v_sup.max(v.max() * opts.v_scale);
        let g = energy_gradient(&spectral, &state, law, lambda)?.magnitude();
        let div_u = spectral.divergence(&state.velocity());
        let vals: Vec<f64> = (0..g.values().len())
            .map(|k| lambda * div_u.values()[k] + opts.v_scale * v.values()[k] * g.values()[k])
            .collect();
        Ok(reduce::max(&vals))
    };
    let (t_w, empty, curve) = window_from_bracket(&times, prof, opts.tolerance, &mut bracket)?;
    let advice = empty.then(|| {
        format!(
            "M(0) = {:e} > 0; retry with a smaller eps, since Λ′(0) = −1/eps dominates as eps → 0",
            curve[0].m
        )
    });
    Ok(EnergyWindow {
        eps: prof.eps(),
        t_w: if empty { 0.0 } else { t_w },
        horizon: sol.t_reached,
        empty,
        tolerance: opts.tolerance,
        v_bound_sup: v_sup,
        curve,
        advice,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsSearch {
    /// First `ε` (halving from the start value) with a nonempty window.
    pub eps: Option<f64>,
    pub window: Option<EnergyWindow>,
    /// `(ε, M(0))` for every tried value.
    pub tried: Vec<(f64, f64)>,
}

/// Halves `ε` from `start` until the exponential profile yields a nonempty
/// window, at most `max_halvings` times.
pub fn first_nonempty_eps(
    sol: &SmoothSolution,
    law: &PressureLaw,
    start: f64,
    max_halvings: usize,
    opts: WindowOptions,
) -> Result<EpsSearch, AdmissibilityError> {
    let mut eps = start;
    let mut tried = Vec::new();
    for _ in 0..=max_halvings {
        let prof = EnergyProfile::exponential(eps)?;
        let w = wild_window_with(sol, law, &prof, opts)?;
        tried.push((eps, w.curve[0].m));
        if !w.empty && w.t_w > 0.0 {
            return Ok(EpsSearch {
                eps: Some(eps),
                window: Some(w),
                tried,
            });
        }
        eps *= 0.5;
    }
    Ok(EpsSearch {
        eps: None,
        window: None,
        tried,
    })
}
