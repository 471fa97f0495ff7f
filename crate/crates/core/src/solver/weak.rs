use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SmoothSolution, SolverError};
use crate::field::reduce::pairwise_sum_by;
use crate::field::{FlowState, PressureLaw, ScalarField, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakForm {
    Mass,
    Momentum,
    Energy,
}

/// Temporal factor `θ(t)` of a separable test function `θ(t) S(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    /// `(1 − t/T)²` on `[0, T]`, zero afterwards; `C¹` with `θ(T) = θ′(T) = 0`.
    QuadraticCutoff { horizon: f64 },
    /// 1 up to `T − w`, then `cos²(π/2 · (t − T + w)/w)` down to 0 at `T`.
    SmoothStep { horizon: f64, width: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::QuadraticCutoff { horizon } => {
                if t >= horizon {
                    0.0
                } else {
                    (1.0 - t / horizon).powi(2)
                }
            }
            TimeProfile::SmoothStep { horizon, width } => {
                let s = t - (horizon - width);
                if s <= 0.0 {
                    1.0
                } else if t >= horizon {
                    0.0
                } else {
                    (0.5 * PI * s / width).cos().powi(2)
                }
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::QuadraticCutoff { horizon } => {
                if t >= horizon {
                    0.0
                } else {
                    -2.0 * (1.0 - t / horizon) / horizon
                }
            }
            TimeProfile::SmoothStep { horizon, width } => {
                let s = t - (horizon - width);
                if s <= 0.0 || t >= horizon {
                    0.0
                } else {
                    -0.5 * PI / width * (PI * s / width).sin()
                }
            }
        }
    }
}

/// One trigonometric term `c cos(π k·x) + s sin(π k·x)` of component
/// `component` of the spatial factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestMode {
    pub component: usize,
    pub wave: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

/// Separable space-time test function `φ(t, x) = θ(t) S(x)` with `S` a
/// (scalar or vector) trigonometric polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub components: usize,
    pub profile: TimeProfile,
    pub modes: Vec<TestMode>,
}

impl TestFunction {
    /// Random low-mode test: every wave vector with `|k_i| ≤ max_mode`
    /// (one per ± pair) gets uniform coefficients in `[-1, 1]` per component.
    pub fn random_low_mode<R: Rng>(
        rng: &mut R,
        components: usize,
        dim: usize,
        max_mode: i32,
        profile: TimeProfile,
    ) -> Self {
        let mut modes = Vec::new();
        let side = 2 * max_mode + 1;
        for flat in 0..side.pow(dim as u32) {
            let mut rem = flat;
            let wave: Vec<i32> = (0..dim)
                .map(|_| {
                    let k = rem % side - max_mode;
                    rem /= side;
                    k
                })
                .collect();
            // keep one representative of ±k
            if wave.iter().find(|&&k| k != 0).is_some_and(|&k| k < 0) {
                continue;
            }
            for component in 0..components {
                modes.push(TestMode {
                    component,
                    wave: wave.clone(),
                    cos: rng.random_range(-1.0..=1.0),
                    sin: if wave.iter().all(|&k| k == 0) {
                        0.0
                    } else {
                        rng.random_range(-1.0..=1.0)
                    },
                });
            }
        }
        Self {
            components,
            profile,
            modes,
        }
    }

    /// Spatially constant nonnegative test `φ = θ(t)`.
    pub fn constant(dim: usize, profile: TimeProfile) -> Self {
        Self {
            components: 1,
            profile,
            modes: vec![TestMode {
                component: 0,
                wave: vec![0; dim],
                cos: 1.0,
                sin: 0.0,
            }],
        }
    }

    /// `S_c(x)` and `∇S_c(x)` for every component on `grid`.
    fn spatial(&self, grid: TorusGrid) -> (Vec<ScalarField>, Vec<Vec<ScalarField>>) {
        let d = grid.dim();
        let comp = |c: usize| {
            let modes: Vec<&TestMode> = self.modes.iter().filter(|m| m.component == c).collect();
            let phase = |m: &TestMode, x: &[f64]| {
                PI * m.wave.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>()
            };
            let value = ScalarField::from_fn(grid, |x| {
                modes
                    .iter()
                    .map(|m| {
                        let th = phase(m, x);
                        m.cos * th.cos() + m.sin * th.sin()
                    })
                    .sum()
            });
            let grad = (0..d)
                .map(|j| {
                    ScalarField::from_fn(grid, |x| {
                        modes
                            .iter()
                            .map(|m| {
                                let th = phase(m, x);
                                PI * m.wave[j] as f64 * (-m.cos * th.sin() + m.sin * th.cos())
                            })
                            .sum()
                    })
                })
                .collect();
            (value, grad)
        };
        (0..self.components).map(comp).unzip()
    }
}

/// `∫_{t0}^{t1} [A(t) θ′(t) + B(t) θ(t)] dt` with `A`, `B` linear between
/// their endpoint values and `θ` taken analytically.
fn product_integral(profile: &TimeProfile, t: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let span = t[1] - t[0];
    let f = |tau: f64| {
        let s = (tau - t[0]) / span;
        let lin = |v: [f64; 2]| v[0] + s * (v[1] - v[0]);
        lin(a) * profile.derivative(tau) + lin(b) * profile.value(tau)
    };
    crate::field::integrate(&f, t[0], t[1], 1e-16)
}

/// Weak-form defect of a computed trajectory against a test function.
///
/// * `Mass`: `∫∫ ϱ ∂tφ + m·∇φ + ∫ ϱ₀ φ(0)`
/// * `Momentum`: `∫∫ m·∂tφ + (m⊗m/ϱ):∇φ + p div φ + ∫ m₀·φ(0)`
/// * `Energy`: `∫∫ E ∂tφ + (E + p) u·∇φ + ∫ E₀ φ(0)`, `E = ½|m|²/ϱ + P(ϱ)`;
///   admissibility asks for this to be nonnegative.
///
/// With `φ = θ(t) S(x)` each snapshot contributes two spatial moments,
/// `A = ∫ q S` (paired with `θ′`) and `B = ∫ flux : ∇S` (paired with `θ`),
/// computed by trapezoidal quadrature on the grid. In time the moments are
/// interpolated linearly between snapshots and integrated against the exact
/// `θ`, which makes the rule exact whenever the state is constant in time.
/// The test must vanish at the final snapshot time.
pub fn weak_residual(
    sol: &SmoothSolution,
    law: &PressureLaw,
    test: &TestFunction,
    which: WeakForm,
) -> Result<f64, SolverError> {
    let grid = sol.grid();
    let d = grid.dim();
    let expected = match which {
        WeakForm::Momentum => d,
        _ => 1,
    };
    if test.components != expected {
        return Err(SolverError::TestFunction(format!(
            "{which:?} form needs {expected} test component(s), got {}",
            test.components
        )));
    }
    if test.modes.iter().any(|m| m.wave.len() != d || m.component >= expected) {
        return Err(SolverError::TestFunction("mode shape does not match the grid".into()));
    }
    let (s, grad_s) = test.spatial(grid);
    let t_end = sol.t_reached;
    let at_end = test.profile.value(t_end) * s.iter().map(|f| f.sup_norm()).fold(0.0, f64::max);
    if at_end > 1e-14 {
        return Err(SolverError::TestFunction(format!(
            "test function does not vanish at t = {t_end} (max |φ| = {at_end:e})"
        )));
    }
    if which == WeakForm::Energy && s[0].min() < -1e-14 {
        return Err(SolverError::TestFunction(
            "energy test function must be nonnegative".into(),
        ));
    }

    let w = grid.cell_volume();
    let moments = |state: &FlowState| -> Result<(f64, f64), SolverError> {
        let rho = state.rho.values();
        let m = &state.m;
        let potential = match which {
            WeakForm::Energy => Some(law.potential_field(&state.rho)?),
            _ => None,
        };
        let (a, b) = match which {
            WeakForm::Mass => (
                pairwise_sum_by(grid.len(), &|k| rho[k] * s[0].values()[k]),
                pairwise_sum_by(grid.len(), &|k| {
                    (0..d).map(|j| m.component(j)[k] * grad_s[0][j].values()[k]).sum()
                }),
            ),
            WeakForm::Momentum => (
                pairwise_sum_by(grid.len(), &|k| {
                    (0..d).map(|i| m.component(i)[k] * s[i].values()[k]).sum()
                }),
                pairwise_sum_by(grid.len(), &|k| {
                    let p = law.pressure(rho[k]);
                    let mut v = 0.0;
                    for i in 0..d {
                        let mi = m.component(i)[k];
                        for j in 0..d {
                            v += mi * m.component(j)[k] / rho[k] * grad_s[i][j].values()[k];
                        }
                        v += p * grad_s[i][i].values()[k];
                    }
                    v
                }),
            ),
            WeakForm::Energy => {
                let pot = potential.as_ref().unwrap().values();
                let energy = |k: usize| {
                    let mm: f64 = (0..d).map(|j| m.component(j)[k].powi(2)).sum();
                    0.5 * mm / rho[k] + pot[k]
                };
                (
                    pairwise_sum_by(grid.len(), &|k| energy(k) * s[0].values()[k]),
                    pairwise_sum_by(grid.len(), &|k| {
                        let flux = (energy(k) + law.pressure(rho[k])) / rho[k];
                        (0..d)
                            .map(|j| flux * m.component(j)[k] * grad_s[0][j].values()[k])
                            .sum()
                    }),
                )
            }
        };
        Ok((w * a, w * b))
    };

    let mut a = Vec::with_capacity(sol.trajectory.len());
    let mut b = Vec::with_capacity(sol.trajectory.len());
    for state in &sol.trajectory {
        let (ak, bk) = moments(state)?;
        a.push(ak);
        b.push(bk);
    }
    let times = sol.times();
    let mut total = 0.0;
    for k in 0..times.len().saturating_sub(1) {
        total += product_integral(
            &test.profile,
            [times[k], times[k + 1]],
            [a[k], a[k + 1]],
            [b[k], b[k + 1]],
        );
    }
    Ok(total + test.profile.value(times[0]) * a[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_smooth, SolverConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_run() -> (SmoothSolution, PressureLaw) {
        let g = TorusGrid::new(2, 16).unwrap();
        let law = PressureLaw::gamma_law(1.0, 2.0).unwrap();
        let data = FlowState::constant(g, 1.2, &[0.3, -0.1]);
        let sol = solve_smooth(&data, &law, &SolverConfig::default().with_t_end(0.2)).unwrap();
        (sol, law)
    }

    #[test]
    fn profiles_are_c1_and_vanish_at_horizon() {
        for p in [
            TimeProfile::QuadraticCutoff { horizon: 0.5 },
            TimeProfile::SmoothStep { horizon: 0.5, width: 0.1 },
        ] {
            assert_eq!(p.value(0.5), 0.0);
            assert!(p.derivative(0.5).abs() < 1e-12);
            for t in [0.05, 0.2, 0.43, 0.47] {
                let fd = (p.value(t + 1e-6) - p.value(t - 1e-6)) / 2e-6;
                assert!((fd - p.derivative(t)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_state_residuals_vanish() {
        let (sol, law) = constant_run();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let profile = TimeProfile::QuadraticCutoff { horizon: sol.t_reached };
        let mass = TestFunction::random_low_mode(&mut rng, 1, 2, 2, profile);
        let mom = TestFunction::random_low_mode(&mut rng, 2, 2, 2, profile);
        let energy = TestFunction::constant(2, TimeProfile::SmoothStep { horizon: sol.t_reached, width: 0.05 });
        assert!(weak_residual(&sol, &law, &mass, WeakForm::Mass).unwrap().abs() <= 1e-10);
        assert!(weak_residual(&sol, &law, &mom, WeakForm::Momentum).unwrap().abs() <= 1e-10);
        assert!(weak_residual(&sol, &law, &energy, WeakForm::Energy).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn rejects_tests_alive_at_final_time() {
        let (sol, law) = constant_run();
        let t = TestFunction::constant(2, TimeProfile::QuadraticCutoff { horizon: 2.0 * sol.t_reached });
        assert!(matches!(
            weak_residual(&sol, &law, &t, WeakForm::Mass),
            Err(SolverError::TestFunction(_))
        ));
    }

    #[test]
    fn rejects_wrong_component_count() {
        let (sol, law) = constant_run();
        let t = TestFunction::constant(2, TimeProfile::QuadraticCutoff { horizon: sol.t_reached });
        assert!(weak_residual(&sol, &law, &t, WeakForm::Momentum).is_err());
    }
}
