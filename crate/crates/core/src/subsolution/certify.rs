use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::candidate::{SubsolutionCandidate, WaveShape};
use super::eigen::{bracket, lambda_max_packed};
use super::SubsolutionError;
use crate::ansatz::AnsatzFields;
use crate::field::reduce;
use crate::field::ScalarField;
use crate::solver::SmoothSolution;

/// Default threshold for treating the margin as strictly positive.
pub const STRICT_TOL: f64 = 1e-10;

const CADENCE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMargin {
    pub time: f64,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub energy_gap_min: f64,
    pub sup_v: f64,
}

/// Outcome of evaluating `e − (d/2) λ_max[(v+m̃)⊗(v+m̃)/ϱ̃ − F − H]` on every
/// grid point and snapshot.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificationReport {
    pub verdict: Verdict,
    pub margin_min: f64,
    pub tolerance: f64,
    pub energy_gap_min: f64,
    pub sup_v: f64,
    /// `√(2 sup ϱ̃e) + sup|m̃|`, the a priori bound for certified candidates.
    pub v_bound: f64,
    pub snapshots: Vec<SnapshotMargin>,
    #[serde(skip)]
    pub margin: Vec<ScalarField>,
    #[serde(skip)]
    pub energy_gap: Vec<ScalarField>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn same_cadence(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= CADENCE_TOL * (1.0 + x.abs()))
}

/// Certifies `cand` against the ansatz built from `sol` using the default
/// strictness tolerance.
pub fn subsolution_margin(
    cand: &SubsolutionCandidate,
    ans: &AnsatzFields,
    sol: &SmoothSolution,
) -> Result<CertificationReport, SubsolutionError> {
    subsolution_margin_with(cand, ans, sol, STRICT_TOL)
}

pub fn subsolution_margin_with(
    cand: &SubsolutionCandidate,
    ans: &AnsatzFields,
    sol: &SmoothSolution,
    tolerance: f64,
) -> Result<CertificationReport, SubsolutionError> {
    let sol_times = sol.times();
    if !same_cadence(&cand.times, &ans.times) || !same_cadence(&ans.times, &sol_times) {
        return Err(SubsolutionError::Cadence(format!(
            "candidate ({} samples), ansatz ({}) and trajectory ({}) are not on the same time cadence",
            cand.times.len(),
            ans.times.len(),
            sol_times.len()
        )));
    }
    let grid = sol.grid();
    if cand.grid() != grid || ans.h.first().map(|h| h.grid()) != Some(grid) {
        return Err(SubsolutionError::Cadence("candidate and ansatz live on different grids".into()));
    }
    let d = grid.dim();
    let half_d = 0.5 * d as f64;

    let mut snapshots = Vec::with_capacity(sol_times.len());
    let mut margins = Vec::with_capacity(sol_times.len());
    let mut gaps = Vec::with_capacity(sol_times.len());
    let mut sup_rho_e = 0.0f64;
    let mut sup_m = 0.0f64;
    for (s, state) in sol.trajectory.iter().enumerate() {
        let (v, f, h, e) = (&cand.v[s], &cand.f[s], &ans.h[s], &ans.e[s]);
        let rho = state.rho.values();
        let ev = e.values();
        let pts: Vec<(f64, f64, f64)> = (0..grid.len())
            .into_par_iter()
            .with_min_len(4096)
            .map(|k| {
                let m = state.m.at(k);
                let vk = v.at(k);
                let mut w = [0.0; 3];
                for i in 0..d {
                    w[i] = vk[i] + m[i];
                }
                let w = &w[..d];
                let b = bracket(d, w, rho[k], &f.at(k), &h.at(k));
                let lam = lambda_max_packed(d, &b);
                let kin = 0.5 * w.iter().map(|x| x * x).sum::<f64>() / rho[k];
                let speed = vk[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
                (ev[k] - half_d * lam, ev[k] - kin, speed)
            })
            .collect();
        let margin: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let gap: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let sup_v = pts.iter().map(|p| p.2).fold(0.0, f64::max);
        snapshots.push(SnapshotMargin {
            time: state.time,
            min: reduce::min(&margin),
            mean: reduce::pairwise_sum(&margin) / margin.len() as f64,
            max: reduce::max(&margin),
            energy_gap_min: reduce::min(&gap),
            sup_v,
        });
        sup_rho_e = sup_rho_e.max(reduce::max(
            &rho.iter().zip(ev).map(|(r, e)| r * e).collect::<Vec<_>>(),
        ));
        sup_m = sup_m.max(state.m.magnitude().max());
        margins.push(ScalarField::new(grid, margin)?);
        gaps.push(ScalarField::new(grid, gap)?);
    }
    let margin_min = snapshots.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let energy_gap_min = snapshots
        .iter()
        .map(|s| s.energy_gap_min)
        .fold(f64::INFINITY, f64::min);
    let sup_v = snapshots.iter().map(|s| s.sup_v).fold(0.0, f64::max);
    let finite = margin_min.is_finite() && sup_v.is_finite();
    let verdict = if finite && margin_min > tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CertificationReport {
        verdict,
        margin_min,
        tolerance,
        energy_gap_min,
        sup_v,
        v_bound: (2.0 * sup_rho_e).sqrt() + sup_m,
        snapshots,
        margin: margins,
        energy_gap: gaps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Certified,
    /// No sampled positive amplitude kept the margin above target.
    NoFeasibleAmplitude,
    /// The zero candidate itself is not certified, so no search was run.
    ZeroCandidateRejected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginSample {
    pub amplitude: f64,
    pub margin_min: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmplitudeSearch {
    pub status: SearchStatus,
    pub amplitude: f64,
    pub margin_at_amplitude: f64,
    pub zero_margin: f64,
    pub target_margin: f64,
    pub curve: Vec<MarginSample>,
    pub message: Option<String>,
}

const MAX_DOUBLINGS: usize = 60;
const BISECTIONS: usize = 48;

/// Largest verified amplitude `A` for which the wave with the given shape
/// keeps `margin_min ≥ fraction · μ₀`, with `μ₀` the zero-candidate margin.
///
/// Brackets by doubling (or halving) from `A = 1` and then bisects; the
/// result is the largest sampled amplitude that met the target.
pub fn max_amplitude_search(
    shape: &WaveShape,
    ans: &AnsatzFields,
    sol: &SmoothSolution,
    fraction: f64,
) -> Result<AmplitudeSearch, SubsolutionError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(SubsolutionError::Wave(format!(
            "target margin fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let grid = sol.grid();
    shape.validate(grid)?;
    let times = sol.times();
    let zero = subsolution_margin(&SubsolutionCandidate::zero(grid, &times), ans, sol)?;
    let mu0 = zero.margin_min;
    let target = fraction * mu0;
    let mut out = AmplitudeSearch {
        status: SearchStatus::ZeroCandidateRejected,
        amplitude: 0.0,
        margin_at_amplitude: mu0,
        zero_margin: mu0,
        target_margin: target,
        curve: vec![MarginSample {
            amplitude: 0.0,
            margin_min: mu0,
        }],
        message: None,
    };
    if !zero.passed() {
        out.message = Some(format!(
            "zero candidate margin {mu0:e} is not above {STRICT_TOL:e}; increase Λ"
        ));
        return Ok(out);
    }
    let mut eval = |a: f64| -> Result<bool, SubsolutionError> {
        let cand = SubsolutionCandidate::plane_wave(shape, a, grid, &times)?;
        let rep = subsolution_margin(&cand, ans, sol)?;
        let ok = rep.passed() && rep.margin_min >= target;
        out.curve.push(MarginSample {
            amplitude: a,
            margin_min: rep.margin_min,
        });
        if ok && a > out.amplitude {
            out.amplitude = a;
            out.margin_at_amplitude = rep.margin_min;
        }
        Ok(ok)
    };
    let (mut lo, mut hi);
    if eval(1.0)? {
        lo = 1.0;
        hi = f64::INFINITY;
        for _ in 0..MAX_DOUBLINGS {
            if eval(2.0 * lo)? {
                lo *= 2.0;
            } else {
                hi = 2.0 * lo;
                break;
            }
        }
    } else {
        hi = 1.0;
        lo = 0.0;
        for _ in 0..MAX_DOUBLINGS {
            if eval(0.5 * hi)? {
                lo = 0.5 * hi;
                break;
            }
            hi *= 0.5;
        }
    }
    if lo > 0.0 && hi.is_finite() {
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if eval(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    out.curve[1..].sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    out.status = if out.amplitude > 0.0 {
        SearchStatus::Certified
    } else {
        out.message = Some("no sampled amplitude kept the margin above target".into());
        SearchStatus::NoFeasibleAmplitude
    };
    Ok(out)
}
