mod common;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wildlab::ansatz::{build_h, AnsatzFields, EnergyProfile};
use wildlab::field::{FlowState, ScalarField, Spectral, TorusGrid, VectorField};
use wildlab::subsolution::{
    divergence_defect, lambda_max_packed, max_amplitude_search, pairing, relaxation_slack,
    subsolution_margin, SearchStatus, SubsolutionCandidate, SubsolutionError, Verdict, WaveShape,
};

use common::frozen_solution;

fn shape(n: u32, horizon: f64) -> WaveShape {
    WaveShape {
        xi: vec![1, 0],
        a_dir: vec![0, 1],
        n,
        envelope: Default::default(),
        horizon,
    }
}

#[test]
fn identity_after_zero_candidate() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in [2usize, 3] {
        let grid = TorusGrid::new(d, 8).unwrap();
        let rho: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.2..3.0)).collect();
        let mut s =
            FlowState::new(ScalarField::new(grid, rho).unwrap(), VectorField::zeros(grid), 0.0)
                .unwrap();
        for i in 0..d {
            for x in s.m.component_mut(i) {
                *x = rng.random_range(-2.0..2.0);
            }
        }
        let h = build_h(&s);
        for k in 0..grid.len() {
            let m = s.m.at(k);
            let rho = s.rho.values()[k];
            let kin = 0.5 * m[..d].iter().map(|x| x * x).sum::<f64>() / rho;
            let len = h.packed().len();
            let slack = relaxation_slack(&m[..d], rho, &[0.0; 6][..len], &h.at(k)[..len]);
            assert!(slack.abs() <= 1e-12 * (1.0 + kin), "{slack}");
        }
    }
}

#[test]
fn zero_candidate_margins() {
    let grid = TorusGrid::new(2, 16).unwrap();
    let moving = FlowState::constant(grid, 1.0, &[1.0, 0.0]);
    let sol = frozen_solution(&moving, 0.1, 5);
    let ans = AnsatzFields::build(&sol, &EnergyProfile::constant(0.5).unwrap()).unwrap();
    let rep = subsolution_margin(&SubsolutionCandidate::zero(grid, &sol.times()), &ans, &sol).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    for m in &rep.margin {
        assert!(m.values().iter().all(|x| (x - 0.5).abs() <= 1e-12));
    }
    assert!(rep.energy_gap_min >= rep.margin_min - 1e-15);

    let rest = FlowState::constant(grid, 1.3, &[0.0, 0.0]);
    let sol = frozen_solution(&rest, 0.1, 5);
    let prof = EnergyProfile::exponential(0.2).unwrap();
    let ans = AnsatzFields::build(&sol, &prof).unwrap();
    let rep = subsolution_margin(&SubsolutionCandidate::zero(grid, &sol.times()), &ans, &sol).unwrap();
    for (snap, t) in rep.snapshots.iter().zip(sol.times()) {
        assert!((snap.min - prof.value(t)).abs() <= 1e-15);
        assert!((snap.max - prof.value(t)).abs() <= 1e-15);
    }
}

#[test]
fn cadence_mismatch_is_rejected() {
    let grid = TorusGrid::new(2, 8).unwrap();
    let sol = frozen_solution(&FlowState::constant(grid, 1.0, &[0.0, 0.0]), 0.1, 4);
    let ans = AnsatzFields::build(&sol, &EnergyProfile::constant(0.5).unwrap()).unwrap();
    let cand = SubsolutionCandidate::zero(grid, &[0.0, 0.05, 0.1]);
    assert!(matches!(
        subsolution_margin(&cand, &ans, &sol),
        Err(SubsolutionError::Cadence(_))
    ));
}

#[test]
fn wave_structure() {
    let grid = TorusGrid::new(2, 32).unwrap();
    let sp = Spectral::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1u32, 2, 4, 8] {
        let sh = shape(n, 0.1);
        let times: Vec<f64> = (0..=10).map(|i| 0.01 * i as f64).collect();
        let cand = SubsolutionCandidate::plane_wave(&sh, 0.7, grid, &times).unwrap();
        for (v, f) in cand.v.iter().zip(&cand.f) {
            assert!(divergence_defect(&sp, v) <= 1e-12);
            assert!(f.is_traceless() && f.trace_excess() <= 0.0);
        }
        assert!(cand.v[0].sup_norm() == 0.0 && cand.v[10].sup_norm() < 1e-15);
        for _ in 0..10 {
            let t = rng.random_range(0.0..0.1);
            let (_, f, rate) = cand.fields_at(t);
            let div_f = sp.tensor_divergence(&f);
            let mut res = rate.clone();
            res.axpy(1.0, &div_f);
            for _ in 0..10 {
                let k = rng.random_range(0..grid.len());
                let r = res.at(k);
                assert!(r[0].abs().max(r[1].abs()) <= 1e-10);
            }
        }
        if n >= 2 {
            let phi = VectorField::from_fn(grid, |x| [0.0, (PI * x[0]).cos(), 0.0]);
            for v in &cand.v {
                assert!(pairing(v, &phi).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn wave_input_errors() {
    let grid = TorusGrid::new(2, 16).unwrap();
    let mut bad = shape(2, 0.1);
    bad.a_dir = vec![1, 1];
    assert!(SubsolutionCandidate::plane_wave(&bad, 1.0, grid, &[0.0]).is_err());
    assert!(SubsolutionCandidate::plane_wave(&shape(0, 0.1), 1.0, grid, &[0.0]).is_err());
    assert!(SubsolutionCandidate::plane_wave(&shape(8, 0.1), 1.0, grid, &[0.0]).is_err());
}

#[test]
fn superposition_keeps_structure() {
    let grid = TorusGrid::new(3, 16).unwrap();
    let sp = Spectral::new(grid);
    let times = [0.0, 0.03, 0.05];
    let a = WaveShape { xi: vec![1, 1, 0], a_dir: vec![1, -1, 2], n: 2, envelope: Default::default(), horizon: 0.1 };
    let b = WaveShape { xi: vec![0, 1, 2], a_dir: vec![3, 0, 0], n: 1, envelope: Default::default(), horizon: 0.1 };
    let ca = SubsolutionCandidate::plane_wave(&a, 0.3, grid, &times).unwrap();
    let cb = SubsolutionCandidate::plane_wave(&b, 0.2, grid, &times).unwrap();
    let sum = ca.sum(&cb).unwrap();
    assert_eq!(sum.waves.len(), 2);
    let (_, f, rate) = sum.fields_at(0.03);
    let mut res = rate;
    res.axpy(1.0, &sp.tensor_divergence(&f));
    assert!(res.sup_norm() <= 1e-10);
    assert!(divergence_defect(&sp, &sum.v[1]) <= 1e-12);
    assert!(f.trace_excess() <= 0.0);
}

#[test]
fn amplitude_search_on_rest_state() {
    let grid = TorusGrid::new(2, 16).unwrap();
    let sol = frozen_solution(&FlowState::constant(grid, 1.0, &[0.0, 0.0]), 0.1, 8);
    let sh = shape(2, 0.1);
    let search = |lambda: f64| {
        let ans = AnsatzFields::build(&sol, &EnergyProfile::constant(lambda).unwrap()).unwrap();
        let res = max_amplitude_search(&sh, &ans, &sol, 0.5).unwrap();
        (ans, res)
    };
    let (ans, res) = search(0.5);
    assert_eq!(res.status, SearchStatus::Certified);
    assert!(res.amplitude > 0.0);
    assert!((res.zero_margin - 0.5).abs() < 1e-15);
    let cand = SubsolutionCandidate::plane_wave(&sh, res.amplitude, grid, &sol.times()).unwrap();
    let rep = subsolution_margin(&cand, &ans, &sol).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.margin_min >= res.target_margin);
    assert!(rep.margin_min <= 1.1 * res.target_margin);
    assert!(rep.energy_gap_min >= rep.margin_min - 1e-12);
    assert!(rep.sup_v <= rep.v_bound);

    let (_, doubled) = search(1.0);
    assert!(doubled.amplitude >= res.amplitude);

    let (_, starved) = search(1e-14);
    assert_eq!(starved.status, SearchStatus::ZeroCandidateRejected);
    assert_eq!(starved.amplitude, 0.0);
}

#[test]
fn margin_of_wave_against_explicit_formula() {
    // rest state, ξ = e₁, â = e₂: bracket = [[0, β], [β, α]] with α = (Aχc)²,
    // β = Aχ′ s/(πN), so margin = Λ − (α/2 + √(α²/4 + β²))
    let grid = TorusGrid::new(2, 16).unwrap();
    let sol = frozen_solution(&FlowState::constant(grid, 1.0, &[0.0, 0.0]), 0.1, 4);
    let ans = AnsatzFields::build(&sol, &EnergyProfile::constant(0.5).unwrap()).unwrap();
    let (a, n, t_h) = (0.05, 2u32, 0.1);
    let cand = SubsolutionCandidate::plane_wave(&shape(n, t_h), a, grid, &sol.times()).unwrap();
    let rep = subsolution_margin(&cand, &ans, &sol).unwrap();
    for (s, &t) in sol.times().iter().enumerate() {
        let chi = (PI * t / t_h).sin().powi(2);
        let dchi = PI / t_h * (2.0 * PI * t / t_h).sin();
        for k in 0..grid.len() {
            let x = grid.point(k)[0];
            let ph = PI * n as f64 * x;
            let alpha = (a * chi * ph.cos()).powi(2);
            let beta = a * dchi * ph.sin() / (PI * n as f64);
            let want = 0.5 - (alpha / 2.0 + (alpha * alpha / 4.0 + beta * beta).sqrt());
            assert!((rep.margin[s].values()[k] - want).abs() < 1e-13);
            let packed = [0.0, beta, alpha];
            assert!((lambda_max_packed(2, &packed) - (0.5 - want)).abs() < 1e-13);
        }
    }
}
