use proptest::prelude::*;
use wildlab::field::MonotoneCubic;
use wildlab::io::ExperimentConfig;
use wildlab::subsolution::{lambda_max_packed, relaxation_slack};

fn packed(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, d * (d + 1) / 2)
}

fn diag(d: usize) -> &'static [usize] {
    if d == 2 {
        &[0, 2]
    } else {
        &[0, 3, 5]
    }
}

fn traceless(mut a: Vec<f64>, d: usize) -> Vec<f64> {
    let tr = diag(d).iter().map(|&i| a[i]).sum::<f64>() / d as f64;
    for &i in diag(d) {
        a[i] -= tr;
    }
    a
}

proptest! {
    #[test]
    fn slack_nonnegative_for_traceless_input(
        d in 2usize..=3,
        seed in prop::collection::vec(-3.0..3.0f64, 3),
        rho in 0.01..10.0f64,
        f in packed(3),
        h in packed(3),
    ) {
        let len = d * (d + 1) / 2;
        let f = traceless(f[..len].to_vec(), d);
        let h = traceless(h[..len].to_vec(), d);
        let scale = 1.0 + seed.iter().map(|x| x * x).sum::<f64>() / rho + 10.0;
        prop_assert!(relaxation_slack(&seed[..d], rho, &f, &h) >= -1e-13 * scale);
    }

    #[test]
    fn lambda_max_is_shift_equivariant(d in 2usize..=3, a in packed(3), c in -10.0..10.0f64) {
        let a = a[..d * (d + 1) / 2].to_vec();
        let mut b = a.clone();
        for &i in diag(d) {
            b[i] += c;
        }
        let diff = lambda_max_packed(d, &b) - lambda_max_packed(d, &a) - c;
        prop_assert!(diff.abs() <= 1e-12 * (1.0 + c.abs() + a.iter().map(|x| x.abs()).sum::<f64>()));
    }

    #[test]
    fn lambda_max_is_monotone_under_psd_updates(
        d in 2usize..=3,
        a in packed(3),
        v in prop::collection::vec(-2.0..2.0f64, 3),
    ) {
        let mut b = a[..d * (d + 1) / 2].to_vec();
        let base = lambda_max_packed(d, &b);
        let mut c = 0;
        for i in 0..d {
            for j in i..d {
                b[c] += v[i] * v[j];
                c += 1;
            }
        }
        prop_assert!(lambda_max_packed(d, &b) >= base - 1e-12 * (1.0 + base.abs()));
    }

    #[test]
    fn lambda_max_bounds_the_diagonal_and_trace(d in 2usize..=3, a in packed(3)) {
        let a = a[..d * (d + 1) / 2].to_vec();
        let l = lambda_max_packed(d, &a);
        let tol = 1e-12 * (1.0 + a.iter().map(|x| x.abs()).sum::<f64>());
        let tr: f64 = diag(d).iter().map(|&i| a[i]).sum();
        prop_assert!(l >= tr / d as f64 - tol);
        for &i in diag(d) {
            prop_assert!(l >= a[i] - tol);
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotone_data(
        steps in prop::collection::vec((0.01..1.0f64, 0.0..2.0f64), 2..12),
        probe in 0.0..1.0f64,
    ) {
        let mut x = vec![0.0];
        let mut y = vec![5.0];
        for (dx, dy) in &steps {
            x.push(x.last().unwrap() + dx);
            y.push(y.last().unwrap() - dy);
        }
        let curve = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        let t = probe * x.last().unwrap();
        let (f, df) = curve.eval(t);
        prop_assert!(df <= 1e-12);
        prop_assert!(f <= y[0] + 1e-12 && f >= y.last().unwrap() - 1e-12);
        for (xi, yi) in x.iter().zip(&y) {
            prop_assert!((curve.eval(*xi).0 - yi).abs() <= 1e-12 * (1.0 + yi.abs()));
        }
    }

    #[test]
    fn config_round_trip_is_identity(
        seed in any::<u64>(),
        n_exp in 3u32..7,
        eps in 1e-3..1.0f64,
        cfl in 0.05..1.0f64,
        t_end in 1e-3..1.0f64,
        target in 1e-3..1.0f64,
    ) {
        let text = format!(
            "seed = {seed}\n[grid]\ndim = 2\nn = {}\n[solver]\ncfl = {cfl:?}\nt_end = {t_end:?}\n\
             [profile]\nkind = \"exponential\"\neps = {eps:?}\n[budget]\ntarget_eps = {target:?}\n[wave]\nn = [1]\n",
            1usize << n_exp
        );
        let a = ExperimentConfig::from_toml(&text).unwrap();
        let b = ExperimentConfig::from_toml(&a.to_toml()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.hash(), b.hash());
    }
}
