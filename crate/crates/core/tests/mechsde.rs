use arbfun_core::mechsde::*;
use arbfun_core::paths::{brownian_path, GridPath};
use arbfun_core::stochastics::{derive_stream, variance_with_se, RandomStream};
use arbfun_core::Error;
use proptest::prelude::*;

fn path(m: usize, seed: u64) -> GridPath {
    brownian_path(m, 1, &mut RandomStream::new(seed, 0)).unwrap()
}

#[test]
fn constant_coefficients_are_exact() {
    let sys = SdeSystem::constant();
    let b = path(64 * 16, 60);
    for n in [1, 2, 16] {
        let x = euler_solve(&sys, n, &b).unwrap();
        let r = 64 * 16 / n;
        for k in 0..=n {
            assert!((x.point(k * r)[0] - b.point(k * r)[0]).abs() < 1e-12);
        }
    }
    let coarse = euler_solve(&sys, 16, &b).unwrap();
    let reference = reference_solve(&sys, 16, 64, &b).unwrap();
    let again = euler_solve(&sys, 1024, &b).unwrap();
    assert_eq!(reference, again);
    let err = scaled_error(16, &coarse, &reference).unwrap();
    // Coarse nodes agree up to rounding; in between the interpolation differs from B.
    for k in 0..=16 {
        assert!(err.point(k * 64)[0].abs() < 1e-12);
    }
    let w = path(1024, 61);
    let u = limit_sde_solve(&sys, &ZDrivers::new(b, w).unwrap(), &reference).unwrap();
    assert!(u.values().iter().all(|&v| v == 0.0));
}

#[test]
fn deterministic_position_is_exact() {
    // f²² = x¹ with X¹ frozen at 1 gives X² = t.
    let mut sys = SdeSystem::decay(0.0);
    sys.kind = SystemKind::Linear;
    sys.x0 = [1.0, 0.0];
    let b = GridPath::zeros(256, 1);
    let x = euler_solve(&sys, 8, &b).unwrap();
    for j in 0..=256 {
        assert!((x.point(j)[1] - j as f64 / 256.0).abs() < 1e-12);
    }
}

#[test]
fn decay_follows_the_ode_oracle() {
    let lambda = 1.5;
    let sys = SdeSystem::decay(lambda);
    let n = 32;
    let b = GridPath::zeros(64 * n, 1);
    let coarse = euler_solve(&sys, n, &b).unwrap();
    assert!((coarse.terminal()[0] - (1.0 - lambda / n as f64).powi(n as i32)).abs() < 1e-12);
    let reference = reference_solve(&sys, n, 64, &b).unwrap();
    let exact = (-lambda).exp();
    assert!((reference.terminal()[0] - exact).abs() < 2.0 * lambda * lambda / (64 * n) as f64);
    // Classical first-order Euler error: -λ² t e^{-λt} / 2.
    let u = limit_sde_solve(&sys, &ZDrivers::new(b.clone(), b.clone()).unwrap(), &reference).unwrap();
    for j in [512, 1024, 2048] {
        let t = j as f64 / 2048.0;
        let target = -lambda * lambda * t * (-lambda * t).exp() / 2.0;
        assert!((u.point(j)[0] - target).abs() < 1e-3, "t = {t}");
    }
    let err = scaled_error(n, &coarse, &reference).unwrap().terminal()[0];
    let target = -lambda * lambda * exact / 2.0;
    assert!((err - target).abs() < 3.0 / n as f64, "{err} vs {target}");
}

#[test]
fn z_drivers_identity_and_variance() {
    let d = ZDrivers::new(path(128, 62), path(128, 63)).unwrap();
    for j in 0..=128 {
        assert!((d.z12[j] + d.z21[j] - d.b.point(j)[0]).abs() < 1e-14);
        assert!((d.z22[j] - 0.5 * j as f64 / 128.0).abs() < 1e-15);
    }
    let ends: Vec<[f64; 2]> = arbfun_core::stochastics::replicate(&derive_stream(64, 0), 40_000, |s| {
        let d = ZDrivers::new(brownian_path(16, 1, s).unwrap(), brownian_path(16, 1, s).unwrap()).unwrap();
        [d.z12[16], d.z21[16]]
    });
    for i in 0..2 {
        let v = variance_with_se(&ends.iter().map(|e| e[i]).collect::<Vec<_>>()).unwrap();
        assert!((v.value - 1.0 / 3.0).abs() <= 3.0 * v.std_error, "{v:?}");
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let sys = SdeSystem::linear();
    let b = path(100, 65);
    assert!(euler_solve(&sys, 8, &b).is_err());
    assert!(matches!(reference_solve(&sys, 2, 32, &path(64, 66)), Err(Error::InvalidParameter(_))));
    assert!(matches!(reference_solve(&sys, 2, 64, &path(64, 66)), Err(Error::GridMismatch { .. })));
    let wild = SdeSystem::decay(1e100);
    assert!(matches!(euler_solve(&wild, 4, &path(64, 67)), Err(Error::CoefficientOverflow { .. })));
    for name in ["geometric", "cross-noise"] {
        let sys = SdeSystem::parse(name).unwrap();
        assert!(matches!(
            error_law_comparison(&sys, &[4], 64, 10, &derive_stream(68, 0)),
            Err(Error::UnsupportedSystem(_))
        ));
    }
    assert!(error_law_comparison(&sys, &[8, 4], 64, 10, &derive_stream(68, 1)).is_err());
}

#[test]
fn derivative_evaluators_match_finite_differences() {
    for name in ["constant", "linear", "pendulum", "pendulum(0.3)", "decay(2)"] {
        assert!(SdeSystem::parse(name).unwrap().derivative_defect() < 1e-4, "{name}");
    }
}

#[test]
fn refinement_stability() {
    let sys = SdeSystem::linear();
    let stream = derive_stream(69, 0);
    let vars: Vec<_> = [64, 128]
        .iter()
        .map(|&r| {
            let s = error_law_samples(&sys, 8, r, 20_000, &stream).unwrap();
            variance_with_se(&s.iter().map(|x| x[0]).collect::<Vec<_>>()).unwrap()
        })
        .collect();
    assert!((vars[0].value / vars[1].value - 1.0).abs() < 0.05, "{vars:?}");
}

#[test]
fn linear_error_law_matches_the_limit() {
    let r = error_law_comparison(&SdeSystem::linear(), &[8, 16], 64, 20_000, &derive_stream(70, 0)).unwrap();
    let row = &r.rows[1];
    for ((name, e), (_, u)) in row.error.as_array().into_iter().zip(row.limit.as_array()) {
        let se = e.std_error.hypot(u.std_error);
        assert!((e.value - u.value).abs() <= 3.0 * se, "{name}: {e:?} vs {u:?}");
    }
    assert!(r.rows[1].sqrt_n_mean_square.value < r.rows[0].sqrt_n_mean_square.value);
    assert!(row.error.variance.value > 0.3);
}

#[test]
fn pendulum_runs() {
    let r = error_law_comparison(&SdeSystem::pendulum(1.0), &[8], 64, 2_000, &derive_stream(71, 0)).unwrap();
    let row = &r.rows[0];
    assert!(row.error.variance.value.is_finite() && row.limit.variance.value.is_finite());
    let se = row.error.variance.std_error.hypot(row.limit.variance.std_error);
    assert!((row.error.variance.value - row.limit.variance.value).abs() <= 4.0 * se + 0.1 * row.limit.variance.value);
}

#[test]
fn constant_error_law_is_zero() {
    let r = error_law_comparison(&SdeSystem::constant(), &[4, 8], 64, 200, &derive_stream(72, 0)).unwrap();
    for row in &r.rows {
        for (_, e) in row.error.as_array().into_iter().chain(row.limit.as_array()) {
            // Exact up to rounding in the coarse and fine partial sums of B.
            assert!(e.value.abs() < 1e-12, "{e:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn euler_is_deterministic_and_interpolates(seed in 0u64..500, n in 1usize..16) {
        let sys = SdeSystem::pendulum(0.7);
        let b = path(16 * n, seed);
        let x = euler_solve(&sys, n, &b).unwrap();
        prop_assert_eq!(&x, &euler_solve(&sys, n, &b).unwrap());
        for k in 0..n {
            let (a, c) = (x.point(16 * k), x.point(16 * (k + 1)));
            let mid = x.point(16 * k + 8);
            for i in 0..2 {
                prop_assert!((mid[i] - 0.5 * (a[i] + c[i])).abs() < 1e-12);
            }
        }
    }
}
