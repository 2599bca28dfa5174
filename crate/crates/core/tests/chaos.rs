use arbfun_core::chaos::*;
use arbfun_core::paths::{brownian_path, GridPath, OscillatorSpec, PeriodicFn};
use arbfun_core::stochastics::{derive_stream, mean_with_se, RandomStream};
use arbfun_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Brute-force sum over all strictly increasing index tuples.
fn brute<F: Fn(&[usize]) -> Complex64, G: Fn(&[usize]) -> Complex64>(k: usize, m: usize, f: F, w: G) -> Complex64 {
    let mut total = c(0.0);
    let mut idx = vec![0usize; k];
    fn rec<F: Fn(&[usize]) -> Complex64, G: Fn(&[usize]) -> Complex64>(
        pos: usize,
        start: usize,
        m: usize,
        idx: &mut Vec<usize>,
        f: &F,
        w: &G,
        total: &mut Complex64,
    ) {
        if pos == idx.len() {
            *total += f(idx) * w(idx);
            return;
        }
        for j in start..m {
            idx[pos] = j;
            rec(pos + 1, j + 1, m, idx, f, w, total);
        }
    }
    rec(0, 0, m, &mut idx, &f, &w, &mut total);
    total
}

fn g(j: usize, m: usize) -> f64 {
    (3.0 * (j as f64 + 0.5) / m as f64).cos()
}

#[test]
fn separable_evaluation_matches_brute_force() {
    let m = 14;
    let mut s = derive_stream(40, 0);
    let path = brownian_path(m, 1, &mut s).unwrap();
    let inc = path.increments(0);
    for k in 1..=3 {
        let x = ChaosElement::product_kernel(k, m, |t| (3.0 * t).cos()).unwrap();
        let got = eval_chaos(&x, &path).unwrap();
        let want = brute(k, m, |i| c(i.iter().map(|&j| g(j, m)).product()), |i| c(i.iter().map(|&j| inc[j]).product()));
        assert!((got - want).norm() < 1e-12, "k = {k}");
        let norm = brute(k, m, |i| c(i.iter().map(|&j| g(j, m).powi(2)).product()), |_| c(1.0)).re
            / (m as f64).powi(k as i32);
        assert!((x.norm_sq() - norm).abs() < 1e-12);
    }
}

#[test]
fn sparse_and_separable_kernels_agree() {
    let m = 10;
    let sep = ChaosElement::product_kernel(2, m, |t| 1.0 + t).unwrap();
    let mut entries = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let v = |k: usize| 1.0 + (k as f64 + 0.5) / m as f64;
            entries.push((vec![i, j], c(v(i) * v(j))));
        }
    }
    let sparse = ChaosElement::sparse(2, m, entries).unwrap();
    assert!((sep.norm_sq() - sparse.norm_sq()).abs() < 1e-12);
    let mut s = derive_stream(41, 0);
    let b = brownian_path(m, 1, &mut s).unwrap();
    let w = brownian_path(m, 1, &mut s).unwrap();
    assert!((eval_chaos(&sep, &b).unwrap() - eval_chaos(&sparse, &b).unwrap()).norm() < 1e-12);
    let a = sharp_gradient(&sep, &b, &w).unwrap();
    let z = sharp_gradient(&sparse, &b, &w).unwrap();
    assert!((a - z).norm() < 1e-12);
}

#[test]
fn sharp_gradient_matches_brute_force() {
    let m = 9;
    let mut s = derive_stream(42, 0);
    let b = brownian_path(m, 1, &mut s).unwrap().increments(0);
    let w = brownian_path(m, 1, &mut s).unwrap().increments(0);
    let (pb, pw) = (GridPath::from_increments(&b).unwrap(), GridPath::from_increments(&w).unwrap());
    for k in 1..=3 {
        let x = ChaosElement::product_kernel(k, m, |t| (3.0 * t).cos()).unwrap();
        let got = sharp_gradient(&x, &pb, &pw).unwrap();
        let want = brute(
            k,
            m,
            |i| c(i.iter().map(|&j| g(j, m)).product()),
            |i| {
                c((0..k)
                    .map(|p| i.iter().enumerate().map(|(q, &j)| if q == p { w[j] } else { b[j] }).product::<f64>())
                    .sum())
            },
        );
        assert!((got - want).norm() < 1e-12, "k = {k}");
    }
}

#[test]
fn grid_mismatch_is_reported() {
    let x = ChaosElement::unit_constant(2, 32).unwrap();
    let mut s = derive_stream(43, 0);
    let p = brownian_path(16, 1, &mut s).unwrap();
    assert!(matches!(eval_chaos(&x, &p), Err(Error::GridMismatch { expected: 32, got: 16 })));
}

#[test]
fn isometry_and_orthogonality_by_simulation() {
    let m = 256;
    let x1 = ChaosElement::product_kernel(1, m, |t| 1.0 + t).unwrap();
    let x2 = ChaosElement::unit_constant(2, m).unwrap();
    let x3 = ChaosElement::product_kernel(3, m, |t| (2.0 * t).sin() + 0.5).unwrap();
    let rows: Vec<[f64; 6]> = arbfun_core::stochastics::replicate(&derive_stream(44, 0), 40_000, |s| {
        let b = brownian_path(m, 1, s).unwrap();
        let (a, p, q) = (eval_chaos(&x1, &b).unwrap().re, eval_chaos(&x2, &b).unwrap().re, eval_chaos(&x3, &b).unwrap().re);
        [a * a, p * p, q * q, a * p, a * q, p * q]
    });
    let col = |i: usize| mean_with_se(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()).unwrap();
    for (i, target) in [x1.norm_sq(), x2.norm_sq(), x3.norm_sq(), 0.0, 0.0, 0.0].into_iter().enumerate() {
        let e = col(i);
        assert!((e.value - target).abs() <= 4.0 * e.std_error, "column {i}: {e:?} vs {target}");
    }
}

#[test]
fn rn_requires_normalized_theta_and_resolution() {
    assert!(matches!(RnWeights::new(&OscillatorSpec::sawtooth(), 4, 256), Err(Error::Unnormalized { .. })));
    assert!(matches!(RnWeights::sawtooth(32, 256), Err(Error::UnresolvedOscillation { .. })));
    assert!(RnWeights::sawtooth(16, 256).is_ok());
    // The identity weights leave every element unchanged.
    let x = ChaosElement::unit_constant(2, 64).unwrap();
    let mut s = derive_stream(45, 0);
    let p = brownian_path(64, 1, &mut s).unwrap();
    let id = RnWeights::identity(64);
    assert_eq!(rn_transform(&x, &id, &p).unwrap(), eval_chaos(&x, &p).unwrap());
}

#[test]
fn rn_preserves_the_norm() {
    let m = 512;
    let x = ChaosElement::unit_constant(2, m).unwrap();
    let w = RnWeights::sawtooth(8, m).unwrap();
    let sq: Vec<f64> = arbfun_core::stochastics::replicate(&derive_stream(46, 0), 20_000, |s| {
        let b = brownian_path(m, 1, s).unwrap();
        rn_transform(&x, &w, &b).unwrap().norm_sqr()
    });
    let e = mean_with_se(&sq).unwrap();
    assert!((e.value - 1.0).abs() <= 4.0 * e.std_error, "{e:?}");
}

#[test]
fn deterministic_limit_matches_brute_force() {
    let m = 64;
    let n = 4;
    let w = RnWeights::sawtooth(n, m).unwrap();
    let theta = OscillatorSpec::new(PeriodicFn::NormalizedSawtooth);
    let th = theta.sampled(n, m);
    for k in 1..=3 {
        let x = ChaosElement::product_kernel(k, m, |t| 1.0 + t * t).unwrap();
        let v = theorem9_limit(&x, &w, theta.sup).unwrap();
        let f = |i: &[usize]| c(i.iter().map(|&j| 1.0 + ((j as f64 + 0.5) / m as f64).powi(2)).product::<f64>().powi(2));
        let phase = |i: &[usize]| {
            let z = Complex64::from_polar(1.0, i.iter().map(|&j| th[j]).sum::<f64>() / n as f64) - 1.0;
            c(z.norm_sqr())
        };
        let want = (n * n) as f64 * brute(k, m, f, phase).re / (m as f64).powi(k as i32);
        assert!((v.value - want).abs() < 1e-9 * want.max(1.0), "k = {k}: {} vs {want}", v.value);
        assert!(v.value <= v.bound);
    }
}

#[test]
fn deterministic_limit_is_monotone_and_close() {
    let m = 4096;
    let theta = OscillatorSpec::new(PeriodicFn::NormalizedSawtooth);
    for k in 1..=2 {
        let x = ChaosElement::unit_constant(k, m).unwrap();
        let vals: Vec<Theorem9Value> = [8, 16, 32]
            .iter()
            .map(|&n| theorem9_limit(&x, &RnWeights::sawtooth(n, m).unwrap(), theta.sup).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| (w[1].value - w[1].target).abs() < (w[0].value - w[0].target).abs()));
        let last = vals[2];
        assert!((last.value / last.target - 1.0).abs() < 0.02, "k = {k}: {last:?}");
        assert!(vals.iter().all(|v| v.value <= v.bound));
    }
}

#[test]
fn sharp_moments_agree() {
    let m = 512;
    for k in 1..=2 {
        let x = ChaosElement::unit_constant(k, m).unwrap();
        let w = RnWeights::sawtooth(32, m).unwrap();
        let rows = sharp_moment_comparison(&x, &w, 20_000, &derive_stream(47, k as u64)).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            let slack = if r.statistic == "second_moment" { 0.01 } else { 0.0 };
            assert!(r.difference.value.abs() <= 4.0 * r.difference.std_error + slack, "k = {k}: {r:?}");
        }
        let second = &rows[2];
        assert!((second.sharp.value - k as f64).abs() <= 4.0 * second.sharp.std_error);
    }
}

#[test]
fn rotations_preserve_laws() {
    let schedule = RotationSchedule::rotation(2).unwrap();
    let stream = derive_stream(48, 0);
    let crit = 1.36 / (20_000f64).sqrt();
    for f in [PathFunctional::Terminal(0), PathFunctional::TimeAverage(1)] {
        let r = rotation_transform(f, &schedule, 16, 256, 20_000, &stream).unwrap();
        assert!(!r.two_sample);
        assert!(r.ks < crit, "{f:?}: {}", r.ks);
        assert!(r.cov_with_b1.value.abs() <= 4.0 * r.cov_with_b1.std_error);
    }
    let r = rotation_transform(PathFunctional::RunningMax(0), &schedule, 16, 256, 20_000, &stream).unwrap();
    assert!(r.two_sample);
    assert!(r.ks < 1.36 * (2.0 / 20_000f64).sqrt(), "{}", r.ks);
    assert!(rotation_transform(PathFunctional::Terminal(2), &schedule, 1, 256, 10, &stream).is_err());
    assert!(rotation_transform(PathFunctional::Terminal(0), &schedule, 32, 256, 10, &stream).is_err());
}

#[test]
fn identity_schedule_keeps_the_path() {
    let mut s = derive_stream(49, 0);
    let p = brownian_path(128, 2, &mut s).unwrap();
    let id = RotationSchedule::Identity { dim: 2 };
    let q = rotate_path(&id, 3, &p).unwrap();
    for (a, b) in p.values().iter().zip(q.values()) {
        assert!((a - b).abs() < 1e-12);
    }
    // A rotation with n = 0 is the identity as well.
    let q = rotate_path(&RotationSchedule::rotation(2).unwrap(), 0, &p).unwrap();
    for (a, b) in p.values().iter().zip(q.values()) {
        assert!((a - b).abs() < 1e-12);
    }
    // Fully correlated with the input, unlike a genuine rotation.
    let r = rotation_transform(PathFunctional::Terminal(0), &id, 0, 64, 5_000, &derive_stream(49, 1)).unwrap();
    assert!((r.cov_with_b1.value - 1.0).abs() < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn combination_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let m = 32;
        let x = ChaosElement::product_kernel(2, m, |t| t).unwrap();
        let y = ChaosElement::product_kernel(2, m, |t| 1.0 - t).unwrap();
        let z = x.combine(a, &y, b).unwrap();
        let mut s = RandomStream::new(seed, 0);
        let p = brownian_path(m, 1, &mut s).unwrap();
        let lhs = eval_chaos(&z, &p).unwrap();
        let rhs = eval_chaos(&x, &p).unwrap() * a + eval_chaos(&y, &p).unwrap() * b;
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn rotation_increments_keep_their_length(seed in 0u64..1000, n in 0usize..8) {
        let mut s = RandomStream::new(seed, 1);
        let p = brownian_path(128, 4, &mut s).unwrap();
        let q = rotate_path(&RotationSchedule::rotation(4).unwrap(), n, &p).unwrap();
        for j in 0..128 {
            let len = |g: &GridPath| (0..4).map(|i| (g.point(j + 1)[i] - g.point(j)[i]).powi(2)).sum::<f64>();
            prop_assert!((len(&p) - len(&q)).abs() < 1e-12);
        }
    }
}
