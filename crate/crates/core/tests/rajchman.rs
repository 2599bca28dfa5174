use std::f64::consts::PI;

use arbfun_core::graduation::frac;
use arbfun_core::rajchman::*;
use arbfun_core::stochastics::{derive_stream, empirical_cf_with_se, DistributionSpec, PointSet};

#[test]
fn gaussian_profile_follows_closed_form() {
    let d = DistributionSpec::standard_normal();
    let freqs = [1.0, 2.0, 4.0, 8.0];
    let p = empirical_cf_decay_profile(&d, &freqs, 200_000, &derive_stream(20, 0)).unwrap();
    assert_eq!(p.source, ProfileSource::Empirical);
    for (i, &u) in freqs.iter().enumerate() {
        let target = (-u * u / 2.0f64).exp();
        // The modulus is biased upward by noise of order 1/sqrt(N) near zero.
        let slack = if target < 1e-3 { 3.0 / 200_000f64.sqrt() } else { 0.0 };
        assert!((p.moduli[i] - target).abs() <= 3.0 * p.std_errors[i] + slack, "u = {u}: {}", p.moduli[i]);
    }
    let exact = cf_decay_profile(&d, &freqs, 10, &derive_stream(20, 1)).unwrap();
    assert_eq!(exact.source, ProfileSource::Exact);
    assert!((exact.moduli[1] - 0.1353352832366127).abs() < 1e-12);
}

#[test]
fn lattice_profile_is_one_at_resonances() {
    let d = DistributionSpec::lattice(10).unwrap();
    let freqs: Vec<f64> = (1..=6).map(|m| 20.0 * PI * m as f64).collect();
    for p in [
        cf_decay_profile(&d, &freqs, 10, &derive_stream(21, 0)).unwrap(),
        empirical_cf_decay_profile(&d, &freqs, 50_000, &derive_stream(21, 1)).unwrap(),
    ] {
        assert!(p.moduli.iter().all(|&m| (m - 1.0).abs() < 3e-3), "{:?}", p.moduli);
        assert_eq!(classify_rajchman(&p, 0.05), RajchmanVerdict::Persistent);
    }
    let res = d.resonant_frequencies(6).unwrap();
    let p = cf_decay_profile(&d, &res, 10, &derive_stream(21, 2)).unwrap();
    assert_eq!(classify_rajchman(&p, 0.05), RajchmanVerdict::Persistent);
}

#[test]
fn point_mass_never_decays() {
    let d = DistributionSpec::parse("point(0)").unwrap();
    let p = empirical_cf_decay_profile(&d, &power_ladder(13), 1000, &derive_stream(22, 0)).unwrap();
    assert!(p.moduli.iter().all(|&m| m == 1.0));
}

#[test]
fn absolutely_continuous_laws_decay_on_the_power_ladder() {
    let ladder = power_ladder(13);
    for spec in [
        "normal",
        "normal(1,0.5)",
        "uniform(0,1)",
        "uniform(-2,3)",
        "exponential(1)",
        "mixture(0.3,normal,0.7,uniform(0,1))",
        "iid(2,normal)",
        "product(uniform(0,1),exponential(2),normal)",
    ] {
        let d = DistributionSpec::parse(spec).unwrap();
        assert!(d.is_absolutely_continuous());
        let p = cf_decay_profile(&d, &ladder, 10, &derive_stream(23, 0)).unwrap();
        assert_eq!(classify_rajchman(&p, 0.05), RajchmanVerdict::Decaying, "{spec}: {:?}", p.moduli);
        // The empirical profile reaches the same verdict.
        let p = empirical_cf_decay_profile(&d, &ladder, 20_000, &derive_stream(23, 1)).unwrap();
        assert_eq!(classify_rajchman(&p, 0.05), RajchmanVerdict::Decaying, "{spec} empirical: {:?}", p.moduli);
    }
}

#[test]
fn cantor_law_is_not_called_decaying() {
    let d = DistributionSpec::cantor();
    let res = d.resonant_frequencies(8).unwrap();
    let p = cf_decay_profile(&d, &res, 10, &derive_stream(24, 0)).unwrap();
    assert_ne!(classify_rajchman(&p, 0.05), RajchmanVerdict::Decaying);
    // The modulus is the same at every 2π·3^k.
    for w in p.moduli.windows(2) {
        assert!((w[0] - w[1]).abs() < 1e-9);
    }
}

#[test]
fn fractional_part_has_the_same_cf_at_integer_multiples_of_two_pi() {
    let d = DistributionSpec::normal(0.3, 2.0).unwrap();
    let mut s = derive_stream(25, 0);
    let xs = d.sample_scalar(&mut s, 50_000).unwrap();
    let fs: Vec<f64> = xs.iter().map(|&x| frac(x)).collect();
    let (px, pf) = (PointSet::from_scalars(xs), PointSet::from_scalars(fs));
    for n in 1..=5 {
        let u = [2.0 * PI * n as f64];
        let a = empirical_cf_with_se(&px, &u).unwrap();
        let b = empirical_cf_with_se(&pf, &u).unwrap();
        assert!((a.re.value - b.re.value).abs() <= 2.0 * a.re.std_error);
        assert!((a.im.value - b.im.value).abs() <= 2.0 * a.im.std_error);
        assert!((a.value() - b.value()).norm() < 1e-9);
    }
}

#[test]
fn arbitrary_functions_for_gaussian_input() {
    let x = DistributionSpec::standard_normal();
    let y = DistributionSpec::parse("point(0)").unwrap();
    let grid = [(0, 0.0), (1, 0.0), (1, 1.0), (2, -0.5), (0, 1.0)];
    let r = arbitrary_functions_test(&x, &y, 1000, &grid, 100_000, &derive_stream(26, 0)).unwrap();
    assert!(r.ks < r.ks_critical, "ks = {}", r.ks);
    let first = &r.joint[0];
    assert_eq!(first.joint.value(), num_complex::Complex64::new(1.0, 0.0));
    for row in &r.joint[1..] {
        let d = row.joint.value() - row.limit;
        assert!(d.re.abs() <= 4.0 * row.joint.re.std_error, "{row:?}");
        assert!(d.im.abs() <= 4.0 * row.joint.im.std_error, "{row:?}");
    }
    let k1 = &r.joint[1];
    assert!(k1.joint.value().norm() < 3.0 * k1.joint.re.std_error.hypot(k1.joint.im.std_error));
}

#[test]
fn arbitrary_functions_fail_for_lattice_input() {
    let x = DistributionSpec::lattice(10).unwrap();
    let y = DistributionSpec::parse("point(0)").unwrap();
    let r = arbitrary_functions_test(&x, &y, 1000, &[(1, 0.0)], 20_000, &derive_stream(27, 0)).unwrap();
    // Every {nX} is 0, a unit atom at the left end of [0, 1].
    assert_eq!(r.ks, 1.0);
    assert!((r.joint[0].joint.value().re - 1.0).abs() < 1e-12);
    let y = DistributionSpec::uniform(0.0, 1.0).unwrap();
    let r = arbitrary_functions_test(&x, &y, 1000, &[], 20_000, &derive_stream(27, 1)).unwrap();
    assert!(r.ks < 0.02);
}

#[test]
fn multivariate_grid_profiles() {
    let d = DistributionSpec::parse("iid(3,lattice(4))").unwrap();
    let p = cf_decay_profile(&d, &[2.0 * PI * 4.0], 10, &derive_stream(28, 0)).unwrap();
    assert!((p.moduli[0] - 1.0).abs() < 1e-12);
    let d = DistributionSpec::parse("iid(4,normal)").unwrap();
    assert!(cf_decay_profile(&d, &[1.0], 10, &derive_stream(28, 1)).is_err());
}
