//! The handful of estimators the experiments need: means with standard
//! errors, covariances, Kolmogorov–Smirnov distances and empirical
//! characteristic functions.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;

use super::reduce::{pairwise_sum, pairwise_sum_by};
use crate::error::{Error, Result};

/// Monte Carlo estimate bundled with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub replicates: usize,
}

impl EstimateWithError {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, replicates: 1 }
    }

    /// `(value - target) / std_error`, or `None` for a deterministic value.
    pub fn z_score(&self, target: f64) -> Option<f64> {
        (self.std_error > 0.0).then(|| (self.value - target) / self.std_error)
    }

    /// Whether `target` lies within `k` standard errors plus `slack`.
    pub fn covers(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + slack
    }

    /// Difference of two independent estimates.
    pub fn minus_independent(&self, other: &Self) -> Self {
        Self {
            value: self.value - other.value,
            std_error: self.std_error.hypot(other.std_error),
            replicates: self.replicates.min(other.replicates),
        }
    }
}

impl fmt::Display for EstimateWithError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ± {:.2e} (N={})", self.value, self.std_error, self.replicates)
    }
}

/// Complex estimate reported as independent real and imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexEstimate {
    pub re: EstimateWithError,
    pub im: EstimateWithError,
}

impl ComplexEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value, self.im.value)
    }
}

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(pairwise_sum(xs) / xs.len() as f64)
}

/// Sample mean and standard error (unbiased standard deviation over `sqrt(N)`).
pub fn mean_with_se(xs: &[f64]) -> Result<EstimateWithError> {
    if xs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let m = pairwise_sum(xs) / n;
    let ss = pairwise_sum_by(xs, |&x| (x - m) * (x - m));
    let var = ss / (n - 1.0);
    Ok(EstimateWithError { value: m, std_error: (var / n).sqrt(), replicates: xs.len() })
}

pub fn complex_mean_with_se(zs: &[Complex64]) -> Result<ComplexEstimate> {
    let re: Vec<f64> = zs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = zs.iter().map(|z| z.im).collect();
    Ok(ComplexEstimate { re: mean_with_se(&re)?, im: mean_with_se(&im)? })
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> Result<f64> {
    Ok(covariance_with_se(xs, ys)?.value)
}

/// Unbiased sample covariance with a standard error taken from the spread of
/// the centred products.
pub fn covariance_with_se(xs: &[f64], ys: &[f64]) -> Result<EstimateWithError> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let products: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let spread = mean_with_se(&products)?;
    Ok(EstimateWithError {
        value: pairwise_sum(&products) / (n - 1.0),
        std_error: spread.std_error * n / (n - 1.0),
        replicates: xs.len(),
    })
}

pub fn variance_with_se(xs: &[f64]) -> Result<EstimateWithError> {
    covariance_with_se(xs, xs)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

/// Sup-norm distance between the empirical CDF of `samples` and `cdf`.
///
/// Ties are grouped, and the left limit of `cdf` at each sample is read just
/// below it, so step-function references are handled exactly.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let at = cdf(x).clamp(0.0, 1.0);
        let before = cdf(x.next_down()).clamp(0.0, 1.0);
        d = d.max((j as f64 / n - at).abs()).max((before - i as f64 / n).abs());
        i = j;
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (xs, ys) = (sorted(a), sorted(b));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Kolmogorov 95% critical value for `n` samples, `1.3581 / sqrt(n)`.
pub fn ks_critical_95(n: usize) -> f64 {
    1.3581 / (n as f64).sqrt()
}

/// Flat storage for `len` points of dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not form points of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_scalars(xs: Vec<f64>) -> Self {
        Self { dim: 1, data: xs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.data
    }

    /// Coordinate `j` of every point.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.iter().map(|p| p[j]).collect()
    }
}

fn phases(samples: &PointSet, u: &[f64]) -> Result<Vec<Complex64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if u.len() != samples.dim() {
        return Err(Error::DimensionMismatch { expected: samples.dim(), got: u.len() });
    }
    Ok(samples
        .iter()
        .map(|x| {
            let phase: f64 = x.iter().zip(u).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

/// `(1/N) Σ exp(i<u, X_k>)`.
pub fn empirical_cf(samples: &PointSet, u: &[f64]) -> Result<Complex64> {
    let zs = phases(samples, u)?;
    let n = zs.len() as f64;
    let z = Complex64::new(pairwise_sum_by(&zs, |z| z.re) / n, pairwise_sum_by(&zs, |z| z.im) / n);
    // A mean of unit vectors cannot leave the unit disc; guard against rounding.
    let r = z.norm();
    Ok(if r > 1.0 { z / r } else { z })
}

pub fn empirical_cf_scalar(samples: &[f64], u: f64) -> Result<Complex64> {
    empirical_cf(&PointSet::from_scalars(samples.to_vec()), &[u])
}

/// Empirical characteristic function with per-component standard errors.
pub fn empirical_cf_with_se(samples: &PointSet, u: &[f64]) -> Result<ComplexEstimate> {
    complex_mean_with_se(&phases(samples, u)?)
}

/// Fit of `a + b_1/n + ... + b_k/n^k` through `(n, estimate)` pairs by
/// weighted least squares; returns the intercept `a` with its propagated
/// standard error. With `k + 1` points this is classical Richardson
/// extrapolation.
pub fn extrapolate(points: &[(usize, EstimateWithError)], terms: usize) -> Result<EstimateWithError> {
    let p = terms + 1;
    if points.len() < p {
        return Err(Error::TooFewSamples { needed: p, got: points.len() });
    }
    let weighted = points.iter().all(|(_, e)| e.std_error > 0.0);
    // Normal matrix G = X^T W X; the intercept is row 0 of G^-1 X^T W applied to y.
    let mut g = vec![vec![0.0; p]; p];
    for (n, e) in points {
        let w = if weighted { 1.0 / (e.std_error * e.std_error) } else { 1.0 };
        let basis: Vec<f64> = (0..p).map(|j| (*n as f64).powi(-(j as i32))).collect();
        for a in 0..p {
            for b in 0..p {
                g[a][b] += w * basis[a] * basis[b];
            }
        }
    }
    let ginv = invert(&g)?;
    // Intercept as a linear combination c · y of the inputs.
    let mut value = 0.0;
    let mut var = 0.0;
    for (n, e) in points {
        let w = if weighted { 1.0 / (e.std_error * e.std_error) } else { 1.0 };
        let c: f64 = (0..p).map(|j| ginv[0][j] * w * (*n as f64).powi(-(j as i32))).sum();
        value += c * e.value;
        var += c * c * e.std_error * e.std_error;
    }
    Ok(EstimateWithError {
        value,
        std_error: var.sqrt(),
        replicates: points.iter().map(|(_, e)| e.replicates).sum(),
    })
}

/// Gauss–Jordan inverse of a small dense matrix.
fn invert(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().partial_cmp(&m[y][col].abs()).unwrap_or(Ordering::Equal))
            .unwrap_or(col);
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::InvalidParameter("singular extrapolation design".into()));
        }
        m.swap(col, pivot);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastics::rng::derive_stream;

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut s = derive_stream(seed, 0);
        (0..n).map(|_| s.normal()).collect()
    }

    #[test]
    fn mean_with_se_hand_cases() {
        let e = mean_with_se(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((e.value, e.std_error, e.replicates), (1.0, 0.0, 3));
        let e = mean_with_se(&[0.0, 2.0]).unwrap();
        assert_eq!(e.value, 1.0);
        assert!((e.std_error - 1.0).abs() < 1e-15);
        assert_eq!(mean_with_se(&[1.0]), Err(Error::TooFewSamples { needed: 2, got: 1 }));
    }

    #[test]
    fn mean_with_se_matches_sigma_over_root_n() {
        let xs = normals(5, 1_000_000);
        let e = mean_with_se(&xs).unwrap();
        assert!((e.std_error / 1e-3 - 1.0).abs() < 0.05);
        assert!(e.value.abs() < 3e-3);
    }

    #[test]
    fn reduction_does_not_depend_on_chunking() {
        let xs = normals(9, 100_003);
        let whole = pairwise_sum(&xs);
        let split: f64 = xs.chunks(7919).map(pairwise_sum).sum();
        assert!(((whole - split) / whole).abs() < 1e-12);
    }

    #[test]
    fn covariance_cases() {
        let x = normals(1, 1000);
        let var = covariance(&x, &x).unwrap();
        let m = x.iter().sum::<f64>() / 1000.0;
        let direct = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 999.0;
        assert!((var - direct).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!((covariance(&x, &y).unwrap() - 2.0 * var).abs() < 1e-12);
        assert!(matches!(covariance(&x, &y[..10]), Err(Error::LengthMismatch { .. })));

        let a = normals(2, 1_000_000);
        let b = normals(3, 1_000_000);
        assert!(covariance(&a, &b).unwrap().abs() < 3e-3);
    }

    #[test]
    fn ks_hand_cases() {
        let unif = |x: f64| x.clamp(0.0, 1.0);
        assert_eq!(ks_distance(&[0.0; 10], unif).unwrap(), 1.0);
        assert!((ks_distance(&[0.25, 0.75], unif).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(ks_distance(&[], unif), Err(Error::EmptySample));
    }

    #[test]
    fn ks_of_uniform_sample_is_within_band() {
        let mut s = derive_stream(11, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| s.uniform()).collect();
        assert!(ks_distance(&xs, |x| x.clamp(0.0, 1.0)).unwrap() < 0.0061);
    }

    #[test]
    fn ks_against_own_ecdf_is_zero() {
        let xs = vec![0.3, -1.0, 2.5, 0.3, 7.0];
        let ecdf = |t: f64| xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64;
        assert_eq!(ks_distance(&xs, ecdf).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&xs, &xs).unwrap(), 0.0);
    }

    #[test]
    fn ks_two_sample_disjoint_supports() {
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[5.0, 6.0, 7.0]).unwrap(), 1.0);
    }

    #[test]
    fn empirical_cf_cases() {
        let xs = normals(4, 1_000_000);
        assert_eq!(empirical_cf_scalar(&xs, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        let z = empirical_cf_scalar(&xs, 2.0).unwrap();
        assert!((z - Complex64::new((-2.0f64).exp(), 0.0)).norm() < 3e-3);

        let mut s = derive_stream(4, 1);
        let lattice: Vec<f64> = (0..100_000).map(|_| s.below(10) as f64 / 10.0).collect();
        let z = empirical_cf_scalar(&lattice, 20.0 * std::f64::consts::PI).unwrap();
        assert!((z.norm() - 1.0).abs() < 3e-3);
    }

    #[test]
    fn extrapolation_removes_first_order_term() {
        let pts: Vec<(usize, EstimateWithError)> = [100usize, 200, 400]
            .iter()
            .map(|&n| {
                (n, EstimateWithError { value: 0.5 + 3.0 / n as f64, std_error: 0.01, replicates: 10 })
            })
            .collect();
        let e = extrapolate(&pts, 1).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
        // Two-point Richardson 2 E(2n) - E(n) has variance 5 se^2.
        let e2 = extrapolate(&pts[1..], 1).unwrap();
        assert!((e2.std_error - 0.01 * 5f64.sqrt()).abs() < 1e-12);
        let e3 = extrapolate(&pts, 2).unwrap();
        assert!((e3.value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-10, "{}", normal_cdf(1.959963984540054) - 0.975);
    }
}
