//! Characteristic-function decay diagnostics and the arbitrary-functions
//! experiment: `{nX + Y}` becomes uniform and independent of `(X, Y)` exactly
//! when `|Ψ_X(u)| → 0` as `|u| → ∞`.
//!
//! Decay at infinity cannot be observed on a finite ladder, so the classifier
//! only reports what the ladder shows and says "inconclusive" otherwise.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graduation::frac;
use crate::stochastics::montecarlo::replicate;
use crate::stochastics::stats::{complex_mean_with_se, empirical_cf_with_se, ks_critical_95, ks_distance, ComplexEstimate};
use crate::stochastics::{DistributionSpec, PointSet, RandomStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileSource {
    Exact,
    Empirical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfDecayProfile {
    pub frequencies: Vec<f64>,
    pub moduli: Vec<f64>,
    /// Zero for exact profiles.
    pub std_errors: Vec<f64>,
    pub source: ProfileSource,
}

impl CfDecayProfile {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// Powers of two `2^0, …, 2^max_exp`.
pub fn power_ladder(max_exp: u32) -> Vec<f64> {
    (0..=max_exp).map(|j| 2f64.powi(j as i32)).collect()
}

fn check_frequencies(frequencies: &[f64]) -> Result<()> {
    if frequencies.iter().any(|u| !(*u >= 0.0)) || frequencies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("frequencies must be non-negative and increasing".into()));
    }
    Ok(())
}

fn modulus_with_se(z: &ComplexEstimate) -> (f64, f64) {
    let v = z.value();
    let m = v.norm();
    let se = if m > 0.0 {
        ((v.re * z.re.std_error).powi(2) + (v.im * z.im.std_error).powi(2)).sqrt() / m
    } else {
        z.re.std_error.hypot(z.im.std_error)
    };
    (m.min(1.0), se)
}

/// Directions whose frequency vectors `r · e` are probed at radius `r`: all
/// non-zero `e ∈ {-1, 0, 1}^d` up to sign.
fn directions(dim: usize) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || dim > 3 {
        return Err(Error::InvalidParameter(format!(
            "frequency grids are only implemented for dimensions 1 to 3, got {dim}"
        )));
    }
    let mut out = Vec::new();
    for code in 1..3usize.pow(dim as u32) {
        let e: Vec<f64> = (0..dim).map(|i| (code / 3usize.pow(i as u32) % 3) as f64 - 1.0).collect();
        // Keep one representative of each ±e pair: first non-zero entry positive.
        if e.iter().find(|v| **v != 0.0).is_some_and(|v| *v > 0.0) {
            out.push(e);
        }
    }
    Ok(out)
}

/// `|Ψ_X|` on a frequency ladder, from the exact formula when the law has one
/// and otherwise from `count` draws. In dimension 2 or 3 the modulus at
/// radius `r` is the largest over the grid directions.
pub fn cf_decay_profile(
    dist: &DistributionSpec,
    frequencies: &[f64],
    count: usize,
    stream: &RandomStream,
) -> Result<CfDecayProfile> {
    check_frequencies(frequencies)?;
    let dirs = directions(dist.dim())?;
    let exact: Option<Vec<f64>> = frequencies
        .iter()
        .map(|&r| {
            dirs.iter()
                .map(|e| {
                    let u: Vec<f64> = e.iter().map(|v| v * r).collect();
                    dist.cf(&u).map(|z| z.norm().min(1.0))
                })
                .try_fold(0.0f64, |acc, m| m.map(|m| acc.max(m)))
        })
        .collect();
    match exact {
        Some(moduli) => Ok(CfDecayProfile {
            frequencies: frequencies.to_vec(),
            std_errors: vec![0.0; moduli.len()],
            moduli,
            source: ProfileSource::Exact,
        }),
        None => empirical_cf_decay_profile(dist, frequencies, count, stream),
    }
}

/// Always-empirical version of [`cf_decay_profile`].
pub fn empirical_cf_decay_profile(
    dist: &DistributionSpec,
    frequencies: &[f64],
    count: usize,
    stream: &RandomStream,
) -> Result<CfDecayProfile> {
    check_frequencies(frequencies)?;
    let dirs = directions(dist.dim())?;
    let mut s = stream.clone();
    let samples = dist.sample(&mut s, count)?;
    empirical_profile_of(&samples, frequencies, &dirs)
}

fn empirical_profile_of(samples: &PointSet, frequencies: &[f64], dirs: &[Vec<f64>]) -> Result<CfDecayProfile> {
    let mut moduli = Vec::with_capacity(frequencies.len());
    let mut std_errors = Vec::with_capacity(frequencies.len());
    for &r in frequencies {
        let mut best = (0.0, 0.0);
        for e in dirs {
            let u: Vec<f64> = e.iter().map(|v| v * r).collect();
            let m = modulus_with_se(&empirical_cf_with_se(samples, &u)?);
            if m.0 >= best.0 {
                best = m;
            }
        }
        moduli.push(best.0);
        std_errors.push(best.1);
    }
    Ok(CfDecayProfile { frequencies: frequencies.to_vec(), moduli, std_errors, source: ProfileSource::Empirical })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RajchmanVerdict {
    Decaying,
    Persistent,
    Inconclusive,
}

impl fmt::Display for RajchmanVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Decaying => "decaying",
            Self::Persistent => "persistent",
            Self::Inconclusive => "inconclusive",
        })
    }
}

/// Reads the second half of the ladder as the tail. Any tail modulus above
/// `1 - threshold` means persistent; a tail maximum below `threshold` that is
/// also below the head maximum means decaying.
pub fn classify_rajchman(profile: &CfDecayProfile, threshold: f64) -> RajchmanVerdict {
    let len = profile.moduli.len();
    let split = len.div_ceil(2);
    let (head, tail) = profile.moduli.split_at(split.min(len));
    if tail.is_empty() {
        return RajchmanVerdict::Inconclusive;
    }
    let tail_max = tail.iter().cloned().fold(0.0, f64::max);
    if tail.iter().any(|&m| m > 1.0 - threshold) {
        return RajchmanVerdict::Persistent;
    }
    let head_max = head.iter().cloned().fold(0.0, f64::max);
    if tail_max < threshold && tail_max < head_max {
        return RajchmanVerdict::Decaying;
    }
    RajchmanVerdict::Inconclusive
}

/// One point `(k, ζ)` of the joint characteristic function check.
#[derive(Clone, Debug, PartialEq)]
pub struct JointCfRow {
    pub k: i64,
    pub zeta: f64,
    /// `Ê[exp(2πik{nX+Y} + iζX)]`.
    pub joint: ComplexEstimate,
    /// Limit value `1{k=0} Ψ_X(ζ)` under uniformity and independence.
    pub limit: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArbitraryFunctionsReport {
    pub n: usize,
    /// KS distance of `{nX + Y}` to `U(0, 1)`.
    pub ks: f64,
    pub ks_critical: f64,
    pub joint: Vec<JointCfRow>,
}

/// `{nX + Y}` with `nX` snapped to integers at lattice points.
fn fractional_mix(n: usize, x: f64, y: f64) -> f64 {
    let t = n as f64 * x;
    let r = t.round();
    let t = if (t - r).abs() <= 8.0 * f64::EPSILON * t.abs().max(1.0) { r } else { t };
    frac(t + y)
}

/// Joint diagnostics of `({nX + Y}, X)` for scalar `X` and `Y`, on the
/// `(k, ζ)` grid given.
pub fn arbitrary_functions_test(
    x_dist: &DistributionSpec,
    y_dist: &DistributionSpec,
    n: usize,
    grid: &[(i64, f64)],
    count: usize,
    stream: &RandomStream,
) -> Result<ArbitraryFunctionsReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    for d in [x_dist, y_dist] {
        if d.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: d.dim() });
        }
    }
    let pairs = replicate(stream, count, |s| {
        let x = x_dist.draw_scalar(s);
        let y = y_dist.draw_scalar(s);
        (fractional_mix(n, x, y), x)
    });
    let fracs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ks = ks_distance(&fracs, |v| v.clamp(0.0, 1.0))?;
    let mut joint = Vec::with_capacity(grid.len());
    for &(k, zeta) in grid {
        let zs: Vec<Complex64> = pairs
            .iter()
            .map(|&(f, x)| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * f + zeta * x))
            .collect();
        let est = complex_mean_with_se(&zs)?;
        let psi = match x_dist.cf(&[zeta]) {
            Some(z) => z,
            None => {
                let xs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                empirical_cf_with_se(&PointSet::from_scalars(xs), &[zeta])?.value()
            }
        };
        let limit = if k == 0 { psi } else { Complex64::new(0.0, 0.0) };
        joint.push(JointCfRow { k, zeta, joint: est, limit });
    }
    Ok(ArbitraryFunctionsReport { n, ks, ks_critical: ks_critical_95(count), joint })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(moduli: Vec<f64>) -> CfDecayProfile {
        CfDecayProfile {
            frequencies: (0..moduli.len()).map(|j| j as f64).collect(),
            std_errors: vec![0.0; moduli.len()],
            moduli,
            source: ProfileSource::Exact,
        }
    }

    #[test]
    fn classifier_cases() {
        assert_eq!(classify_rajchman(&profile(vec![]), 0.05), RajchmanVerdict::Inconclusive);
        assert_eq!(classify_rajchman(&profile(vec![1.0]), 0.05), RajchmanVerdict::Inconclusive);
        assert_eq!(classify_rajchman(&profile(vec![1.0, 0.5, 0.01, 0.001]), 0.05), RajchmanVerdict::Decaying);
        assert_eq!(classify_rajchman(&profile(vec![1.0, 0.2, 0.3, 0.99]), 0.05), RajchmanVerdict::Persistent);
        assert_eq!(classify_rajchman(&profile(vec![1.0, 0.5, 0.4, 0.3]), 0.05), RajchmanVerdict::Inconclusive);
    }

    #[test]
    fn direction_grids() {
        assert_eq!(directions(1).unwrap(), vec![vec![1.0]]);
        assert_eq!(directions(2).unwrap().len(), 4);
        assert_eq!(directions(3).unwrap().len(), 13);
        assert!(directions(4).is_err());
    }
}
