//! Rounding to a scale of step `1/n` and Monte Carlo estimators of the
//! asymptotic bias operators and square field operator of the rounding error.
//!
//! The nearest map is `Y_n = Y + θ(nY)/n` with `θ(x) = 1/2 - {x}`. All four
//! bias brackets and the square-field bracket are computed from the same
//! draw of `Y` in every replicate, which turns the linear relations between
//! them into identities that hold replicate by replicate.

use std::fmt;

use crate::error::{Error, Result};
use crate::stochastics::montecarlo::{column, replicate};
use crate::stochastics::reduce::pairwise_sum;
use crate::stochastics::stats::{mean_with_se, EstimateWithError, PointSet};
use crate::stochastics::{DistributionSpec, RandomStream, TestFunction};

/// Fractional part `x - floor(x)`, always in `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// `θ(x) = 1/2 - {x}`, in `(-1/2, 1/2]`.
pub fn theta(x: f64) -> f64 {
    0.5 - frac(x)
}

/// `n·y`, snapped to the nearest integer when it is within a few ulps of it,
/// so that decimal lattice points such as `0.3` with `n = 10` are treated as
/// the grid points they represent.
fn scaled(n: usize, y: f64) -> f64 {
    let t = n as f64 * y;
    let r = t.round();
    if (t - r).abs() <= 8.0 * f64::EPSILON * t.abs().max(1.0) {
        r
    } else {
        t
    }
}

/// Linear displacement `ξ_n(y) = L θ(ny) / n`, or no displacement at all.
#[derive(Clone, Debug, PartialEq)]
pub enum Displacement {
    Zero,
    /// Row-major `dim x dim` matrix `L`.
    Linear { dim: usize, matrix: Vec<f64> },
}

impl Displacement {
    /// `c θ(ny) / n` in one dimension.
    pub fn scaled(c: f64) -> Self {
        Self::Linear { dim: 1, matrix: vec![c] }
    }

    pub fn linear(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: matrix.len() });
        }
        Ok(Self::Linear { dim, matrix })
    }

    /// Limit covariance `γ = L Lᵀ / 12`, row-major.
    pub fn gamma(&self, dim: usize) -> Vec<f64> {
        match self {
            Self::Zero => vec![0.0; dim * dim],
            Self::Linear { dim: d, matrix } => {
                let mut g = vec![0.0; d * d];
                for i in 0..*d {
                    for j in 0..*d {
                        g[i * d + j] = (0..*d).map(|k| matrix[i * d + k] * matrix[j * d + k]).sum::<f64>() / 12.0;
                    }
                }
                g
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraduationMap {
    /// `([ny] + 1/2) / n`.
    Nearest,
    /// `[ny] / n`.
    Default,
    /// `ceil(ny) / n`.
    Excess,
    /// `y + ξ_n(y)`.
    General(Displacement),
}

impl GraduationMap {
    /// Whether the displacement averages to zero over a cell, which is what
    /// makes the first-order control variate admissible.
    fn is_centered(&self) -> bool {
        matches!(self, Self::Nearest | Self::General(_))
    }

    fn apply(&self, y: &[f64], n: usize, out: &mut [f64]) {
        let nf = n as f64;
        match self {
            Self::Nearest => {
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = (scaled(n, v).floor() + 0.5) / nf;
                }
            }
            Self::Default => {
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = scaled(n, v).floor() / nf;
                }
            }
            Self::Excess => {
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = scaled(n, v).ceil() / nf;
                }
            }
            Self::General(Displacement::Zero) => out.copy_from_slice(y),
            Self::General(Displacement::Linear { dim, matrix }) => {
                for i in 0..*dim {
                    let shift: f64 = (0..*dim).map(|k| matrix[i * dim + k] * theta(scaled(n, y[k]))).sum();
                    out[i] = y[i] + shift / nf;
                }
            }
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Self::General(Displacement::Linear { dim: d, .. }) if *d != dim => {
                Err(Error::DimensionMismatch { expected: *d, got: dim })
            }
            _ => Ok(()),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("graduation requires n >= 1".into()));
    }
    Ok(())
}

/// Rounds `y` with step `1/n`.
pub fn graduate(y: &[f64], n: usize, map: &GraduationMap) -> Result<Vec<f64>> {
    check_n(n)?;
    map.check_dim(y.len())?;
    let mut out = vec![0.0; y.len()];
    map.apply(y, n, &mut out);
    Ok(out)
}

/// Draws of `n (Y_n - Y) = θ(nY)` under the nearest map.
pub fn scaled_error_samples(
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<PointSet> {
    check_n(n)?;
    let d = dist.dim();
    let rows = replicate(stream, count, |s| {
        let mut y = vec![0.0; d];
        dist.draw(s, &mut y);
        y.iter().map(|&v| theta(scaled(n, v))).collect::<Vec<f64>>()
    });
    PointSet::new(d, rows.concat())
}

/// The five brackets, indexed in this order in replicate rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BiasKind {
    /// `α (φ(Y_n) - φ(Y)) χ(Y)`.
    Theoretical,
    /// `α (φ(Y) - φ(Y_n)) χ(Y_n)`.
    Practical,
    /// `α (φ(Y_n) - φ(Y)) (χ(Y_n) - χ(Y))`.
    Symmetric,
    /// `α (φ(Y_n) - φ(Y)) (χ(Y_n) + χ(Y))`.
    Singular,
    /// `α (φ(Y_n) - φ(Y))^2 (χ(Y_n) + χ(Y)) / 2`.
    Gamma,
}

impl BiasKind {
    pub const ALL: [BiasKind; 5] =
        [Self::Theoretical, Self::Practical, Self::Symmetric, Self::Singular, Self::Gamma];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Multiple of the first-order term `α <∇φ(Y), Y_n - Y> χ(Y)` carried by
    /// each bracket. Subtracting it leaves the mean unchanged up to a term
    /// that vanishes faster than any power of `1/n` for smooth densities, and
    /// keeps the identities between the brackets exact.
    fn control_coefficient(self) -> f64 {
        match self {
            Self::Theoretical => 1.0,
            Self::Practical => -1.0,
            Self::Singular => 2.0,
            Self::Symmetric | Self::Gamma => 0.0,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "H1" | "theoretical" => Ok(Self::Theoretical),
            "H2" | "practical" => Ok(Self::Practical),
            "H3" | "symmetric" => Ok(Self::Symmetric),
            "H4" | "singular" => Ok(Self::Singular),
            "gamma" => Ok(Self::Gamma),
            other => Err(Error::UnknownName { kind: "bias kind", name: other.to_string() }),
        }
    }
}

impl fmt::Display for BiasKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Theoretical => "H1",
            Self::Practical => "H2",
            Self::Symmetric => "H3",
            Self::Singular => "H4",
            Self::Gamma => "gamma",
        };
        f.write_str(s)
    }
}

/// What one replicate of the bracket estimators needs.
#[derive(Clone, Copy, Debug)]
pub struct BracketSetup<'a> {
    pub map: &'a GraduationMap,
    pub phi: &'a TestFunction,
    pub chi: &'a TestFunction,
    pub dist: &'a DistributionSpec,
    pub n: usize,
    pub alpha: f64,
    /// Subtract the first-order control variate (centred maps only).
    pub control_variate: bool,
}

impl BracketSetup<'_> {
    fn validate(&self) -> Result<()> {
        check_n(self.n)?;
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("scaling must be positive, got {}", self.alpha)));
        }
        let d = self.dist.dim();
        self.map.check_dim(d)?;
        for f in [self.phi, self.chi] {
            if f.min_dim() > d {
                return Err(Error::DimensionMismatch { expected: d, got: f.min_dim() });
            }
        }
        Ok(())
    }

    /// Brackets for one draw `y`, in `BiasKind::ALL` order.
    pub fn row(&self, y: &[f64]) -> [f64; 5] {
        let mut yn = vec![0.0; y.len()];
        self.map.apply(y, self.n, &mut yn);
        let a = self.phi.value(&yn) - self.phi.value(y);
        let (c0, cn) = (self.chi.value(y), self.chi.value(&yn));
        let al = self.alpha;
        let mut row = [
            al * a * c0,
            -al * a * cn,
            al * a * (cn - c0),
            al * a * (cn + c0),
            al * a * a * (cn + c0) / 2.0,
        ];
        if self.control_variate && self.map.is_centered() && a != 0.0 {
            let g = self.phi.gradient(y);
            let first: f64 = g.iter().zip(y.iter().zip(&yn)).map(|(gi, (v, w))| gi * (w - v)).sum();
            let cv = al * first * c0;
            for kind in BiasKind::ALL {
                row[kind.index()] -= kind.control_coefficient() * cv;
            }
        }
        row
    }
}

/// All five brackets per replicate, from common draws of `Y`.
pub fn bias_samples_all(setup: &BracketSetup<'_>, count: usize, stream: &RandomStream) -> Result<Vec<[f64; 5]>> {
    setup.validate()?;
    let d = setup.dist.dim();
    Ok(replicate(stream, count, |s| {
        let mut y = vec![0.0; d];
        setup.dist.draw(s, &mut y);
        setup.row(&y)
    }))
}

/// Estimate of one bracket under the nearest map with the control variate.
#[allow(clippy::too_many_arguments)]
pub fn bias_estimate(
    kind: BiasKind,
    phi: &TestFunction,
    chi: &TestFunction,
    dist: &DistributionSpec,
    n: usize,
    alpha: f64,
    count: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    let setup = BracketSetup {
        map: &GraduationMap::Nearest,
        phi,
        chi,
        dist,
        n,
        alpha,
        control_variate: true,
    };
    let rows = bias_samples_all(&setup, count, stream)?;
    mean_with_se(&column(&rows, kind.index()))
}

/// `n² E[(φ(Y_n) - φ(Y))²]`, the square-field bracket with `χ ≡ 1`.
pub fn gamma_estimate(
    phi: &TestFunction,
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    let one = TestFunction::constant(1.0);
    let nn = (n * n) as f64;
    bias_estimate(BiasKind::Gamma, phi, &one, dist, n, nn, count, stream)
}

/// `n² (φ(y + θ(ny)/n) - φ(y))` on a grid of scalar points.
pub fn conditional_bias_curve(phi: &TestFunction, n: usize, y_grid: &[f64]) -> Result<Vec<f64>> {
    check_n(n)?;
    let nn = (n * n) as f64;
    Ok(y_grid
        .iter()
        .map(|&y| {
            let yn = (scaled(n, y).floor() + 0.5) / n as f64;
            nn * (phi.value(&[yn]) - phi.value(&[y]))
        })
        .collect())
}

/// `∫ n² (φ(y + θ(ny)/n) - φ(y)) χ(y) dy` over `[lo, hi]`, integrating cell by
/// cell on the `1/n` lattice so the sawtooth is never straddled.
pub fn conditional_bias_pairing(
    phi: &TestFunction,
    chi: &TestFunction,
    n: usize,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    check_n(n)?;
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    let nf = n as f64;
    let rule = crate::stochastics::quadrature::gauss_legendre(8, 0.0, 1.0);
    let nn = nf * nf;
    let first = (lo * nf).floor() as i64;
    let last = (hi * nf).ceil() as i64;
    let mut cells = Vec::with_capacity((last - first) as usize);
    for k in first..last {
        let a = (k as f64 / nf).max(lo);
        let b = ((k + 1) as f64 / nf).min(hi);
        if b <= a {
            continue;
        }
        let centre = phi.value(&[(k as f64 + 0.5) / nf]);
        let cell: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| {
                let y = a + (b - a) * x;
                w * nn * (centre - phi.value(&[y])) * chi.value(&[y])
            })
            .sum();
        cells.push(cell * (b - a));
    }
    Ok(pairwise_sum(&cells))
}

/// Product-rule defect of the singular bracket at fixed `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstOrderReport {
    /// Mean of `Â[φψ] - Â[φ]ψ - φÂ[ψ]` tested against `χ`.
    pub defect: EstimateWithError,
    /// Mean of the absolute per-replicate defect.
    pub magnitude: EstimateWithError,
}

/// Per-replicate defect of the product rule for the singular bracket
/// `Â = H4 / 2`. The combination reduces to `-(n²/2) Δφ Δψ Δχ`.
#[allow(clippy::too_many_arguments)]
pub fn first_order_check(
    phi: &TestFunction,
    psi: &TestFunction,
    chi: &TestFunction,
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<FirstOrderReport> {
    check_n(n)?;
    let d = dist.dim();
    let nn = (n * n) as f64;
    let rows = replicate(stream, count, |s| {
        let mut y = vec![0.0; d];
        dist.draw(s, &mut y);
        let mut yn = vec![0.0; d];
        GraduationMap::Nearest.apply(&y, n, &mut yn);
        let (p0, pn) = (phi.value(&y), phi.value(&yn));
        let (q0, qn) = (psi.value(&y), psi.value(&yn));
        let (c0, cn) = (chi.value(&y), chi.value(&yn));
        let half = |df: f64, g0: f64, gn: f64| nn * df * (gn + g0) / 2.0;
        let defect = half(pn * qn - p0 * q0, c0, cn)
            - half(pn - p0, q0 * c0, qn * cn)
            - half(qn - q0, p0 * c0, pn * cn);
        [defect, defect.abs()]
    });
    Ok(FirstOrderReport {
        defect: mean_with_se(&column(&rows, 0))?,
        magnitude: mean_with_se(&column(&rows, 1))?,
    })
}

/// Square-field estimates under the reweighted law `f(Y) P_Y / E[f(Y)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GirsanovCheck {
    /// Ratio estimate of `n² E[f (φ(Y_n) - φ(Y))²] / E[f]`.
    pub weighted: EstimateWithError,
    /// Ratio estimate of `E[f Γ[φ]] / E[f]` with `Γ[φ] = |∇φ|² / 12`.
    pub plain: EstimateWithError,
    /// Paired difference `weighted - plain` from the same draws.
    pub difference: EstimateWithError,
}

/// Ratio estimator `Σ w g / Σ w` with a delta-method standard error.
fn ratio_estimate(w: &[f64], g: &[f64]) -> Result<EstimateWithError> {
    let wg: Vec<f64> = w.iter().zip(g).map(|(a, b)| a * b).collect();
    let sw = pairwise_sum(w);
    let r = pairwise_sum(&wg) / sw;
    let wbar = sw / w.len() as f64;
    let resid: Vec<f64> = w.iter().zip(g).map(|(a, b)| a * (b - r) / wbar).collect();
    let spread = mean_with_se(&resid)?;
    Ok(EstimateWithError { value: r, std_error: spread.std_error, replicates: w.len() })
}

pub fn girsanov_gamma_check(
    phi: &TestFunction,
    weight: &TestFunction,
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<GirsanovCheck> {
    check_n(n)?;
    let d = dist.dim();
    let nn = (n * n) as f64;
    let rows = replicate(stream, count, |s| {
        let mut y = vec![0.0; d];
        dist.draw(s, &mut y);
        let mut yn = vec![0.0; d];
        GraduationMap::Nearest.apply(&y, n, &mut yn);
        let a = phi.value(&yn) - phi.value(&y);
        [weight.value(&y), nn * a * a, phi.gradient_norm_sq(&y) / 12.0, y[0]]
    });
    if let Some(bad) = rows.iter().find(|r| !(r[0] > 0.0)) {
        return Err(Error::NonPositiveWeight { at: bad[3], value: bad[0] });
    }
    let w = column(&rows, 0);
    let weighted_g = column(&rows, 1);
    let plain_g = column(&rows, 2);
    let diff: Vec<f64> = weighted_g.iter().zip(&plain_g).map(|(a, b)| a - b).collect();
    Ok(GirsanovCheck {
        weighted: ratio_estimate(&w, &weighted_g)?,
        plain: ratio_estimate(&w, &plain_g)?,
        difference: ratio_estimate(&w, &diff)?,
    })
}

fn general_setup<'a>(
    map: &'a GraduationMap,
    phi: &'a TestFunction,
    chi: &'a TestFunction,
    dist: &'a DistributionSpec,
    n: usize,
    alpha: f64,
) -> BracketSetup<'a> {
    BracketSetup { map, phi, chi, dist, n, alpha, control_variate: true }
}

/// Theoretical bracket with `χ ≡ 1` under `Y_n = Y + ξ_n(Y)`.
pub fn general_graduation_bias(
    phi: &TestFunction,
    displacement: &Displacement,
    alpha: f64,
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    let map = GraduationMap::General(displacement.clone());
    let one = TestFunction::constant(1.0);
    let rows = bias_samples_all(&general_setup(&map, phi, &one, dist, n, alpha), count, stream)?;
    mean_with_se(&column(&rows, BiasKind::Theoretical.index()))
}

/// Square-field bracket with `χ ≡ 1` under `Y_n = Y + ξ_n(Y)`.
pub fn general_graduation_gamma(
    phi: &TestFunction,
    displacement: &Displacement,
    alpha: f64,
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    let map = GraduationMap::General(displacement.clone());
    let one = TestFunction::constant(1.0);
    let rows = bias_samples_all(&general_setup(&map, phi, &one, dist, n, alpha), count, stream)?;
    mean_with_se(&column(&rows, BiasKind::Gamma.index()))
}

/// `n E[Y_n - Y]` for rounding down, in the first coordinate.
pub fn shift_bias_default(
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    check_n(n)?;
    let d = dist.dim();
    let nf = n as f64;
    let xs = replicate(stream, count, |s| {
        let mut y = vec![0.0; d];
        dist.draw(s, &mut y);
        let low = scaled(n, y[0]).floor() / nf;
        nf * (low - y[0])
    });
    mean_with_se(&xs)
}

/// Symmetric bracket at `α = n` for rounding down.
pub fn default_symmetric_bias(
    phi: &TestFunction,
    chi: &TestFunction,
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    let setup = BracketSetup {
        map: &GraduationMap::Default,
        phi,
        chi,
        dist,
        n,
        alpha: n as f64,
        control_variate: false,
    };
    let rows = bias_samples_all(&setup, count, stream)?;
    mean_with_se(&column(&rows, BiasKind::Symmetric.index()))
}

/// `n² E[(φ(Y_n) - φ(Y))⁴]`, which vanishes in the limit exactly when the
/// limiting form is local.
pub fn locality_estimate(
    phi: &TestFunction,
    dist: &DistributionSpec,
    n: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    check_n(n)?;
    let d = dist.dim();
    let nn = (n * n) as f64;
    let xs = replicate(stream, count, |s| {
        let mut y = vec![0.0; d];
        dist.draw(s, &mut y);
        let mut yn = vec![0.0; d];
        GraduationMap::Nearest.apply(&y, n, &mut yn);
        let a = phi.value(&yn) - phi.value(&y);
        nn * a * a * a * a
    });
    mean_with_se(&xs)
}

/// `E[(Σ V_i φ'_i(Y))²]` with `V` uniform on `(-1/2, 1/2)^d` independent of `Y`.
pub fn gradient_representation_estimate(
    phi: &TestFunction,
    dist: &DistributionSpec,
    count: usize,
    stream: &RandomStream,
) -> Result<EstimateWithError> {
    let d = dist.dim();
    let xs = replicate(stream, count, |s| {
        let mut y = vec![0.0; d];
        dist.draw(s, &mut y);
        let g = phi.gradient(&y);
        let sharp: f64 = g.iter().map(|gi| (s.uniform() - 0.5) * gi).sum();
        sharp * sharp
    });
    mean_with_se(&xs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_and_theta_values() {
        assert!((frac(2.34) - 0.34).abs() < 1e-12);
        assert!((frac(-1.2) - 0.8).abs() < 1e-12);
        assert_eq!(frac(5.0), 0.0);
        assert_eq!(frac(-1e-20), 0.0);
        assert!((theta(2.34) - 0.16).abs() < 1e-12);
        assert_eq!(theta(0.0), 0.5);
        assert_eq!(theta(0.5), 0.0);
    }

    #[test]
    fn maps_on_hand_values() {
        let g = |y: f64, map: &GraduationMap| graduate(&[y], 10, map).unwrap()[0];
        assert!((g(0.234, &GraduationMap::Nearest) - 0.25).abs() < 1e-15);
        assert!((g(-0.3, &GraduationMap::Nearest) - -0.25).abs() < 1e-15);
        assert!((g(0.234, &GraduationMap::Default) - 0.2).abs() < 1e-15);
        assert!((g(0.234, &GraduationMap::Excess) - 0.3).abs() < 1e-15);
        assert_eq!(g(0.7, &GraduationMap::General(Displacement::Zero)), 0.7);
        assert!(graduate(&[0.1], 0, &GraduationMap::Nearest).is_err());
    }

    #[test]
    fn decimal_gridpoints_round_as_gridpoints() {
        for k in 0..10 {
            let y = k as f64 / 10.0;
            assert_eq!(theta(scaled(10, y)), 0.5, "k = {k}");
            assert_eq!(graduate(&[y], 10, &GraduationMap::Default).unwrap()[0], k as f64 / 10.0);
        }
    }

    #[test]
    fn gamma_matrix_of_scaled_displacement() {
        let g = Displacement::scaled(3.0).gamma(1);
        assert!((g[0] - 0.75).abs() < 1e-15);
        let l = Displacement::linear(2, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        let g = l.gamma(2);
        assert_eq!(g, vec![1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 2.0 / 12.0]);
    }

    #[test]
    fn bias_kind_names_round_trip() {
        for k in BiasKind::ALL {
            assert_eq!(BiasKind::parse(&k.to_string()).unwrap(), k);
        }
        assert!(BiasKind::parse("H5").is_err());
    }
}
