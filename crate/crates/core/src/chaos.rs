//! Finite Wiener chaos on a uniform grid.
//!
//! An order-`k` element is `Σ_{j₁<…<j_k} f̂(j₁,…,j_k) ΔB_{j₁}⋯ΔB_{j_k}`.
//! Separable kernels (sums of products of one-index factors) are evaluated
//! by running inner sums in `O(k·m)`; sparse kernels list their tuples.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::paths::{brownian_path, check_resolution, GridPath, OscillatorSpec, PeriodicFn};
use crate::stochastics::montecarlo::replicate;
use crate::stochastics::stats::{
    covariance_with_se, ks_distance, ks_two_sample, mean_with_se, normal_cdf, EstimateWithError,
};
use crate::stochastics::RandomStream;

/// `c · Π_p g_p(j_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableTerm {
    pub coefficient: Complex64,
    /// `k` factors of length `m`.
    pub factors: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    Separable(Vec<SeparableTerm>),
    Sparse(Vec<(Vec<usize>, Complex64)>),
}

/// Order-`k` chaos element on an `m`-step grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaosElement {
    order: usize,
    m: usize,
    kernel: Kernel,
    norm_sq: f64,
}

/// `Σ_{j₁<…<j_k} Π_p a_p(j_p) w(j_p)` for one list of factors, by running sums.
fn simplex_sum(factors: &[&[Complex64]], weights: &[Complex64]) -> Complex64 {
    let k = factors.len();
    let mut r = vec![Complex64::new(0.0, 0.0); k + 1];
    r[0] = Complex64::new(1.0, 0.0);
    for (j, w) in weights.iter().enumerate() {
        for p in (1..=k).rev() {
            let prev = r[p - 1];
            r[p] += factors[p - 1][j] * w * prev;
        }
    }
    r[k]
}

impl ChaosElement {
    fn build(order: usize, m: usize, kernel: Kernel) -> Result<Self> {
        if order == 0 || order > 3 {
            return Err(Error::InvalidParameter(format!("chaos order must be 1, 2 or 3, got {order}")));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("grid needs at least one step".into()));
        }
        match &kernel {
            Kernel::Separable(terms) => {
                for t in terms {
                    if t.factors.len() != order {
                        return Err(Error::DimensionMismatch { expected: order, got: t.factors.len() });
                    }
                    if let Some(f) = t.factors.iter().find(|f| f.len() != m) {
                        return Err(Error::GridMismatch { expected: m, got: f.len() });
                    }
                }
            }
            Kernel::Sparse(entries) => {
                for (idx, _) in entries {
                    let increasing = idx.windows(2).all(|w| w[0] < w[1]);
                    if idx.len() != order || !increasing || idx.iter().any(|&j| j >= m) {
                        return Err(Error::OffSimplex(idx.clone()));
                    }
                }
            }
        }
        let mut x = Self { order, m, kernel, norm_sq: 0.0 };
        x.norm_sq = x.kernel_norm_sq();
        Ok(x)
    }

    pub fn separable(order: usize, m: usize, terms: Vec<SeparableTerm>) -> Result<Self> {
        Self::build(order, m, Kernel::Separable(terms))
    }

    pub fn sparse(order: usize, m: usize, entries: Vec<(Vec<usize>, Complex64)>) -> Result<Self> {
        Self::build(order, m, Kernel::Sparse(entries))
    }

    /// `f̂ ≡ c` on the simplex.
    pub fn constant(order: usize, m: usize, c: f64) -> Result<Self> {
        let ones = vec![Complex64::new(1.0, 0.0); m];
        Self::separable(order, m, vec![SeparableTerm { coefficient: c.into(), factors: vec![ones; order] }])
    }

    /// Constant kernel scaled so that `‖X‖² = 1` on this grid.
    pub fn unit_constant(order: usize, m: usize) -> Result<Self> {
        let raw = Self::constant(order, m, 1.0)?;
        Self::constant(order, m, 1.0 / raw.norm_sq.sqrt())
    }

    /// Separable kernel `Π_p g(s_p)` with `g` evaluated at step midpoints.
    pub fn product_kernel<G: Fn(f64) -> f64>(order: usize, m: usize, g: G) -> Result<Self> {
        let f: Vec<Complex64> = (0..m).map(|j| g((j as f64 + 0.5) / m as f64).into()).collect();
        Self::separable(order, m, vec![SeparableTerm { coefficient: 1.0.into(), factors: vec![f; order] }])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn steps(&self) -> usize {
        self.m
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Stored `‖X‖² = Σ |f̂|² / m^k`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// `Σ |f̂|² Π_p u(j_p) / m^k` over the simplex.
    fn weighted_energy(&self, u: &[Complex64]) -> Complex64 {
        let scale = (self.m as f64).powi(self.order as i32);
        match &self.kernel {
            Kernel::Separable(terms) => {
                let mut total = Complex64::new(0.0, 0.0);
                for a in terms {
                    for b in terms {
                        let prods: Vec<Vec<Complex64>> = a
                            .factors
                            .iter()
                            .zip(&b.factors)
                            .map(|(fa, fb)| fa.iter().zip(fb).map(|(x, y)| x * y.conj()).collect())
                            .collect();
                        let refs: Vec<&[Complex64]> = prods.iter().map(|v| v.as_slice()).collect();
                        total += a.coefficient * b.coefficient.conj() * simplex_sum(&refs, u);
                    }
                }
                total / scale
            }
            Kernel::Sparse(entries) => {
                let mut total = Complex64::new(0.0, 0.0);
                for (idx, c) in entries {
                    let w: Complex64 = idx.iter().map(|&j| u[j]).product();
                    total += c.norm_sqr() * w;
                }
                total / scale
            }
        }
    }

    fn kernel_norm_sq(&self) -> f64 {
        self.weighted_energy(&vec![Complex64::new(1.0, 0.0); self.m]).re
    }

    fn check_grid(&self, got: usize) -> Result<()> {
        if got != self.m {
            return Err(Error::GridMismatch { expected: self.m, got });
        }
        Ok(())
    }

    /// Iterated sum against weighted increments `w_j ΔB_j`.
    pub fn eval_increments(&self, inc: &[Complex64]) -> Result<Complex64> {
        self.check_grid(inc.len())?;
        Ok(match &self.kernel {
            Kernel::Separable(terms) => terms
                .iter()
                .map(|t| {
                    let refs: Vec<&[Complex64]> = t.factors.iter().map(|v| v.as_slice()).collect();
                    t.coefficient * simplex_sum(&refs, inc)
                })
                .sum(),
            Kernel::Sparse(entries) => {
                entries.iter().map(|(idx, c)| c * idx.iter().map(|&j| inc[j]).product::<Complex64>()).sum()
            }
        })
    }

    /// Same as [`eval_increments`](Self::eval_increments) with the `k` slots
    /// summed with exactly one increment taken from `dw` instead of `db`.
    pub fn sharp_increments(&self, db: &[Complex64], dw: &[f64]) -> Result<Complex64> {
        self.check_grid(db.len())?;
        self.check_grid(dw.len())?;
        let k = self.order;
        Ok(match &self.kernel {
            Kernel::Separable(terms) => {
                let mut total = Complex64::new(0.0, 0.0);
                for t in terms {
                    let zero = Complex64::new(0.0, 0.0);
                    let mut r = vec![zero; k + 1];
                    let mut g = vec![zero; k + 1];
                    r[0] = Complex64::new(1.0, 0.0);
                    for j in 0..self.m {
                        for p in (1..=k).rev() {
                            let f = t.factors[p - 1][j];
                            let (gp, rp) = (g[p - 1], r[p - 1]);
                            g[p] += f * (db[j] * gp + dw[j] * rp);
                            r[p] += f * db[j] * rp;
                        }
                    }
                    total += t.coefficient * g[k];
                }
                total
            }
            Kernel::Sparse(entries) => entries
                .iter()
                .map(|(idx, c)| {
                    let s: Complex64 = (0..k)
                        .map(|p| {
                            idx.iter()
                                .enumerate()
                                .map(|(q, &j)| if q == p { Complex64::new(dw[j], 0.0) } else { db[j] })
                                .product::<Complex64>()
                        })
                        .sum();
                    c * s
                })
                .sum(),
        })
    }

    /// Linear combination `a X + b Y` of elements with the same order and grid.
    pub fn combine(&self, a: f64, other: &ChaosElement, b: f64) -> Result<ChaosElement> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch { expected: self.order, got: other.order });
        }
        self.check_grid(other.m)?;
        let kernel = match (&self.kernel, &other.kernel) {
            (Kernel::Separable(x), Kernel::Separable(y)) => Kernel::Separable(
                x.iter()
                    .map(|t| SeparableTerm { coefficient: t.coefficient * a, factors: t.factors.clone() })
                    .chain(y.iter().map(|t| SeparableTerm { coefficient: t.coefficient * b, factors: t.factors.clone() }))
                    .collect(),
            ),
            (Kernel::Sparse(x), Kernel::Sparse(y)) => Kernel::Sparse(
                x.iter().map(|(i, c)| (i.clone(), c * a)).chain(y.iter().map(|(i, c)| (i.clone(), c * b))).collect(),
            ),
            _ => return Err(Error::InvalidParameter("cannot combine separable and sparse kernels".into())),
        };
        Self::build(self.order, self.m, kernel)
    }
}

fn real_increments(path: &GridPath) -> Result<Vec<Complex64>> {
    if path.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: path.dim() });
    }
    Ok(path.increments(0).into_iter().map(Complex64::from).collect())
}

/// Iterated left-point Itô sum of `x` along a scalar path.
pub fn eval_chaos(x: &ChaosElement, path: &GridPath) -> Result<Complex64> {
    x.eval_increments(&real_increments(path)?)
}

/// Increment weights `e^{iθ(n s_j)/n}` at the midpoints of the fine steps.
#[derive(Clone, Debug, PartialEq)]
pub struct RnWeights {
    pub n: usize,
    pub weights: Vec<Complex64>,
}

impl RnWeights {
    /// Requires `∫θ = 0` and `∫θ² = 1` (to `1e-6`) and `m >= 16 n`.
    pub fn new(theta: &OscillatorSpec, n: usize, m: usize) -> Result<Self> {
        theta.check(1e-6)?;
        if theta.mean.abs() > 1e-6 || (theta.l2norm_sq - 1.0).abs() > 1e-6 {
            return Err(Error::Unnormalized { mean: theta.mean, mean_square: theta.l2norm_sq });
        }
        check_resolution(m, n)?;
        let nf = n as f64;
        let weights = theta.sampled(n, m).into_iter().map(|t| Complex64::from_polar(1.0, t / nf)).collect();
        Ok(Self { n, weights })
    }

    /// The shipped `θ(x) = √12 (1/2 - {x})`.
    pub fn sawtooth(n: usize, m: usize) -> Result<Self> {
        Self::new(&OscillatorSpec::new(PeriodicFn::NormalizedSawtooth), n, m)
    }

    /// Unit weights (`θ ≡ 0`), skipping the normalization check.
    pub fn identity(m: usize) -> Self {
        Self { n: 1, weights: vec![Complex64::new(1.0, 0.0); m] }
    }
}

/// `R_n(X)` on a path.
pub fn rn_transform(x: &ChaosElement, weights: &RnWeights, path: &GridPath) -> Result<Complex64> {
    let inc = real_increments(path)?;
    x.check_grid(weights.weights.len())?;
    let w: Vec<Complex64> = inc.iter().zip(&weights.weights).map(|(a, b)| a * b).collect();
    x.eval_increments(&w)
}

/// `X^#`: one slot driven by the independent path `w`.
pub fn sharp_gradient(x: &ChaosElement, path_b: &GridPath, path_w: &GridPath) -> Result<Complex64> {
    let db = real_increments(path_b)?;
    if path_w.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: path_w.dim() });
    }
    x.sharp_increments(&db, &path_w.increments(0))
}

/// Deterministic `n² Σ |f̂|² |e^{iΣ_p θ(n s_p)/n} - 1|² / m^k` and its limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem9Value {
    pub n: usize,
    pub value: f64,
    /// `k ‖X‖²`.
    pub target: f64,
    /// `k² ‖X‖² ‖θ‖²_∞`.
    pub bound: f64,
}

pub fn theorem9_limit(x: &ChaosElement, weights: &RnWeights, theta_sup: f64) -> Result<Theorem9Value> {
    x.check_grid(weights.weights.len())?;
    // |w - 1|² = 2 - w - w̄ with w = Π_p u(j_p).
    let e = x.weighted_energy(&weights.weights);
    let nf = weights.n as f64;
    let value = (nf * nf * (2.0 * x.norm_sq - 2.0 * e.re)).max(0.0);
    let k = x.order as f64;
    Ok(Theorem9Value {
        n: weights.n,
        value,
        target: k * x.norm_sq,
        bound: k * k * x.norm_sq * theta_sup * theta_sup,
    })
}

/// Paired comparison of `Y = -i n (R_n(X) - X)` with `X^#`.
#[derive(Clone, Debug, PartialEq)]
pub struct SharpMoment {
    pub statistic: &'static str,
    pub transformed: EstimateWithError,
    pub sharp: EstimateWithError,
    /// Per-replicate difference of the two, from the same `B`.
    pub difference: EstimateWithError,
}

/// First and second moments of `-i n (R_n(X) - X)` and `X^#`: means of the
/// real and imaginary parts, `E|·|²`, and `E[Re(·) B₁]`.
pub fn sharp_moment_comparison(
    x: &ChaosElement,
    weights: &RnWeights,
    count: usize,
    stream: &RandomStream,
) -> Result<Vec<SharpMoment>> {
    let m = x.steps();
    x.check_grid(weights.weights.len())?;
    let nf = weights.n as f64;
    let rows = replicate(stream, count, |s| -> Result<[f64; 8]> {
        let b = brownian_path(m, 1, s)?;
        let w = brownian_path(m, 1, s)?;
        let plain = eval_chaos(x, &b)?;
        let moved = rn_transform(x, weights, &b)?;
        let y = Complex64::new(0.0, -nf) * (moved - plain);
        let sharp = sharp_gradient(x, &b, &w)?;
        let b1 = b.terminal()[0];
        Ok([y.re, y.im, y.norm_sqr(), y.re * b1, sharp.re, sharp.im, sharp.norm_sqr(), sharp.re * b1])
    });
    let rows: Vec<[f64; 8]> = rows.into_iter().collect::<Result<_>>()?;
    let names = ["mean_re", "mean_im", "second_moment", "cov_re_b1"];
    names
        .iter()
        .enumerate()
        .map(|(i, &statistic)| {
            let a: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let b: Vec<f64> = rows.iter().map(|r| r[i + 4]).collect();
            let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
            Ok(SharpMoment {
                statistic,
                transformed: mean_with_se(&a)?,
                sharp: mean_with_se(&b)?,
                difference: mean_with_se(&d)?,
            })
        })
        .collect()
}

/// Periodic orthogonal-matrix schedule `s ↦ M_s`.
#[derive(Clone, Debug, PartialEq)]
pub enum RotationSchedule {
    /// Block-diagonal rotation by `2πs` on each coordinate pair (even `d`).
    Rotation { dim: usize },
    /// `M ≡ I`; does not average to zero.
    Identity { dim: usize },
}

impl RotationSchedule {
    pub fn rotation(dim: usize) -> Result<Self> {
        if dim < 2 || dim % 2 != 0 {
            return Err(Error::InvalidParameter(format!("rotation schedule needs an even dimension >= 2, got {dim}")));
        }
        Ok(Self::Rotation { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Rotation { dim } | Self::Identity { dim } => *dim,
        }
    }

    /// Row-major `M_s`.
    pub fn matrix(&self, s: f64) -> Vec<f64> {
        let d = self.dim();
        let mut a = vec![0.0; d * d];
        match self {
            Self::Identity { .. } => (0..d).for_each(|i| a[i * d + i] = 1.0),
            Self::Rotation { .. } => {
                let (sn, cs) = (2.0 * PI * s).sin_cos();
                for b in (0..d).step_by(2) {
                    a[b * d + b] = cs;
                    a[b * d + b + 1] = -sn;
                    a[(b + 1) * d + b] = sn;
                    a[(b + 1) * d + b + 1] = cs;
                }
            }
        }
        a
    }

    /// Largest `|MᵀM - I|` entry over `nodes` points of one period.
    pub fn orthogonality_defect(&self, nodes: usize) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..nodes {
            let a = self.matrix((i as f64 + 0.5) / nodes as f64);
            for r in 0..d {
                for c in 0..d {
                    let dot: f64 = (0..d).map(|k| a[k * d + r] * a[k * d + c]).sum();
                    worst = worst.max((dot - if r == c { 1.0 } else { 0.0 }).abs());
                }
            }
        }
        worst
    }

    /// Frobenius norm of the midpoint average of `M` over one period.
    pub fn average_norm(&self, nodes: usize) -> f64 {
        let d = self.dim();
        let mut avg = vec![0.0; d * d];
        for i in 0..nodes {
            let a = self.matrix((i as f64 + 0.5) / nodes as f64);
            avg.iter_mut().zip(a).for_each(|(x, y)| *x += y / nodes as f64);
        }
        avg.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn check(&self) -> Result<()> {
        let defect = self.orthogonality_defect(1024);
        if defect > 1e-12 {
            return Err(Error::NotOrthogonal { defect });
        }
        Ok(())
    }
}

/// Functional `X` of a `d`-dimensional path on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathFunctional {
    /// `B^c_1`, law `N(0, 1)`.
    Terminal(usize),
    /// `∫₀¹ B^c_s ds` (trapezoid), law `N(0, 1/3)`.
    TimeAverage(usize),
    /// `max_k B^c_{t_k}`, compared with an independent sample.
    RunningMax(usize),
}

impl PathFunctional {
    fn coordinate(&self) -> usize {
        match self {
            Self::Terminal(c) | Self::TimeAverage(c) | Self::RunningMax(c) => *c,
        }
    }

    /// Evaluates on per-step increments of coordinate `c`.
    fn eval(&self, inc: &[f64]) -> f64 {
        let m = inc.len() as f64;
        match self {
            Self::Terminal(_) => inc.iter().sum(),
            Self::TimeAverage(_) => {
                let (mut x, mut area) = (0.0, 0.0);
                for d in inc {
                    area += (x + d / 2.0) / m;
                    x += d;
                }
                area
            }
            Self::RunningMax(_) => {
                let (mut x, mut best) = (0.0f64, 0.0f64);
                for d in inc {
                    x += d;
                    best = best.max(x);
                }
                best
            }
        }
    }

    fn exact_cdf(&self, x: f64) -> Option<f64> {
        match self {
            Self::Terminal(_) => Some(normal_cdf(x)),
            Self::TimeAverage(_) => Some(normal_cdf(x * 3f64.sqrt())),
            Self::RunningMax(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationReport {
    pub n: usize,
    pub m: usize,
    /// KS of `T_n(X)` against the law of `X`: exact CDF when known,
    /// otherwise two-sample against `X` on independent paths.
    pub ks: f64,
    pub two_sample: bool,
    pub cov_with_b1: EstimateWithError,
    pub cov_with_b_half: EstimateWithError,
    pub samples: Vec<f64>,
}

/// `T_n(X)`: `X` evaluated on the path with increments `M_{n s_j} ΔB_j`.
pub fn rotation_transform(
    functional: PathFunctional,
    schedule: &RotationSchedule,
    n: usize,
    m: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<RotationReport> {
    schedule.check()?;
    if n > 0 {
        check_resolution(m, n)?;
    }
    let d = schedule.dim();
    let c = functional.coordinate();
    if c >= d {
        return Err(Error::DimensionMismatch { expected: d, got: c + 1 });
    }
    let mats: Vec<Vec<f64>> = (0..m).map(|j| schedule.matrix(n as f64 * (j as f64 + 0.5) / m as f64)).collect();
    let needs_reference = functional.exact_cdf(0.0).is_none();
    let rows = replicate(stream, count, |s| {
        let b = brownian_path(m, d, s).expect("validated sizes");
        let mut moved = vec![0.0; m];
        let (mut b1, mut b_half) = (0.0, 0.0);
        for j in 0..m {
            let inc = &b.point(j + 1).iter().zip(b.point(j)).map(|(x, y)| x - y).collect::<Vec<f64>>();
            let row = &mats[j][c * d..(c + 1) * d];
            moved[j] = row.iter().zip(inc).map(|(a, x)| a * x).sum();
            b1 += inc[0];
            if j + 1 == m / 2 {
                b_half = b1;
            }
        }
        let reference = if needs_reference {
            let r = brownian_path(m, 1, s).expect("validated sizes");
            functional.eval(&r.increments(0))
        } else {
            0.0
        };
        [functional.eval(&moved), b1, b_half, reference]
    });
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let b1: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let bh: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let ks = match needs_reference {
        false => ks_distance(&t, |x| functional.exact_cdf(x).unwrap_or(0.0))?,
        true => ks_two_sample(&t, &rows.iter().map(|r| r[3]).collect::<Vec<_>>())?,
    };
    Ok(RotationReport {
        n,
        m,
        ks,
        two_sample: needs_reference,
        cov_with_b1: covariance_with_se(&t, &b1)?,
        cov_with_b_half: covariance_with_se(&t, &bh)?,
        samples: t,
    })
}

/// `T(X)` on one given path, for the identity checks.
pub fn rotate_path(schedule: &RotationSchedule, n: usize, path: &GridPath) -> Result<GridPath> {
    schedule.check()?;
    let d = schedule.dim();
    if path.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: path.dim() });
    }
    let m = path.steps();
    let mut values = vec![0.0; (m + 1) * d];
    for j in 0..m {
        let a = schedule.matrix(n as f64 * (j as f64 + 0.5) / m as f64);
        let inc: Vec<f64> = path.point(j + 1).iter().zip(path.point(j)).map(|(x, y)| x - y).collect();
        for r in 0..d {
            let moved: f64 = (0..d).map(|k| a[r * d + k] * inc[k]).sum();
            values[(j + 1) * d + r] = values[j * d + r] + moved;
        }
    }
    GridPath::new(path.horizon(), m, d, values)
}
