//! Paths on a uniform grid, discrete Itô sums and the oscillating integrals
//! `∫ f(ns) dM_s`.
//!
//! Deterministic integrands are sampled at the midpoint of each fine step;
//! stochastic integrands are taken at the left point.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graduation::frac;
use crate::stochastics::montecarlo::{column, replicate};
use crate::stochastics::reduce::pairwise_sum;
use crate::stochastics::stats::{complex_mean_with_se, covariance_with_se, variance_with_se, ComplexEstimate, EstimateWithError};
use crate::stochastics::RandomStream;

/// Smallest number of fine steps per oscillation period.
pub const STEPS_PER_PERIOD: usize = 16;

/// Values on the grid `t_k = k·horizon/m`, `k = 0..=m`, stored point by point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    horizon: f64,
    m: usize,
    dim: usize,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(horizon: f64, m: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || dim == 0 {
            return Err(Error::InvalidParameter("a path needs m >= 1 and dim >= 1".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if values.len() != (m + 1) * dim {
            return Err(Error::LengthMismatch { left: values.len(), right: (m + 1) * dim });
        }
        Ok(Self { horizon, m, dim, values })
    }

    pub fn zeros(m: usize, dim: usize) -> Self {
        Self { horizon: 1.0, m, dim, values: vec![0.0; (m + 1) * dim] }
    }

    /// Scalar path on `[0, 1]` starting at 0 with the given increments.
    pub fn from_increments(increments: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut x = 0.0;
        values.push(x);
        for dx in increments {
            x += dx;
            values.push(x);
        }
        Self::new(1.0, increments.len(), 1, values)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.m as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn origin(&self) -> &[f64] {
        self.point(0)
    }

    pub fn terminal(&self) -> &[f64] {
        self.point(self.m)
    }

    /// Coordinate `j` at every grid point.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Increments of coordinate `j`.
    pub fn increments(&self, j: usize) -> Vec<f64> {
        let c = self.coordinate(j);
        c.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation of coordinate `j` at time `t`.
    pub fn interpolate(&self, j: usize, t: f64) -> f64 {
        let x = (t / self.dt()).clamp(0.0, self.m as f64);
        let k = (x.floor() as usize).min(self.m - 1);
        let w = x - k as f64;
        let a = self.values[k * self.dim + j];
        let b = self.values[(k + 1) * self.dim + j];
        a + w * (b - a)
    }
}

fn gaussian_increments(m: usize, d: usize, var: f64, stream: &mut RandomStream) -> Vec<f64> {
    let sd = var.sqrt();
    (0..m * d).map(|_| sd * stream.normal()).collect()
}

/// Brownian path on `[0, 1]` with `N(0, 1/m)` increments per coordinate.
pub fn brownian_path(m: usize, d: usize, stream: &mut RandomStream) -> Result<GridPath> {
    brownian_path_on(1.0, m, d, stream)
}

/// Brownian path on `[0, horizon]`.
pub fn brownian_path_on(horizon: f64, m: usize, d: usize, stream: &mut RandomStream) -> Result<GridPath> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter("a path needs m >= 1 and d >= 1".into()));
    }
    let inc = gaussian_increments(m, d, horizon / m as f64, stream);
    let mut values = vec![0.0; (m + 1) * d];
    for k in 0..m {
        for j in 0..d {
            values[(k + 1) * d + j] = values[k * d + j] + inc[k * d + j];
        }
    }
    GridPath::new(horizon, m, d, values)
}

/// Partial sums `Σ_{j<k} h_j ΔX_j` of a scalar path.
pub fn ito_sum(integrand: &[f64], path: &GridPath) -> Result<GridPath> {
    if path.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: path.dim() });
    }
    if integrand.len() != path.steps() {
        return Err(Error::LengthMismatch { left: integrand.len(), right: path.steps() });
    }
    let mut values = Vec::with_capacity(path.steps() + 1);
    let mut acc = 0.0;
    values.push(0.0);
    for (h, w) in integrand.iter().zip(path.values().windows(2)) {
        acc += h * (w[1] - w[0]);
        values.push(acc);
    }
    GridPath::new(path.horizon(), path.steps(), 1, values)
}

/// Deterministic absolutely continuous clock `a: [0, 1] → [0, a(1)]`.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeChangeClock {
    /// `a(t) = t`.
    Identity,
    /// `a(t) = c t`.
    Linear(f64),
    /// `a(t) = t^p`.
    Power(f64),
}

impl TimeChangeClock {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Identity => t,
            Self::Linear(c) => c * t,
            Self::Power(p) => t.powf(*p),
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Linear(c) => *c,
            Self::Power(p) => p * t.powf(p - 1.0),
        }
    }

    pub fn reach(&self) -> f64 {
        self.value(1.0)
    }

    /// `a(t_{k+1}) - a(t_k)` on the `m`-grid.
    pub fn increments(&self, m: usize) -> Vec<f64> {
        (0..m).map(|k| self.value((k + 1) as f64 / m as f64) - self.value(k as f64 / m as f64)).collect()
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let ok = match self {
            Self::Identity => true,
            Self::Linear(c) => *c > 0.0,
            Self::Power(p) => *p > 0.0,
        };
        if !ok || self.increments(m).iter().any(|d| *d < 0.0) {
            return Err(Error::InvalidParameter(format!("clock {self} is not increasing")));
        }
        Ok(())
    }

    pub fn parse(input: &str) -> Result<Self> {
        let t = input.trim();
        let arg = |prefix: &str| -> Option<Result<f64>> {
            t.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')).map(|a| {
                a.trim().parse::<f64>().map_err(|e| Error::Parse { input: input.to_string(), reason: e.to_string() })
            })
        };
        if t == "identity" {
            return Ok(Self::Identity);
        }
        if let Some(c) = arg("linear(") {
            return Ok(Self::Linear(c?));
        }
        if let Some(p) = arg("power(") {
            return Ok(Self::Power(p?));
        }
        Err(Error::UnknownName { kind: "clock", name: t.to_string() })
    }
}

impl fmt::Display for TimeChangeClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::Linear(c) => write!(f, "linear({c})"),
            Self::Power(p) => write!(f, "power({p})"),
        }
    }
}

/// `M_t = B_{a(t)}` on the `m`-grid, interpolating `base` linearly.
pub fn time_changed_path(base: &GridPath, clock: &TimeChangeClock, m: usize) -> Result<GridPath> {
    clock.validate(m)?;
    let reach = clock.reach();
    if reach > base.horizon() * (1.0 + 1e-12) {
        return Err(Error::ClockExceedsHorizon { reach, horizon: base.horizon() });
    }
    let d = base.dim();
    let mut values = Vec::with_capacity((m + 1) * d);
    for k in 0..=m {
        let s = clock.value(k as f64 / m as f64);
        for j in 0..d {
            values.push(base.interpolate(j, s));
        }
    }
    GridPath::new(1.0, m, d, values)
}

/// Exact draw of the time-changed Brownian motion on the `m`-grid, with
/// independent `N(0, a(t_{k+1}) - a(t_k))` increments.
pub fn time_changed_brownian(clock: &TimeChangeClock, m: usize, stream: &mut RandomStream) -> Result<GridPath> {
    clock.validate(m)?;
    let inc: Vec<f64> = clock.increments(m).into_iter().map(|v| v.sqrt() * stream.normal()).collect();
    GridPath::from_increments(&inc)
}

/// Bounded periodic function with unit period.
#[derive(Clone, Debug, PartialEq)]
pub enum PeriodicFn {
    /// `1/2 - {x}`.
    Sawtooth,
    /// `{x}`.
    Frac,
    /// `√12 (1/2 - {x})`, normalized to unit mean square.
    NormalizedSawtooth,
    /// `sin(2πx)`.
    Sine,
    Constant(f64),
}

impl PeriodicFn {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Sawtooth => 0.5 - frac(x),
            Self::Frac => frac(x),
            Self::NormalizedSawtooth => 12f64.sqrt() * (0.5 - frac(x)),
            Self::Sine => (2.0 * PI * x).sin(),
            Self::Constant(c) => *c,
        }
    }

    /// `(∫₀¹ f, ∫₀¹ f², sup |f|)` in closed form.
    fn moments(&self) -> (f64, f64, f64) {
        match self {
            Self::Sawtooth => (0.0, 1.0 / 12.0, 0.5),
            Self::Frac => (0.5, 1.0 / 3.0, 1.0),
            Self::NormalizedSawtooth => (0.0, 1.0, 0.5 * 12f64.sqrt()),
            Self::Sine => (0.0, 0.5, 1.0),
            Self::Constant(c) => (*c, c * c, c.abs()),
        }
    }

    pub fn parse(input: &str) -> Result<Self> {
        let t = input.trim();
        if let Some(c) = t.strip_prefix("constant(").and_then(|r| r.strip_suffix(')')) {
            let c = c.trim().parse::<f64>().map_err(|e| Error::Parse { input: input.to_string(), reason: e.to_string() })?;
            return Ok(Self::Constant(c));
        }
        match t {
            "sawtooth" => Ok(Self::Sawtooth),
            "frac" => Ok(Self::Frac),
            "normalized-sawtooth" => Ok(Self::NormalizedSawtooth),
            "sine" => Ok(Self::Sine),
            _ => Err(Error::UnknownName { kind: "periodic function", name: t.to_string() }),
        }
    }
}

impl fmt::Display for PeriodicFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sawtooth => f.write_str("sawtooth"),
            Self::Frac => f.write_str("frac"),
            Self::NormalizedSawtooth => f.write_str("normalized-sawtooth"),
            Self::Sine => f.write_str("sine"),
            Self::Constant(c) => write!(f, "constant({c})"),
        }
    }
}

/// Composite midpoint rule for `(∫₀¹ f, ∫₀¹ f²)` with `nodes` nodes.
pub fn midpoint_moments<F: Fn(f64) -> f64>(f: F, nodes: usize) -> (f64, f64) {
    let vals: Vec<f64> = (0..nodes).map(|i| f((i as f64 + 0.5) / nodes as f64)).collect();
    let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
    (pairwise_sum(&vals) / nodes as f64, pairwise_sum(&sq) / nodes as f64)
}

/// A periodic integrand with its stored mean, mean square and sup norm.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorSpec {
    pub f: PeriodicFn,
    pub mean: f64,
    pub l2norm_sq: f64,
    pub sup: f64,
}

impl OscillatorSpec {
    pub fn new(f: PeriodicFn) -> Self {
        let (mean, l2norm_sq, sup) = f.moments();
        Self { f, mean, l2norm_sq, sup }
    }

    pub fn sawtooth() -> Self {
        Self::new(PeriodicFn::Sawtooth)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.f.value(x)
    }

    /// Compares the stored moments with a `10⁵`-node midpoint rule.
    pub fn check(&self, tol: f64) -> Result<()> {
        let (mean, mean_square) = midpoint_moments(|x| self.value(x), 100_000);
        if (mean - self.mean).abs() > tol || (mean_square - self.l2norm_sq).abs() > tol {
            return Err(Error::Unnormalized { mean, mean_square });
        }
        Ok(())
    }

    /// `f(n s)` at the midpoints of the `m` fine steps of `[0, 1]`.
    pub fn sampled(&self, n: usize, m: usize) -> Vec<f64> {
        (0..m).map(|j| self.value(n as f64 * (j as f64 + 0.5) / m as f64)).collect()
    }
}

/// Refuses grids with fewer than 16 fine steps per period of `f(n·)`.
pub fn check_resolution(m: usize, n: usize) -> Result<()> {
    let required = STEPS_PER_PERIOD * n;
    if m < required {
        return Err(Error::UnresolvedOscillation { m, n, required });
    }
    Ok(())
}

/// Path of `∫₀ᵗ f(ns) dM_s` for a scalar martingale path on `[0, 1]`.
pub fn oscillating_integral(osc: &OscillatorSpec, n: usize, martingale: &GridPath) -> Result<GridPath> {
    check_resolution(martingale.steps(), n)?;
    ito_sum(&osc.sampled(n, martingale.steps()), martingale)
}

/// `sup_t |∫₀ᵗ f(ns) ds|` over the nodes of a `nodes`-point grid, by exact
/// cumulative midpoint sums; bounded by `sup|f| / n` for mean-zero `f`.
pub fn oscillation_sup(osc: &OscillatorSpec, n: usize, nodes: usize) -> f64 {
    let h = 1.0 / nodes as f64;
    let mut acc = 0.0;
    let mut sup: f64 = 0.0;
    for j in 0..nodes {
        acc += osc.value(n as f64 * (j as f64 + 0.5) * h) * h;
        sup = sup.max(acc.abs());
    }
    sup
}

/// Right-continuous step function on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    /// `0 = b_0 < b_1 < … < b_K = 1`.
    breaks: Vec<f64>,
    /// Value on `[b_i, b_{i+1})`.
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let ok = breaks.len() == values.len() + 1
            && breaks.first() == Some(&0.0)
            && breaks.last() == Some(&1.0)
            && breaks.windows(2).all(|w| w[1] > w[0]);
        if !ok {
            return Err(Error::InvalidParameter("step function needs increasing breaks from 0 to 1".into()));
        }
        Ok(Self { breaks, values })
    }

    pub fn constant(c: f64) -> Self {
        Self { breaks: vec![0.0, 1.0], values: vec![c] }
    }

    /// `c · 1_[lo, hi)`.
    pub fn indicator(c: f64, lo: f64, hi: f64) -> Result<Self> {
        let mut breaks = vec![0.0];
        let mut values = Vec::new();
        if lo > 0.0 {
            breaks.push(lo);
            values.push(0.0);
        }
        values.push(c);
        if hi < 1.0 {
            breaks.push(hi);
            values.push(0.0);
        }
        breaks.push(1.0);
        Self::new(breaks, values)
    }

    pub fn value(&self, t: f64) -> f64 {
        let i = self.breaks[1..].partition_point(|&b| b <= t).min(self.values.len() - 1);
        self.values[i]
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `∫₀¹ g(s) step(s) ds` for a continuous weight `g`, piece by piece.
    pub fn integrate_against<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let rule = crate::stochastics::quadrature::gauss_legendre(16, 0.0, 1.0);
        self.breaks
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| {
                let (a, b) = (w[0], w[1]);
                v * (b - a) * rule.integrate(|x| g(a + (b - a) * x))
            })
            .sum()
    }

    /// Parses `constant(c)` or `indicator(c,lo,hi)`.
    pub fn parse(input: &str) -> Result<Self> {
        let t = input.trim();
        let err = |reason: &str| Error::Parse { input: input.to_string(), reason: reason.to_string() };
        let args = |prefix: &str| -> Option<Result<Vec<f64>>> {
            t.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')).map(|a| {
                a.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| err(&e.to_string()))).collect()
            })
        };
        if let Some(a) = args("constant(") {
            return match a?.as_slice() {
                [c] => Ok(Self::constant(*c)),
                _ => Err(err("constant takes one argument")),
            };
        }
        if let Some(a) = args("indicator(") {
            return match a?.as_slice() {
                [c, lo, hi] => Self::indicator(*c, *lo, *hi),
                _ => Err(err("indicator takes three arguments")),
            };
        }
        Err(Error::UnknownName { kind: "step function", name: t.to_string() })
    }
}

impl fmt::Display for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.values.len() == 1 {
            return write!(f, "constant({})", self.values[0]);
        }
        let parts: Vec<String> = self
            .breaks
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| format!("[{},{}):{}", w[0], w[1], v))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// `n² (e^{i(I_η + J_η/n)} - e^{iI_η}) (e^{i(I_ζ + J_ζ/n)} - e^{iI_ζ})` from
/// `I = ∫ η dM` and `J = ∫ η f(ns) dM`.
pub fn bracket_value(n: usize, i_eta: f64, j_eta: f64, i_zeta: f64, j_zeta: f64) -> Complex64 {
    let nf = n as f64;
    let diff = |i: f64, j: f64| Complex64::from_polar(1.0, i + j / nf) - Complex64::from_polar(1.0, i);
    nf * nf * diff(i_eta, j_eta) * diff(i_zeta, j_zeta)
}

/// The bracket evaluated on one martingale path (scalar, `[0, 1]`).
pub fn bracket_on_path(
    eta: &StepFunction,
    zeta: &StepFunction,
    osc: &OscillatorSpec,
    n: usize,
    path: &GridPath,
) -> Result<Complex64> {
    let m = path.steps();
    check_resolution(m, n)?;
    let f = osc.sampled(n, m);
    let inc = path.increments(0);
    let (mut ie, mut je, mut iz, mut jz) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..m {
        let t = j as f64 / m as f64;
        let (e, z) = (eta.value(t), zeta.value(t));
        ie += e * inc[j];
        je += e * f[j] * inc[j];
        iz += z * inc[j];
        jz += z * f[j] * inc[j];
    }
    Ok(bracket_value(n, ie, je, iz, jz))
}

/// Per-piece Gaussian law of `(Σ ΔM_j, Σ f_j ΔM_j)` over the fine steps
/// where `η` and `ζ` are both constant, as a Cholesky factor.
#[derive(Clone, Debug)]
struct Piece {
    eta: f64,
    zeta: f64,
    l11: f64,
    l21: f64,
    l22: f64,
}

fn pieces(eta: &StepFunction, zeta: &StepFunction, osc: &OscillatorSpec, n: usize, m: usize, clock: &TimeChangeClock) -> Vec<Piece> {
    let f = osc.sampled(n, m);
    let da = clock.increments(m);
    let mut out: Vec<Piece> = Vec::new();
    let mut acc = (0.0, 0.0, 0.0);
    let mut current: Option<(f64, f64)> = None;
    let flush = |out: &mut Vec<Piece>, key: (f64, f64), acc: (f64, f64, f64)| {
        let (v11, v12, v22) = acc;
        let l11 = v11.sqrt();
        let l21 = if l11 > 0.0 { v12 / l11 } else { 0.0 };
        let l22 = (v22 - l21 * l21).max(0.0).sqrt();
        out.push(Piece { eta: key.0, zeta: key.1, l11, l21, l22 });
    };
    for j in 0..m {
        let t = j as f64 / m as f64;
        let key = (eta.value(t), zeta.value(t));
        if current.is_some_and(|c| c != key) {
            flush(&mut out, current.unwrap(), acc);
            acc = (0.0, 0.0, 0.0);
        }
        current = Some(key);
        acc.0 += da[j];
        acc.1 += f[j] * da[j];
        acc.2 += f[j] * f[j] * da[j];
    }
    if let Some(key) = current {
        flush(&mut out, key, acc);
    }
    out
}

/// Monte Carlo estimate of
/// `n² E[(e^{i∫η dMⁿ} - e^{i∫η dM})(e^{i∫ζ dMⁿ} - e^{i∫ζ dM})]`
/// with `Mⁿ = M + (1/n)∫ f(ns) dM` and `M = B ∘ a` on an `m`-step grid.
///
/// The fine-grid sums enter only through a Gaussian vector of two sums per
/// piece of constancy of `(η, ζ)`, which is drawn exactly; the law of the
/// estimator is the one of the path-by-path computation in
/// [`bracket_on_path`].
#[allow(clippy::too_many_arguments)]
pub fn theorem6_bracket(
    eta: &StepFunction,
    zeta: &StepFunction,
    osc: &OscillatorSpec,
    n: usize,
    m: usize,
    clock: &TimeChangeClock,
    count: usize,
    stream: &RandomStream,
) -> Result<ComplexEstimate> {
    check_resolution(m, n)?;
    clock.validate(m)?;
    let ps = pieces(eta, zeta, osc, n, m, clock);
    let zs = replicate(stream, count, |s| {
        let (mut ie, mut je, mut iz, mut jz) = (0.0, 0.0, 0.0, 0.0);
        for p in &ps {
            let (z1, z2) = (s.normal(), s.normal());
            let sum = p.l11 * z1;
            let weighted = p.l21 * z1 + p.l22 * z2;
            ie += p.eta * sum;
            je += p.eta * weighted;
            iz += p.zeta * sum;
            jz += p.zeta * weighted;
        }
        bracket_value(n, ie, je, iz, jz)
    });
    complex_mean_with_se(&zs)
}

/// Limit `-exp(-½∫(η+ζ)² d⟨M⟩) ∫ηζ d⟨M⟩ ‖f‖²` of [`theorem6_bracket`].
pub fn theorem6_target(eta: &StepFunction, zeta: &StepFunction, osc: &OscillatorSpec, clock: &TimeChangeClock) -> f64 {
    let joint = StepFunction::product_breaks(eta, zeta);
    let sum_sq = joint.iter().map(|&(a, b, e, z)| (e + z).powi(2) * (clock.value(b) - clock.value(a))).sum::<f64>();
    let cross = joint.iter().map(|&(a, b, e, z)| e * z * (clock.value(b) - clock.value(a))).sum::<f64>();
    -(-0.5 * sum_sq).exp() * cross * osc.l2norm_sq
}

impl StepFunction {
    /// Common refinement of two step functions as `(a, b, η, ζ)` pieces.
    fn product_breaks(a: &StepFunction, b: &StepFunction) -> Vec<(f64, f64, f64, f64)> {
        let mut cuts: Vec<f64> = a.breaks.iter().chain(&b.breaks).copied().collect();
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup();
        cuts.windows(2).map(|w| (w[0], w[1], a.value(w[0]), b.value(w[0]))).collect()
    }
}

/// `n² E[(e^{iξ·Bⁿ} - e^{iξ·B})²]`, the diagonal case `η = ζ = ξ`, `M = B`.
pub fn theorem7_cf_form(
    xi: &StepFunction,
    osc: &OscillatorSpec,
    n: usize,
    m: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<ComplexEstimate> {
    theorem6_bracket(xi, xi, osc, n, m, &TimeChangeClock::Identity, count, stream)
}

/// Moments of the error processes of the Euler-type discretizations at
/// `t = 1/2` and `t = 1`:
///
/// * `P1 = n∫(s - [ns]/n - 1/(2n)) dB`
/// * `P2 = n∫(s - [ns]/n) dB`
/// * `P3 = n∫(B_s - B_{[ns]/n}) ds`
/// * `P4 = √n∫(B_s - B_{[ns]/n}) dB`
#[derive(Clone, Debug, PartialEq)]
pub struct KurtzProtterReport {
    pub n: usize,
    pub m: usize,
    /// Indexed by `[t = 1/2, t = 1]`.
    pub var_p1: [EstimateWithError; 2],
    pub var_p2: [EstimateWithError; 2],
    pub cov_p2_b: [EstimateWithError; 2],
    pub var_p3: [EstimateWithError; 2],
    pub cov_p3_b: [EstimateWithError; 2],
    pub cov_p2_p3: [EstimateWithError; 2],
    pub var_p4: [EstimateWithError; 2],
    pub cov_p4_b: [EstimateWithError; 2],
    /// Largest `|P2 + P3 - B|` over replicates at `t = 1`.
    pub max_identity_defect: f64,
}

/// The four error statistics of one Brownian path, at the two times.
/// `P3` uses the trapezoid rule on each fine step and `P4` the exact Itô
/// integral of the piecewise-linear-in-`B` integrand, so `P2 + P3 = B` holds
/// path by path.
pub fn kurtz_protter_path(n: usize, m: usize, increments: &[f64]) -> [[f64; 5]; 2] {
    let nf = n as f64;
    let dt = 1.0 / m as f64;
    let per = m / n;
    let half = m / 2;
    let mut out = [[0.0; 5]; 2];
    let (mut p1, mut p2, mut p3, mut p4) = (0.0, 0.0, 0.0, 0.0);
    let mut b = 0.0;
    let mut b_node = 0.0;
    for (j, &db) in increments.iter().enumerate() {
        if j % per == 0 {
            b_node = b;
        }
        let s_mid = (j as f64 + 0.5) * dt;
        let since = s_mid - (j / per) as f64 / nf;
        p1 += nf * (since - 0.5 / nf) * db;
        p2 += nf * since * db;
        p3 += nf * ((b + db / 2.0) - b_node) * dt;
        p4 += nf.sqrt() * ((b - b_node) * db + (db * db - dt) / 2.0);
        b += db;
        if j + 1 == half {
            out[0] = [p1, p2, p3, p4, b];
        }
    }
    out[1] = [p1, p2, p3, p4, b];
    out
}

pub fn kurtz_protter_statistics(n: usize, m: usize, count: usize, stream: &RandomStream) -> Result<KurtzProtterReport> {
    check_resolution(m, n)?;
    if m % n != 0 || m % 2 != 0 {
        return Err(Error::GridMismatch { expected: n * m.div_ceil(n), got: m });
    }
    let rows = replicate(stream, count, |s| {
        let inc = gaussian_increments(m, 1, 1.0 / m as f64, s);
        let r = kurtz_protter_path(n, m, &inc);
        let mut flat = [0.0; 10];
        flat[..5].copy_from_slice(&r[0]);
        flat[5..].copy_from_slice(&r[1]);
        flat
    });
    let col = |t: usize, k: usize| column(&rows, 5 * t + k);
    let pair = |f: &dyn Fn(usize) -> Result<EstimateWithError>| -> Result<[EstimateWithError; 2]> { Ok([f(0)?, f(1)?]) };
    let max_identity_defect = rows.iter().map(|r| (r[6] + r[7] - r[9]).abs()).fold(0.0, f64::max);
    Ok(KurtzProtterReport {
        n,
        m,
        var_p1: pair(&|t| variance_with_se(&col(t, 0)))?,
        var_p2: pair(&|t| variance_with_se(&col(t, 1)))?,
        cov_p2_b: pair(&|t| covariance_with_se(&col(t, 1), &col(t, 4)))?,
        var_p3: pair(&|t| variance_with_se(&col(t, 2)))?,
        cov_p3_b: pair(&|t| covariance_with_se(&col(t, 2), &col(t, 4)))?,
        cov_p2_p3: pair(&|t| covariance_with_se(&col(t, 1), &col(t, 2)))?,
        var_p4: pair(&|t| variance_with_se(&col(t, 3)))?,
        cov_p4_b: pair(&|t| covariance_with_se(&col(t, 3), &col(t, 4)))?,
        max_identity_defect,
    })
}

/// Terminal value of `∫ f(ns) dM` together with `M_1` and `M_{1/2}`, per
/// replicate, for `M = B ∘ a` drawn exactly on the `m`-grid.
pub fn oscillating_terminal_samples(
    osc: &OscillatorSpec,
    n: usize,
    m: usize,
    clock: &TimeChangeClock,
    count: usize,
    stream: &RandomStream,
) -> Result<Vec<[f64; 3]>> {
    check_resolution(m, n)?;
    clock.validate(m)?;
    let f = osc.sampled(n, m);
    let sd: Vec<f64> = clock.increments(m).into_iter().map(f64::sqrt).collect();
    Ok(replicate(stream, count, |s| {
        let (mut x, mut mm, mut mid) = (0.0, 0.0, 0.0);
        for j in 0..m {
            let dm = sd[j] * s.normal();
            x += f[j] * dm;
            mm += dm;
            if j + 1 == m / 2 {
                mid = mm;
            }
        }
        [x, mm, mid]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_lookup() {
        let s = StepFunction::indicator(2.0, 0.0, 0.5).unwrap();
        assert_eq!(s.value(0.0), 2.0);
        assert_eq!(s.value(0.49), 2.0);
        assert_eq!(s.value(0.5), 0.0);
        assert_eq!(s.value(1.0), 0.0);
        assert_eq!(StepFunction::parse(&StepFunction::constant(1.5).to_string()).unwrap(), StepFunction::constant(1.5));
        assert!(StepFunction::new(vec![0.0, 0.7], vec![1.0]).is_err());
    }

    #[test]
    fn periodic_moments_match_midpoint_rule() {
        for f in [PeriodicFn::Sawtooth, PeriodicFn::Frac, PeriodicFn::NormalizedSawtooth, PeriodicFn::Sine, PeriodicFn::Constant(0.3)] {
            OscillatorSpec::new(f.clone()).check(1e-6).unwrap();
            assert_eq!(PeriodicFn::parse(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn resolution_rule() {
        assert!(check_resolution(1024, 64).is_ok());
        assert!(matches!(check_resolution(1023, 64), Err(Error::UnresolvedOscillation { required: 1024, .. })));
    }

    #[test]
    fn kurtz_protter_identity_on_a_hand_path() {
        let inc = [0.3, -0.1, 0.2, 0.05, -0.4, 0.1, 0.0, 0.25];
        let r = kurtz_protter_path(2, 8, &inc);
        let b: f64 = inc.iter().sum();
        assert!((r[1][1] + r[1][2] - b).abs() < 1e-14);
        let b_half: f64 = inc[..4].iter().sum();
        assert!((r[0][1] + r[0][2] - b_half).abs() < 1e-14);
    }
}
