//! Euler scheme for the two-block mechanical system
//!
//! ```text
//! X¹_t = x¹₀ + ∫ f¹¹(X²) dB + ∫ f¹²(X¹, X²) ds
//! X²_t = x²₀ + ∫ f²²(X¹, X²) ds
//! ```
//!
//! in the scalar case, the scaled error `n(Xⁿ - X)` and its limit `U`, the
//! solution of a linear equation driven by `Y = (B, s)` and by
//! `Z¹² = W/√12 + B/2`, `Z²¹ = -W/√12 + B/2`, `Z²² = s/2`.
//!
//! Coefficients are indexed `f[i][j]`: row `i` is the block, column `j = 0`
//! multiplies `dB` and `j = 1` multiplies `ds`.

use std::fmt;

use crate::error::{Error, Result};
use crate::paths::{brownian_path, GridPath};
use crate::stochastics::montecarlo::replicate;
use crate::stochastics::stats::{covariance_with_se, mean_with_se, variance_with_se, EstimateWithError};
use crate::stochastics::RandomStream;

pub type Coefficients = [[f64; 2]; 2];
/// `jac[i][j][k] = ∂f^{ij}/∂x_k`.
pub type Jacobian = [[[f64; 2]; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SystemKind {
    /// `f¹¹ ≡ 1`, `f¹² ≡ 0`, `f²² ≡ 0`.
    Constant,
    /// `f¹¹ = x²`, `f¹² = 0`, `f²² = x¹`.
    Linear,
    /// Velocity `X¹`, position `X²`: `f¹¹ = σ/(1 + x²²)`,
    /// `f¹² = -sin x² - 0.1 x¹`, `f²² = x¹`.
    Pendulum { sigma: f64 },
    /// Noise-free `f¹² = -λ x¹`.
    Decay { rate: f64 },
    /// `f¹¹ = x¹`: noise coefficient depends on the first block.
    Geometric,
    /// `f²¹ = 1`: noise enters the second block.
    CrossNoise,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdeSystem {
    pub kind: SystemKind,
    pub x0: [f64; 2],
}

impl fmt::Display for SdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SystemKind::Constant => write!(f, "constant"),
            SystemKind::Linear => write!(f, "linear"),
            SystemKind::Pendulum { sigma } => write!(f, "pendulum({sigma})"),
            SystemKind::Decay { rate } => write!(f, "decay({rate})"),
            SystemKind::Geometric => write!(f, "geometric"),
            SystemKind::CrossNoise => write!(f, "cross-noise"),
        }
    }
}

/// Catalog names accepted by [`SdeSystem::parse`].
pub const CATALOG: [&str; 6] = ["constant", "linear", "pendulum", "decay", "geometric", "cross-noise"];

impl SdeSystem {
    pub fn constant() -> Self {
        Self { kind: SystemKind::Constant, x0: [0.0, 0.0] }
    }

    pub fn linear() -> Self {
        Self { kind: SystemKind::Linear, x0: [0.0, 1.0] }
    }

    pub fn pendulum(sigma: f64) -> Self {
        Self { kind: SystemKind::Pendulum { sigma }, x0: [0.0, 1.0] }
    }

    pub fn decay(rate: f64) -> Self {
        Self { kind: SystemKind::Decay { rate }, x0: [1.0, 0.0] }
    }

    /// Parses a catalog name, optionally with one parameter, e.g.
    /// `pendulum(0.5)`. Does not validate the block structure.
    pub fn parse(input: &str) -> Result<Self> {
        let s = input.trim();
        let (name, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            _ => (s, None),
        };
        let param = |default: f64| -> Result<f64> {
            match arg {
                None => Ok(default),
                Some(a) => a.trim().parse().map_err(|_| Error::Parse { input: input.into(), reason: "bad parameter".into() }),
            }
        };
        match name {
            "constant" => Ok(Self::constant()),
            "linear" => Ok(Self::linear()),
            "pendulum" => Ok(Self::pendulum(param(1.0)?)),
            "decay" => Ok(Self::decay(param(1.0)?)),
            "geometric" => Ok(Self { kind: SystemKind::Geometric, x0: [1.0, 0.0] }),
            "cross-noise" => Ok(Self { kind: SystemKind::CrossNoise, x0: [0.0, 0.0] }),
            _ => Err(Error::UnknownName { kind: "system", name: input.into() }),
        }
    }

    /// Parses and validates in one step.
    pub fn from_name(input: &str) -> Result<Self> {
        let sys = Self::parse(input)?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn coefficients(&self, x: [f64; 2]) -> Coefficients {
        let [x1, x2] = x;
        match self.kind {
            SystemKind::Constant => [[1.0, 0.0], [0.0, 0.0]],
            SystemKind::Linear => [[x2, 0.0], [0.0, x1]],
            SystemKind::Pendulum { sigma } => [[sigma / (1.0 + x2 * x2), -x2.sin() - 0.1 * x1], [0.0, x1]],
            SystemKind::Decay { rate } => [[0.0, -rate * x1], [0.0, 0.0]],
            SystemKind::Geometric => [[x1, 0.0], [0.0, 0.0]],
            SystemKind::CrossNoise => [[1.0, 0.0], [1.0, 0.0]],
        }
    }

    pub fn jacobian(&self, x: [f64; 2]) -> Jacobian {
        let x2 = x[1];
        let mut j = [[[0.0; 2]; 2]; 2];
        match self.kind {
            SystemKind::Constant | SystemKind::CrossNoise => {}
            SystemKind::Linear => {
                j[0][0][1] = 1.0;
                j[1][1][0] = 1.0;
            }
            SystemKind::Pendulum { sigma } => {
                j[0][0][1] = -2.0 * sigma * x2 / (1.0 + x2 * x2).powi(2);
                j[0][1][0] = -0.1;
                j[0][1][1] = -x2.cos();
                j[1][1][0] = 1.0;
            }
            SystemKind::Decay { rate } => j[0][1][0] = -rate,
            SystemKind::Geometric => j[0][0][0] = 1.0,
        }
        j
    }

    /// Largest relative gap between the analytic and central-difference
    /// derivatives over a grid of `[-2, 2]²`.
    pub fn derivative_defect(&self) -> f64 {
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for a in 0..9 {
            for b in 0..9 {
                let x = [-2.0 + 0.5 * a as f64, -2.0 + 0.5 * b as f64];
                let jac = self.jacobian(x);
                for k in 0..2 {
                    let (mut up, mut down) = (x, x);
                    up[k] += h;
                    down[k] -= h;
                    let (fu, fd) = (self.coefficients(up), self.coefficients(down));
                    for i in 0..2 {
                        for j in 0..2 {
                            let fdiff = (fu[i][j] - fd[i][j]) / (2.0 * h);
                            let gap = (fdiff - jac[i][j][k]).abs() / jac[i][j][k].abs().max(1.0);
                            worst = worst.max(gap);
                        }
                    }
                }
            }
        }
        worst
    }

    /// Checks the two-block structure (no noise in the second block, noise
    /// coefficient free of `x¹`) and the derivative evaluators.
    pub fn validate(&self) -> Result<()> {
        for a in 0..9 {
            for b in 0..9 {
                let x = [-2.0 + 0.5 * a as f64, -2.0 + 0.5 * b as f64];
                let f = self.coefficients(x);
                let jac = self.jacobian(x);
                if f[1][0] != 0.0 || jac[0][0][0] != 0.0 {
                    return Err(Error::UnsupportedSystem(format!(
                        "{self}: the noise must enter only the first block through a coefficient of the second block; \
                         otherwise the Euler error lives on the 1/sqrt(n) scale of the central-limit regime, \
                         not the 1/n scale handled here"
                    )));
                }
            }
        }
        let defect = self.derivative_defect();
        if defect > 1e-4 {
            return Err(Error::InvalidParameter(format!("{self}: derivative check failed, relative gap {defect:.3e}")));
        }
        Ok(())
    }
}

fn check_state(x: [f64; 2], step: usize) -> Result<()> {
    if x.iter().any(|v| !v.is_finite() || v.abs() > 1e150) {
        return Err(Error::CoefficientOverflow { step });
    }
    Ok(())
}

fn check_driving(driving: &GridPath) -> Result<()> {
    if driving.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: driving.dim() });
    }
    Ok(())
}

/// Explicit Euler on `n` coarse steps using the coarse increments of the
/// driving path, linearly interpolated back to the fine grid (dimension 2).
pub fn euler_solve(sys: &SdeSystem, n: usize, driving: &GridPath) -> Result<GridPath> {
    check_driving(driving)?;
    let m = driving.steps();
    if n == 0 || m % n != 0 {
        return Err(Error::InvalidParameter(format!("fine grid of {m} steps is not a multiple of n = {n}")));
    }
    let r = m / n;
    let dt = driving.horizon() / n as f64;
    let mut nodes = Vec::with_capacity(n + 1);
    let mut x = sys.x0;
    nodes.push(x);
    for k in 0..n {
        let db = driving.point((k + 1) * r)[0] - driving.point(k * r)[0];
        let f = sys.coefficients(x);
        x = [x[0] + f[0][0] * db + f[0][1] * dt, x[1] + f[1][0] * db + f[1][1] * dt];
        check_state(x, k + 1)?;
        nodes.push(x);
    }
    let mut values = Vec::with_capacity(2 * (m + 1));
    for j in 0..=m {
        let (k, off) = (j / r, j % r);
        let a = nodes[k];
        let b = if off == 0 { a } else { nodes[k + 1] };
        let w = off as f64 / r as f64;
        values.push(a[0] + w * (b[0] - a[0]));
        values.push(a[1] + w * (b[1] - a[1]));
    }
    GridPath::new(driving.horizon(), m, 2, values)
}

/// Euler on every step of a driving path with `refine · n` steps; the
/// stand-in for the exact solution.
pub fn reference_solve(sys: &SdeSystem, n: usize, refine: usize, driving: &GridPath) -> Result<GridPath> {
    if refine < 64 {
        return Err(Error::InvalidParameter(format!("refine must be at least 64, got {refine}")));
    }
    if driving.steps() != refine * n {
        return Err(Error::GridMismatch { expected: refine * n, got: driving.steps() });
    }
    euler_solve(sys, driving.steps(), driving)
}

/// `n (coarse - reference)` on the fine grid.
pub fn scaled_error(n: usize, coarse: &GridPath, reference: &GridPath) -> Result<GridPath> {
    if coarse.steps() != reference.steps() {
        return Err(Error::GridMismatch { expected: reference.steps(), got: coarse.steps() });
    }
    if coarse.dim() != reference.dim() {
        return Err(Error::DimensionMismatch { expected: reference.dim(), got: coarse.dim() });
    }
    let nf = n as f64;
    let values = coarse.values().iter().zip(reference.values()).map(|(a, b)| nf * (a - b)).collect();
    GridPath::new(coarse.horizon(), coarse.steps(), coarse.dim(), values)
}

/// Driving processes of the limit equation on the fine grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ZDrivers {
    pub b: GridPath,
    pub w: GridPath,
    pub z12: Vec<f64>,
    pub z21: Vec<f64>,
    pub z22: Vec<f64>,
}

impl ZDrivers {
    pub fn new(b: GridPath, w: GridPath) -> Result<Self> {
        check_driving(&b)?;
        check_driving(&w)?;
        if b.steps() != w.steps() {
            return Err(Error::GridMismatch { expected: b.steps(), got: w.steps() });
        }
        let k = 1.0 / 12f64.sqrt();
        let (bv, wv) = (b.values(), w.values());
        let z12: Vec<f64> = bv.iter().zip(wv).map(|(b, w)| k * w + 0.5 * b).collect();
        let z21: Vec<f64> = bv.iter().zip(&z12).map(|(b, z)| b - z).collect();
        let z22: Vec<f64> = (0..=b.steps()).map(|j| 0.5 * b.time(j)).collect();
        Ok(Self { b, w, z12, z21, z22 })
    }

    pub fn steps(&self) -> usize {
        self.b.steps()
    }

    /// `dZ^{mj}` over step `j`, indexed `[m][j]`; the `(1, 1)` entry never
    /// enters the limit equation and is left at zero.
    fn increments(&self, step: usize) -> [[f64; 2]; 2] {
        let d = |v: &[f64]| v[step + 1] - v[step];
        [[0.0, d(&self.z12)], [d(&self.z21), d(&self.z22)]]
    }
}

/// Euler solve of the linear limit equation along the reference path
/// (dimension 2 output `U = (U¹, U²)`).
pub fn limit_sde_solve(sys: &SdeSystem, drivers: &ZDrivers, reference: &GridPath) -> Result<GridPath> {
    let m = drivers.steps();
    if reference.steps() != m {
        return Err(Error::GridMismatch { expected: m, got: reference.steps() });
    }
    if reference.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: reference.dim() });
    }
    let dt = reference.dt();
    let mut u = [0.0f64; 2];
    let mut values = Vec::with_capacity(2 * (m + 1));
    values.extend_from_slice(&u);
    for step in 0..m {
        let p = reference.point(step);
        let x = [p[0], p[1]];
        let f = sys.coefficients(x);
        let jac = sys.jacobian(x);
        let dy = [drivers.b.point(step + 1)[0] - drivers.b.point(step)[0], dt];
        let dz = drivers.increments(step);
        let mut next = u;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let g = jac[i][j][k];
                    if g == 0.0 {
                        continue;
                    }
                    next[i] += g * u[k] * dy[j];
                    next[i] -= g * (0..2).map(|mm| f[k][mm] * dz[mm][j]).sum::<f64>();
                }
            }
        }
        u = next;
        check_state(u, step + 1)?;
        values.extend_from_slice(&u);
    }
    GridPath::new(reference.horizon(), m, 2, values)
}

/// Mean, variance and covariance with `B₁` of one terminal component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentTriple {
    pub mean: EstimateWithError,
    pub variance: EstimateWithError,
    pub cov_b1: EstimateWithError,
}

impl MomentTriple {
    pub fn of(xs: &[f64], b1: &[f64]) -> Result<Self> {
        Ok(Self { mean: mean_with_se(xs)?, variance: variance_with_se(xs)?, cov_b1: covariance_with_se(xs, b1)? })
    }

    pub fn as_array(&self) -> [(&'static str, EstimateWithError); 3] {
        [("mean", self.mean), ("variance", self.variance), ("cov_b1", self.cov_b1)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorLawRow {
    pub n: usize,
    pub refine: usize,
    /// `n (Xⁿ - X_ref)¹₁`.
    pub error: MomentTriple,
    /// `U¹₁` driven by `(B, W)` along the reference path.
    pub limit: MomentTriple,
    /// `U¹₁ - U'¹₁ / refine` with an independent `W'`: the limit law of the
    /// error measured against a reference that is itself an Euler solution.
    pub matched_limit: MomentTriple,
    /// `E[(√n (Xⁿ - X_ref)¹₁)²]`.
    pub sqrt_n_mean_square: EstimateWithError,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorLawReport {
    pub system: SdeSystem,
    pub rows: Vec<ErrorLawRow>,
}

/// Per-replicate `[error, U¹₁, matched, B₁]` at one `n`.
pub fn error_law_samples(sys: &SdeSystem, n: usize, refine: usize, count: usize, stream: &RandomStream) -> Result<Vec<[f64; 4]>> {
    sys.validate()?;
    let m = refine * n;
    let rows = replicate(stream, count, |s| -> Result<[f64; 4]> {
        let b = brownian_path(m, 1, s)?;
        let w = brownian_path(m, 1, s)?;
        let w2 = brownian_path(m, 1, s)?;
        let coarse = euler_solve(sys, n, &b)?;
        let reference = reference_solve(sys, n, refine, &b)?;
        let err = n as f64 * (coarse.terminal()[0] - reference.terminal()[0]);
        let u = limit_sde_solve(sys, &ZDrivers::new(b.clone(), w)?, &reference)?.terminal()[0];
        let u2 = limit_sde_solve(sys, &ZDrivers::new(b.clone(), w2)?, &reference)?.terminal()[0];
        Ok([err, u, u - u2 / refine as f64, b.terminal()[0]])
    });
    rows.into_iter().collect()
}

/// Moments of the scaled error against the simulated limit, for each `n`.
pub fn error_law_comparison(
    sys: &SdeSystem,
    ladder: &[usize],
    refine: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<ErrorLawReport> {
    sys.validate()?;
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] == 0 {
        return Err(Error::InvalidParameter("n ladder must be positive and strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let samples = error_law_samples(sys, n, refine, count, &stream.labeled(&format!("n={n}")))?;
        let col = |i: usize| samples.iter().map(|r| r[i]).collect::<Vec<f64>>();
        let b1 = col(3);
        let err = col(0);
        let scaled: Vec<f64> = err.iter().map(|e| e * e / n as f64).collect();
        rows.push(ErrorLawRow {
            n,
            refine,
            error: MomentTriple::of(&err, &b1)?,
            limit: MomentTriple::of(&col(1), &b1)?,
            matched_limit: MomentTriple::of(&col(2), &b1)?,
            sqrt_n_mean_square: mean_with_se(&scaled)?,
        });
    }
    Ok(ErrorLawReport { system: *sys, rows })
}
