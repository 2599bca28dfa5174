//! Smooth bounded test functions with closed-form derivatives.
//!
//! Unbounded shapes (`x`, `x^2`) are composed with a C² truncation that is
//! the identity on [-10, 10] and saturates with `tanh` outside, so every
//! shipped function stays in the bounded C² algebra.

use std::fmt;

use crate::error::{Error, Result};

/// Radius inside which the truncation is the identity.
pub const TRUNCATION_RADIUS: f64 = 10.0;

/// `T(x)` with `T(x) = x` for `|x| <= 10`.
pub fn truncate(x: f64) -> f64 {
    truncate_jet(x).0
}

/// Value, first and second derivative of the truncation.
fn truncate_jet(x: f64) -> (f64, f64, f64) {
    let r = TRUNCATION_RADIUS;
    if x.abs() <= r {
        return (x, 1.0, 0.0);
    }
    let s = x.signum();
    let u = x.abs() - r;
    let t = u.tanh();
    let sech2 = 1.0 - t * t;
    (s * (r + t), sech2, -2.0 * s * sech2 * t)
}

/// One-dimensional building blocks.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    /// Truncated identity.
    Identity,
    /// Square of the truncated identity.
    Square,
    Sin,
    Cos,
    /// `1 + tanh(x)`, a positive weight.
    OnePlusTanh,
    /// `1 + T(x)^2`, a positive weight.
    OnePlusSquare,
    /// `exp(-1 / (1 - ((x - center) / radius)^2))` on the support, else 0.
    Bump { center: f64, radius: f64 },
}

impl Scalar {
    /// `(f, f', f'')` at `x`.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Self::Identity => truncate_jet(x),
            Self::Square => {
                let (t, t1, t2) = truncate_jet(x);
                (t * t, 2.0 * t * t1, 2.0 * (t1 * t1 + t * t2))
            }
            Self::Sin => (x.sin(), x.cos(), -x.sin()),
            Self::Cos => (x.cos(), -x.sin(), -x.cos()),
            Self::OnePlusTanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                (1.0 + t, s, -2.0 * s * t)
            }
            Self::OnePlusSquare => {
                let (t, t1, t2) = truncate_jet(x);
                (1.0 + t * t, 2.0 * t * t1, 2.0 * (t1 * t1 + t * t2))
            }
            Self::Bump { center, radius } => {
                let u = (x - center) / radius;
                if u.abs() >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                // g = exp(h), h = -1/(1-u^2).
                let q = 1.0 - u * u;
                let g = (-1.0 / q).exp();
                let h1 = -2.0 * u / (q * q);
                let h2 = -(2.0 + 6.0 * u * u) / (q * q * q);
                let d1 = g * h1 / radius;
                let d2 = g * (h1 * h1 + h2) / (radius * radius);
                (g, d1, d2)
            }
        }
    }

    fn name(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Square => "square".into(),
            Self::Sin => "sin".into(),
            Self::Cos => "cos".into(),
            Self::OnePlusTanh => "one-plus-tanh".into(),
            Self::OnePlusSquare => "one-plus-square".into(),
            Self::Bump { center, radius } => format!("bump({center},{radius})"),
        }
    }
}

/// A real function on ℝ^d with gradient and Hessian.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `f(y[index])`.
    Coordinate { index: usize, f: Scalar },
    Sum(Vec<TestFunction>),
    Product(Vec<TestFunction>),
    Scaled(f64, Box<TestFunction>),
}

impl TestFunction {
    pub fn scalar(f: Scalar) -> Self {
        Self::Coordinate { index: 0, f }
    }

    pub fn identity() -> Self {
        Self::scalar(Scalar::Identity)
    }

    pub fn square() -> Self {
        Self::scalar(Scalar::Square)
    }

    pub fn sin() -> Self {
        Self::scalar(Scalar::Sin)
    }

    pub fn cos() -> Self {
        Self::scalar(Scalar::Cos)
    }

    pub fn constant(c: f64) -> Self {
        Self::Constant(c)
    }

    /// Bump supported on `[-1, 1]`, scaled so that it integrates to 1.
    pub fn unit_bump() -> Self {
        // ∫ exp(-1/(1-x^2)) dx over [-1, 1].
        const MASS: f64 = 0.443_993_816_168_079_4;
        Self::Scaled(1.0 / MASS, Box::new(Self::scalar(Scalar::Bump { center: 0.0, radius: 1.0 })))
    }

    /// `f` applied to coordinate `index`.
    pub fn on(index: usize, f: Scalar) -> Self {
        Self::Coordinate { index, f }
    }

    /// Parses a catalog name: `identity`, `square`, `sin`, `cos`,
    /// `one-plus-tanh`, `one-plus-square`, `bump`, `constant(c)`, optionally
    /// suffixed by `@j` to act on coordinate `j`.
    pub fn parse(input: &str) -> Result<Self> {
        let text = input.trim();
        let (body, index) = match text.split_once('@') {
            Some((b, j)) => {
                let j = j.trim().parse::<usize>().map_err(|e| Error::Parse {
                    input: input.to_string(),
                    reason: e.to_string(),
                })?;
                (b.trim(), j)
            }
            None => (text, 0),
        };
        if let Some(arg) = body.strip_prefix("constant(").and_then(|r| r.strip_suffix(')')) {
            let c = arg.trim().parse::<f64>().map_err(|e| Error::Parse {
                input: input.to_string(),
                reason: e.to_string(),
            })?;
            return Ok(Self::Constant(c));
        }
        let f = match body {
            "identity" | "x" => Scalar::Identity,
            "square" | "x2" => Scalar::Square,
            "sin" => Scalar::Sin,
            "cos" => Scalar::Cos,
            "one-plus-tanh" => Scalar::OnePlusTanh,
            "one-plus-square" => Scalar::OnePlusSquare,
            "bump" => return Ok(Self::unit_bump()),
            _ => return Err(Error::UnknownName { kind: "test function", name: body.to_string() }),
        };
        Ok(Self::on(index, f))
    }

    /// Smallest dimension the function can be evaluated in.
    pub fn min_dim(&self) -> usize {
        match self {
            Self::Constant(_) => 0,
            Self::Coordinate { index, .. } => index + 1,
            Self::Sum(fs) | Self::Product(fs) => fs.iter().map(Self::min_dim).max().unwrap_or(0),
            Self::Scaled(_, f) => f.min_dim(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant(_) => true,
            Self::Coordinate { .. } => false,
            Self::Sum(fs) | Self::Product(fs) => fs.iter().all(Self::is_constant),
            Self::Scaled(c, f) => *c == 0.0 || f.is_constant(),
        }
    }

    /// Every shipped piece is bounded; the tag is kept for callers that
    /// assemble their own functions.
    pub fn is_bounded(&self) -> bool {
        true
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Coordinate { index, f } => f.jet(y[*index]).0,
            Self::Sum(fs) => fs.iter().map(|f| f.value(y)).sum(),
            Self::Product(fs) => fs.iter().map(|f| f.value(y)).product(),
            Self::Scaled(c, f) => c * f.value(y),
        }
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; y.len()];
        self.add_gradient(y, 1.0, &mut g);
        g
    }

    fn add_gradient(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Self::Constant(_) => {}
            Self::Coordinate { index, f } => out[*index] += scale * f.jet(y[*index]).1,
            Self::Sum(fs) => fs.iter().for_each(|f| f.add_gradient(y, scale, out)),
            Self::Product(fs) => {
                let values: Vec<f64> = fs.iter().map(|f| f.value(y)).collect();
                for (i, f) in fs.iter().enumerate() {
                    let others: f64 =
                        values.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product();
                    f.add_gradient(y, scale * others, out);
                }
            }
            Self::Scaled(c, f) => f.add_gradient(y, scale * c, out),
        }
    }

    /// Row-major `d x d` Hessian.
    pub fn hessian(&self, y: &[f64]) -> Vec<f64> {
        let d = y.len();
        match self {
            Self::Constant(_) => vec![0.0; d * d],
            Self::Coordinate { index, f } => {
                let mut h = vec![0.0; d * d];
                h[index * d + index] = f.jet(y[*index]).2;
                h
            }
            Self::Sum(fs) => {
                let mut h = vec![0.0; d * d];
                for f in fs {
                    h.iter_mut().zip(f.hessian(y)).for_each(|(a, b)| *a += b);
                }
                h
            }
            Self::Product(fs) => {
                // Fold pairwise: (uv)'' = u''v + u'v'^T + v'u'^T + uv''.
                let mut u = TestFunction::Constant(1.0);
                let mut h = vec![0.0; d * d];
                for v in fs {
                    let (uv, vv) = (u.value(y), v.value(y));
                    let (ug, vg) = (u.gradient(y), v.gradient(y));
                    let vh = v.hessian(y);
                    for i in 0..d {
                        for j in 0..d {
                            h[i * d + j] =
                                h[i * d + j] * vv + ug[i] * vg[j] + vg[i] * ug[j] + uv * vh[i * d + j];
                        }
                    }
                    u = match u {
                        TestFunction::Constant(_) => v.clone(),
                        TestFunction::Product(mut ps) => {
                            ps.push(v.clone());
                            TestFunction::Product(ps)
                        }
                        other => TestFunction::Product(vec![other, v.clone()]),
                    };
                }
                h
            }
            Self::Scaled(c, f) => f.hessian(y).into_iter().map(|v| c * v).collect(),
        }
    }

    pub fn laplacian(&self, y: &[f64]) -> f64 {
        let d = y.len();
        let h = self.hessian(y);
        (0..d).map(|i| h[i * d + i]).sum()
    }

    /// `Σ φ'_i(y)^2`.
    pub fn gradient_norm_sq(&self, y: &[f64]) -> f64 {
        self.gradient(y).iter().map(|g| g * g).sum()
    }

    pub fn plus(self, other: TestFunction) -> Self {
        Self::Sum(vec![self, other])
    }

    pub fn times(self, other: TestFunction) -> Self {
        Self::Product(vec![self, other])
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::Scaled(c, Box::new(self))
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "constant({c})"),
            Self::Coordinate { index: 0, f: s } => write!(f, "{}", s.name()),
            Self::Coordinate { index, f: s } => write!(f, "{}@{index}", s.name()),
            Self::Sum(fs) => {
                let parts: Vec<String> = fs.iter().map(|g| g.to_string()).collect();
                write!(f, "({})", parts.join(" + "))
            }
            Self::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|g| g.to_string()).collect();
                write!(f, "({})", parts.join(" * "))
            }
            Self::Scaled(c, g) => write!(f, "{c}*{g}"),
        }
    }
}
