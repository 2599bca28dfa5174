//! Sampleable laws with optional density, log-density gradient and exact
//! characteristic function.
//!
//! The catalog covers both sides of the Rajchman dichotomy: absolutely
//! continuous laws (normal, uniform, exponential and their mixtures), whose
//! characteristic functions vanish at infinity, and lattice, point-mass and
//! Cantor laws, whose characteristic functions do not. Laws are addressed by
//! a small textual syntax, e.g. `normal`, `uniform(-1,1)`, `lattice(10)`,
//! `mixture(0.3, normal(0,1), 0.7, exponential(2))` or `iid(2, normal)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use super::rng::RandomStream;
use super::stats::{normal_cdf, PointSet};
use crate::error::{Error, Result};

const CANTOR_DEFAULT_DIGITS: u32 = 34;

#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    Normal { mean: f64, sd: f64 },
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    /// Equal atoms on `k / denominator` for `k` in `first..=last`.
    Lattice { denominator: u64, first: i64, last: i64 },
    PointMass(f64),
    /// Middle-thirds Cantor law on [0, 1]: ternary digits drawn from {0, 2}.
    Cantor { digits: u32 },
    /// Weighted mixture; weights are normalized at construction.
    Mixture(Vec<(f64, DistributionSpec)>),
    /// Independent coordinates, giving a law on R^d.
    Product(Vec<DistributionSpec>),
    // Singular laws whose characteristic function still vanishes at infinity
    // (Salem-type constructions) would slot in here; none is shipped.
}

impl DistributionSpec {
    pub fn standard_normal() -> Self {
        Self::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidParameter(format!("uniform({a},{b}) needs a < b")));
        }
        Ok(Self::Uniform { a, b })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(Error::InvalidParameter(format!("normal sd must be positive, got {sd}")));
        }
        Ok(Self::Normal { mean, sd })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(Self::Exponential { rate })
    }

    /// Atoms `0, 1/m, ..., (m-1)/m`.
    pub fn lattice(denominator: u64) -> Result<Self> {
        Self::lattice_range(denominator, 0, denominator as i64 - 1)
    }

    pub fn lattice_range(denominator: u64, first: i64, last: i64) -> Result<Self> {
        if denominator == 0 || first > last {
            return Err(Error::InvalidParameter(format!(
                "lattice({denominator},{first},{last}) is empty"
            )));
        }
        Ok(Self::Lattice { denominator, first, last })
    }

    pub fn cantor() -> Self {
        Self::Cantor { digits: CANTOR_DEFAULT_DIGITS }
    }

    pub fn mixture(parts: Vec<(f64, DistributionSpec)>) -> Result<Self> {
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if parts.is_empty() || parts.iter().any(|(w, _)| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidParameter("mixture weights must be nonnegative with positive sum".into()));
        }
        let dim = parts[0].1.dim();
        if parts.iter().any(|(_, d)| d.dim() != dim) {
            return Err(Error::InvalidParameter("mixture components differ in dimension".into()));
        }
        Ok(Self::Mixture(parts.into_iter().map(|(w, d)| (w / total, d)).collect()))
    }

    pub fn product(parts: Vec<DistributionSpec>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("product of no laws".into()));
        }
        Ok(Self::Product(parts))
    }

    pub fn iid(dim: usize, law: DistributionSpec) -> Result<Self> {
        Self::product(vec![law; dim])
    }

    /// Parses the catalog syntax described in the module docs.
    pub fn parse(input: &str) -> Result<Self> {
        let mut p = Parser { src: input, pos: 0 };
        let spec = p.spec()?;
        p.skip_ws();
        if p.pos != input.len() {
            return Err(p.error("trailing characters"));
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Product(parts) => parts.iter().map(Self::dim).sum(),
            Self::Mixture(parts) => parts[0].1.dim(),
            _ => 1,
        }
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        match self {
            Self::Normal { .. } | Self::Uniform { .. } | Self::Exponential { .. } => true,
            Self::Lattice { .. } | Self::PointMass(_) | Self::Cantor { .. } => false,
            Self::Mixture(parts) => parts.iter().all(|(w, d)| *w == 0.0 || d.is_absolutely_continuous()),
            Self::Product(parts) => parts.iter().all(Self::is_absolutely_continuous),
        }
    }

    /// Writes one draw into `out` (length `dim()`).
    pub fn draw(&self, rng: &mut RandomStream, out: &mut [f64]) {
        match self {
            Self::Product(parts) => {
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    part.draw(rng, &mut out[offset..offset + d]);
                    offset += d;
                }
            }
            Self::Mixture(parts) => self.pick(parts, rng).draw(rng, out),
            _ => out[0] = self.draw_scalar(rng),
        }
    }

    fn pick<'a>(&self, parts: &'a [(f64, DistributionSpec)], rng: &mut RandomStream) -> &'a DistributionSpec {
        let u = rng.uniform();
        let mut acc = 0.0;
        for (w, d) in parts {
            acc += w;
            if u < acc {
                return d;
            }
        }
        &parts[parts.len() - 1].1
    }

    /// One draw of a one-dimensional law. For laws on R^d this returns the
    /// first coordinate.
    pub fn draw_scalar(&self, rng: &mut RandomStream) -> f64 {
        match self {
            Self::Normal { mean, sd } => mean + sd * rng.normal(),
            Self::Uniform { a, b } => a + (b - a) * rng.uniform(),
            Self::Exponential { rate } => -(1.0 - rng.uniform()).ln() / rate,
            Self::Lattice { denominator, first, last } => {
                let k = first + rng.below((last - first + 1) as u64) as i64;
                k as f64 / *denominator as f64
            }
            Self::PointMass(x) => *x,
            Self::Cantor { digits } => {
                let mut x = 0.0;
                let mut scale = 1.0;
                let mut bits = rng.next_bits();
                for i in 0..*digits {
                    if i % 64 == 0 && i > 0 {
                        bits = rng.next_bits();
                    }
                    scale /= 3.0;
                    if bits & 1 == 1 {
                        x += 2.0 * scale;
                    }
                    bits >>= 1;
                }
                x
            }
            Self::Mixture(parts) => self.pick(parts, rng).draw_scalar(rng),
            Self::Product(parts) => {
                let mut out = vec![0.0; self.dim()];
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    part.draw(rng, &mut out[offset..offset + d]);
                    offset += d;
                }
                out[0]
            }
        }
    }

    /// `count` i.i.d. draws from a single stream.
    pub fn sample(&self, stream: &mut RandomStream, count: usize) -> Result<PointSet> {
        if count == 0 {
            return Err(Error::EmptySample);
        }
        let d = self.dim();
        let mut data = vec![0.0; d * count];
        for chunk in data.chunks_exact_mut(d) {
            self.draw(stream, chunk);
        }
        PointSet::new(d, data)
    }

    pub fn sample_scalar(&self, stream: &mut RandomStream, count: usize) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.dim() });
        }
        if count == 0 {
            return Err(Error::EmptySample);
        }
        Ok((0..count).map(|_| self.draw_scalar(stream)).collect())
    }

    /// Lebesgue density, when the law has one.
    pub fn density(&self, y: &[f64]) -> Option<f64> {
        match self {
            Self::Normal { mean, sd } => {
                let z = (y[0] - mean) / sd;
                Some((-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt()))
            }
            Self::Uniform { a, b } => Some(if (*a..*b).contains(&y[0]) { 1.0 / (b - a) } else { 0.0 }),
            Self::Exponential { rate } => Some(if y[0] >= 0.0 { rate * (-rate * y[0]).exp() } else { 0.0 }),
            Self::Mixture(parts) => parts.iter().map(|(w, d)| d.density(y).map(|p| w * p)).sum(),
            Self::Product(parts) => {
                let mut offset = 0;
                let mut p = 1.0;
                for part in parts {
                    let d = part.dim();
                    p *= part.density(&y[offset..offset + d])?;
                    offset += d;
                }
                Some(p)
            }
            _ => None,
        }
    }

    /// Log-density gradient `rho_i = d_i log p`, available when the
    /// distributional gradient of the law is `rho P` with `rho` square
    /// integrable. Uniform laws are excluded (their derivative carries
    /// boundary atoms). For the exponential law the value `-rate` is only
    /// meaningful against test functions vanishing at the origin.
    pub fn rho(&self, y: &[f64]) -> Option<Vec<f64>> {
        match self {
            Self::Normal { mean, sd } => Some(vec![-(y[0] - mean) / (sd * sd)]),
            Self::Exponential { rate } => Some(vec![-rate]),
            Self::Mixture(parts) => {
                let mut p = 0.0;
                let mut dp = vec![0.0; self.dim()];
                for (w, d) in parts {
                    let pd = d.density(y)?;
                    let r = d.rho(y)?;
                    p += w * pd;
                    for (acc, ri) in dp.iter_mut().zip(r) {
                        *acc += w * pd * ri;
                    }
                }
                (p > 0.0).then(|| dp.into_iter().map(|v| v / p).collect())
            }
            Self::Product(parts) => {
                let mut out = Vec::with_capacity(self.dim());
                let mut offset = 0;
                for part in parts {
                    let d = part.dim();
                    out.extend(part.rho(&y[offset..offset + d])?);
                    offset += d;
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Exact characteristic function `E exp(i<u, X>)`.
    pub fn cf(&self, u: &[f64]) -> Option<Complex64> {
        let i = Complex64::i();
        match self {
            Self::Normal { mean, sd } => {
                let v = u[0];
                Some(Complex64::from_polar((-0.5 * sd * sd * v * v).exp(), v * mean))
            }
            Self::Uniform { a, b } => {
                let v = u[0];
                if v == 0.0 {
                    return Some(Complex64::new(1.0, 0.0));
                }
                Some(((i * v * b).exp() - (i * v * a).exp()) / (i * v * (b - a)))
            }
            Self::Exponential { rate } => Some(*rate / (Complex64::new(*rate, -u[0]))),
            Self::Lattice { denominator, first, last } => {
                let count = (last - first + 1) as f64;
                let sum: Complex64 = (*first..=*last)
                    .map(|k| Complex64::from_polar(1.0, u[0] * k as f64 / *denominator as f64))
                    .sum();
                Some(sum / count)
            }
            Self::PointMass(x) => Some(Complex64::from_polar(1.0, u[0] * x)),
            Self::Cantor { digits } => {
                let mut z = Complex64::new(1.0, 0.0);
                let mut scale = 1.0;
                for _ in 0..*digits {
                    scale /= 3.0;
                    z *= (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, 2.0 * u[0] * scale)) / 2.0;
                }
                Some(z)
            }
            Self::Mixture(parts) => parts.iter().map(|(w, d)| d.cf(u).map(|z| z * *w)).sum(),
            Self::Product(parts) => {
                let mut offset = 0;
                let mut z = Complex64::new(1.0, 0.0);
                for part in parts {
                    let d = part.dim();
                    z *= part.cf(&u[offset..offset + d])?;
                    offset += d;
                }
                Some(z)
            }
        }
    }

    /// CDF of a one-dimensional law.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        match self {
            Self::Normal { mean, sd } => Some(normal_cdf((x - mean) / sd)),
            Self::Uniform { a, b } => Some(((x - a) / (b - a)).clamp(0.0, 1.0)),
            Self::Exponential { rate } => Some(if x <= 0.0 { 0.0 } else { 1.0 - (-rate * x).exp() }),
            Self::Lattice { denominator, first, last } => {
                let count = (last - first + 1) as f64;
                let below = (*first..=*last).filter(|&k| (k as f64 / *denominator as f64) <= x).count();
                Some(below as f64 / count)
            }
            Self::PointMass(p) => Some(if x >= *p { 1.0 } else { 0.0 }),
            Self::Cantor { digits } => {
                if x < 0.0 {
                    return Some(0.0);
                }
                if x >= 1.0 {
                    return Some(1.0);
                }
                // Cantor function: read ternary digits until the first 1.
                let mut y = x;
                let mut value = 0.0;
                let mut weight = 0.5;
                for _ in 0..*digits {
                    y *= 3.0;
                    let digit = y.floor();
                    y -= digit;
                    if digit >= 2.0 {
                        value += weight;
                    } else if digit >= 1.0 {
                        return Some(value + weight);
                    }
                    weight *= 0.5;
                }
                Some(value)
            }
            Self::Mixture(parts) => parts.iter().map(|(w, d)| d.cdf(x).map(|c| w * c)).sum(),
            Self::Product(parts) if parts.len() == 1 => parts[0].cdf(x),
            Self::Product(_) => None,
        }
    }

    /// Exact mean, when finite and known.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Self::Normal { mean, .. } => Some(*mean),
            Self::Uniform { a, b } => Some(0.5 * (a + b)),
            Self::Exponential { rate } => Some(1.0 / rate),
            Self::Lattice { denominator, first, last } => {
                Some(0.5 * (*first + *last) as f64 / *denominator as f64)
            }
            Self::PointMass(x) => Some(*x),
            Self::Cantor { .. } => Some(0.5),
            Self::Mixture(parts) => parts.iter().map(|(w, d)| d.mean().map(|m| w * m)).sum(),
            Self::Product(parts) if parts.len() == 1 => parts[0].mean(),
            Self::Product(_) => None,
        }
    }

    /// Frequencies where the characteristic function does not decay: the
    /// returns to modulus one `2π·denominator·j` of a lattice law, and the
    /// self-similar frequencies `2π·3^j` of the Cantor law.
    pub fn resonant_frequencies(&self, count: usize) -> Option<Vec<f64>> {
        match self {
            Self::Lattice { denominator, .. } => {
                Some((1..=count).map(|j| 2.0 * PI * (*denominator as f64) * j as f64).collect())
            }
            Self::Cantor { .. } => Some((1..=count).map(|j| 2.0 * PI * 3f64.powi(j as i32)).collect()),
            _ => None,
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal { mean, sd } => write!(f, "normal({mean},{sd})"),
            Self::Uniform { a, b } => write!(f, "uniform({a},{b})"),
            Self::Exponential { rate } => write!(f, "exponential({rate})"),
            Self::Lattice { denominator, first, last } => write!(f, "lattice({denominator},{first},{last})"),
            Self::PointMass(x) => write!(f, "point({x})"),
            Self::Cantor { digits } => write!(f, "cantor({digits})"),
            Self::Mixture(parts) => {
                write!(f, "mixture(")?;
                for (i, (w, d)) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{w},{d}")?;
                }
                write!(f, ")")
            }
            Self::Product(parts) => {
                write!(f, "product(")?;
                for (i, d) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{d}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl RandomStream {
    fn next_bits(&mut self) -> u64 {
        rand::RngCore::next_u64(self)
    }
}

enum Arg {
    Num(f64),
    Law(DistributionSpec),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> Error {
        Error::Parse { input: self.src.to_string(), reason: format!("{reason} at byte {}", self.pos) }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+' || c == '.') {
            let end = rest.find([',', ')']).unwrap_or(rest.len());
            let text = rest[..end].trim();
            let v: f64 = text.parse().map_err(|_| self.error("expected a number"))?;
            self.pos += end;
            Ok(Arg::Num(v))
        } else {
            Ok(Arg::Law(self.spec()?))
        }
    }

    fn spec(&mut self) -> Result<DistributionSpec> {
        let name = self.ident().to_ascii_lowercase();
        if name.is_empty() {
            return Err(self.error("expected a law name"));
        }
        let mut args = Vec::new();
        if self.eat('(') {
            if !self.eat(')') {
                loop {
                    args.push(self.arg()?);
                    if self.eat(')') {
                        break;
                    }
                    if !self.eat(',') {
                        return Err(self.error("expected `,` or `)`"));
                    }
                }
            }
        }
        let nums = |args: &[Arg]| -> Option<Vec<f64>> {
            args.iter().map(|a| if let Arg::Num(v) = a { Some(*v) } else { None }).collect()
        };
        let bad = |p: &Self| p.error(&format!("bad arguments for `{name}`"));
        match name.as_str() {
            "normal" | "gaussian" => match nums(&args).ok_or_else(|| bad(self))?.as_slice() {
                [] => Ok(DistributionSpec::standard_normal()),
                [m, s] => DistributionSpec::normal(*m, *s),
                _ => Err(bad(self)),
            },
            "uniform" => match nums(&args).ok_or_else(|| bad(self))?.as_slice() {
                [] => DistributionSpec::uniform(0.0, 1.0),
                [a, b] => DistributionSpec::uniform(*a, *b),
                _ => Err(bad(self)),
            },
            "exponential" => match nums(&args).ok_or_else(|| bad(self))?.as_slice() {
                [] => DistributionSpec::exponential(1.0),
                [r] => DistributionSpec::exponential(*r),
                _ => Err(bad(self)),
            },
            "lattice" => match nums(&args).ok_or_else(|| bad(self))?.as_slice() {
                [m] if *m >= 1.0 => DistributionSpec::lattice(*m as u64),
                [m, a, b] if *m >= 1.0 => DistributionSpec::lattice_range(*m as u64, *a as i64, *b as i64),
                _ => Err(bad(self)),
            },
            "point" => match nums(&args).ok_or_else(|| bad(self))?.as_slice() {
                [] => Ok(DistributionSpec::PointMass(0.0)),
                [x] => Ok(DistributionSpec::PointMass(*x)),
                _ => Err(bad(self)),
            },
            "cantor" => match nums(&args).ok_or_else(|| bad(self))?.as_slice() {
                [] => Ok(DistributionSpec::cantor()),
                [d] if *d >= 1.0 => Ok(DistributionSpec::Cantor { digits: *d as u32 }),
                _ => Err(bad(self)),
            },
            "mixture" => {
                if args.is_empty() || args.len() % 2 != 0 {
                    return Err(bad(self));
                }
                let mut parts = Vec::new();
                let mut it = args.into_iter();
                while let (Some(Arg::Num(w)), Some(Arg::Law(d))) = (it.next(), it.next()) {
                    parts.push((w, d));
                }
                DistributionSpec::mixture(parts)
            }
            "product" => {
                let parts: Option<Vec<DistributionSpec>> =
                    args.into_iter().map(|a| if let Arg::Law(d) = a { Some(d) } else { None }).collect();
                DistributionSpec::product(parts.ok_or_else(|| bad(self))?)
            }
            "iid" => match args.as_slice() {
                [Arg::Num(d), Arg::Law(law)] if *d >= 1.0 => DistributionSpec::iid(*d as usize, law.clone()),
                _ => Err(bad(self)),
            },
            _ => Err(Error::UnknownName { kind: "distribution", name }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastics::rng::derive_stream;
    use crate::stochastics::stats::{empirical_cf, ks_distance, mean_with_se};

    fn catalog() -> Vec<DistributionSpec> {
        [
            "normal",
            "normal(1,0.5)",
            "uniform(-1,2)",
            "exponential(2)",
            "lattice(10)",
            "point(0.3)",
            "cantor",
            "mixture(0.3, normal(-1,0.5), 0.7, exponential(1))",
        ]
        .iter()
        .map(|s| DistributionSpec::parse(s).unwrap())
        .collect()
    }

    #[test]
    fn parse_round_trips_through_display() {
        for d in catalog() {
            assert_eq!(DistributionSpec::parse(&d.to_string()).unwrap(), d);
        }
        let d = DistributionSpec::parse("iid(3, uniform)").unwrap();
        assert_eq!(d.dim(), 3);
    }

    #[test]
    fn unknown_family_is_rejected() {
        assert!(matches!(
            DistributionSpec::parse("weibull(2)"),
            Err(Error::UnknownName { kind: "distribution", .. })
        ));
        assert!(matches!(DistributionSpec::parse("normal(0)"), Err(Error::Parse { .. })));
        assert!(DistributionSpec::parse("uniform(2,1)").is_err());
    }

    #[test]
    fn normal_sample_mean() {
        let xs = DistributionSpec::standard_normal().sample_scalar(&mut derive_stream(1, 0), 1_000_000).unwrap();
        assert!(mean_with_se(&xs).unwrap().value.abs() < 3e-3);
    }

    #[test]
    fn supports() {
        let mut s = derive_stream(2, 0);
        let xs = DistributionSpec::uniform(0.0, 1.0).unwrap().sample_scalar(&mut s, 50_000).unwrap();
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));
        let xs = DistributionSpec::lattice(10).unwrap().sample_scalar(&mut s, 50_000).unwrap();
        assert!(xs.iter().all(|x| {
            let k = (x * 10.0).round();
            (0.0..=9.0).contains(&k) && (k / 10.0 - x).abs() == 0.0
        }));
        let xs = DistributionSpec::cantor().sample_scalar(&mut s, 10_000).unwrap();
        // No mass in the removed middle third.
        assert!(xs.iter().all(|x| !(1.0 / 3.0 + 1e-12..2.0 / 3.0 - 1e-12).contains(x)));
        assert!(DistributionSpec::iid(2, DistributionSpec::standard_normal()).unwrap().sample_scalar(&mut s, 3).is_err());
    }

    #[test]
    fn samplers_match_cdfs() {
        for (i, d) in catalog().into_iter().enumerate() {
            if !d.is_absolutely_continuous() && !matches!(d, DistributionSpec::Cantor { .. }) {
                continue;
            }
            let xs = d.sample_scalar(&mut derive_stream(3, i as u64), 100_000).unwrap();
            let ks = ks_distance(&xs, |x| d.cdf(x).unwrap()).unwrap();
            assert!(ks < 0.0061, "{d}: ks = {ks}");
        }
    }

    #[test]
    fn samplers_match_characteristic_functions() {
        let n = 200_000;
        for (i, d) in catalog().into_iter().enumerate() {
            let pts = d.sample(&mut derive_stream(4, i as u64), n).unwrap();
            for u in [0.5, 1.0, 3.0, 7.0] {
                let emp = empirical_cf(&pts, &[u]).unwrap();
                let exact = d.cf(&[u]).unwrap();
                // Each component has standard deviation at most 1/sqrt(n).
                assert!((emp - exact).norm() < 5.0 / (n as f64).sqrt(), "{d} at {u}: {emp} vs {exact}");
            }
        }
    }

    #[test]
    fn rho_is_log_density_derivative() {
        for d in catalog() {
            for k in 0..200 {
                let y = -3.0 + 6.0 * k as f64 / 199.0;
                let (Some(p), Some(r)) = (d.density(&[y]), d.rho(&[y])) else { continue };
                if p < 1e-8 || (matches!(d, DistributionSpec::Exponential { .. }) && y < 0.05) {
                    continue;
                }
                if let DistributionSpec::Mixture(_) = d {
                    if y.abs() < 0.05 {
                        continue; // exponential component has a jump at 0
                    }
                }
                let h = 1e-5;
                let fd = ((d.density(&[y + h]).unwrap()).ln() - (d.density(&[y - h]).unwrap()).ln()) / (2.0 * h);
                assert!((fd - r[0]).abs() <= 1e-6 * r[0].abs().max(1.0), "{d} at {y}: {fd} vs {}", r[0]);
            }
        }
    }

    #[test]
    fn product_laws() {
        let d = DistributionSpec::parse("product(normal, uniform)").unwrap();
        assert_eq!(d.dim(), 2);
        let z = d.cf(&[1.0, 0.0]).unwrap();
        assert!((z.re - (-0.5f64).exp()).abs() < 1e-15);
        assert!(d.density(&[0.0, 0.5]).unwrap() > 0.0);
        assert_eq!(d.rho(&[0.0, 0.5]), None);
    }

    #[test]
    fn cantor_cdf_is_the_cantor_function() {
        let d = DistributionSpec::cantor();
        assert_eq!(d.cdf(0.5), Some(0.5));
        assert!((d.cdf(0.25).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        // Flat across the removed middle third of [0, 1/3].
        assert_eq!(d.cdf(0.15), Some(0.25));
    }
}
