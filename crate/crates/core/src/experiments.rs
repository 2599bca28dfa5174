//! Experiment catalog, configuration and CSV result rows.
//!
//! Each experiment id maps to one runner that turns an [`ExperimentConfig`]
//! into [`ResultRow`]s. Rows carry a [`Gate`] that decides pass/fail; the
//! CSV only shows the estimate, its standard error, the target and its
//! provenance.

use std::fmt;
use std::io::Write;

use crate::chaos::{
    rotation_transform, sharp_moment_comparison, theorem9_limit, ChaosElement, PathFunctional, RnWeights,
    RotationSchedule,
};
use crate::error::{Error, Result};
use crate::graduation::{
    bias_estimate, bias_samples_all, default_symmetric_bias, first_order_check, gamma_estimate, general_graduation_gamma,
    girsanov_gamma_check, scaled_error_samples, shift_bias_default, BiasKind, BracketSetup, Displacement, GraduationMap,
};
use crate::mechsde::{error_law_comparison, SdeSystem};
use crate::paths::{
    kurtz_protter_statistics, oscillating_terminal_samples, theorem6_bracket, theorem6_target, OscillatorSpec,
    PeriodicFn, StepFunction, TimeChangeClock,
};
use crate::rajchman::{arbitrary_functions_test, cf_decay_profile, classify_rajchman, power_ladder, RajchmanVerdict};
use crate::stochastics::quadrature::{integrate_cells, normal_expectation};
use crate::stochastics::stats::{covariance_with_se, extrapolate, ks_distance, mean_with_se, variance_with_se};
use crate::stochastics::{DistributionSpec, EstimateWithError, RandomStream, Scalar, TestFunction};

/// Exact CSV header.
pub const CSV_HEADER: &str = "experiment,n,statistic,estimate,std_error,target,provenance,z_score";

/// KS gate `1.93 / √N`, which is `0.0061` at `N = 10⁵`.
pub const KS_GATE_SCALE: f64 = 1.93;

pub const DEFAULT_GATE: f64 = 4.0;
pub const DEFAULT_GRID_MULT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Paper,
    AnalyticOracle,
    SimulationOracle,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::AnalyticOracle => "analytic-oracle",
            Self::SimulationOracle => "simulation-oracle",
        })
    }
}

/// Pass rule for one row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    /// `|z| ≤` the configured gate.
    Sigma,
    /// `|z| ≤ k` for a fixed `k`.
    SigmaAt(f64),
    /// `|estimate - target| ≤ tol`.
    Abs(f64),
    /// `estimate < target`.
    Below,
    /// `estimate ≥ target`.
    AtLeast,
    /// Reported only.
    Info,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NValue {
    Finite(usize),
    /// Extrapolated to `n = ∞`.
    Infinite,
    /// Not indexed by `n`.
    None,
}

impl fmt::Display for NValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(n) => write!(f, "{n}"),
            Self::Infinite => f.write_str("inf"),
            Self::None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub n: NValue,
    pub statistic: String,
    pub estimate: f64,
    pub std_error: f64,
    pub target: Option<(f64, Provenance)>,
    pub gate: Gate,
}

impl ResultRow {
    pub fn z_score(&self) -> Option<f64> {
        let (t, _) = self.target?;
        (self.std_error > 0.0).then(|| (self.estimate - t) / self.std_error)
    }

    fn within_sigma(&self, k: f64) -> bool {
        match (self.target, self.z_score()) {
            (_, Some(z)) => z.abs() <= k,
            (Some((t, _)), None) => (self.estimate - t).abs() <= 1e-12 * t.abs().max(1.0),
            (None, None) => false,
        }
    }

    pub fn passes(&self, gate_sigma: f64) -> bool {
        let target = self.target.map(|t| t.0);
        match self.gate {
            Gate::Info => true,
            Gate::Sigma => self.within_sigma(gate_sigma),
            Gate::SigmaAt(k) => self.within_sigma(k),
            Gate::Abs(tol) => target.is_some_and(|t| (self.estimate - t).abs() <= tol),
            Gate::Below => target.is_some_and(|t| self.estimate < t),
            Gate::AtLeast => target.is_some_and(|t| self.estimate >= t),
        }
    }

    pub fn is_gated(&self) -> bool {
        self.gate != Gate::Info
    }

    pub fn csv_line(&self) -> String {
        let (target, prov) = match self.target {
            Some((t, p)) => (t.to_string(), p.to_string()),
            None => (String::new(), String::new()),
        };
        let z = self.z_score().map(|z| z.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.experiment, self.n, self.statistic, self.estimate, self.std_error, target, prov, z
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, rows: &[ResultRow]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    for r in rows {
        writeln!(out, "{}", r.csv_line()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// One catalog entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExperimentInfo {
    pub id: &'static str,
    pub module: &'static str,
    pub description: &'static str,
    default_replicates: usize,
    default_ladder: &'static [usize],
}

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        id: "thm4-uniform",
        module: "graduation",
        description: "scaled graduation error n(Y_n - Y) is uniform on (-1/2, 1/2); lattice counterexample",
        default_replicates: 100_000,
        default_ladder: &[1000],
    },
    ExperimentInfo {
        id: "thm4-gamma",
        module: "graduation",
        description: "square field n^2 E[(phi(Y_n) - phi(Y))^2] -> E|phi'|^2 / 12, extrapolated in n",
        default_replicates: 100_000,
        default_ladder: &[100, 200, 400],
    },
    ExperimentInfo {
        id: "thm4-bias",
        module: "graduation",
        description: "bias brackets H1..H4 for phi = x^2 and chi = 1, extrapolated in n",
        default_replicates: 100_000,
        default_ladder: &[100, 200, 400],
    },
    ExperimentInfo {
        id: "remark2-default",
        module: "graduation",
        description: "rounding down: shift -1/2 at alpha = n and vanishing symmetric bracket, extrapolated in n",
        default_replicates: 100_000,
        default_ladder: &[250, 500, 1000],
    },
    ExperimentInfo {
        id: "thm2-first-order",
        module: "graduation",
        description: "product rule defect of the bias bracket shrinks with n",
        default_replicates: 20_000,
        default_ladder: &[100, 200, 400],
    },
    ExperimentInfo {
        id: "thm3-girsanov",
        module: "graduation",
        description: "square field is unchanged by two positive density reweightings",
        default_replicates: 100_000,
        default_ladder: &[400],
    },
    ExperimentInfo {
        id: "thm4bis-general",
        module: "graduation",
        description: "linear displacement L theta(ny)/n in dimension 2 gives gamma = L L^T / 12",
        default_replicates: 100_000,
        default_ladder: &[200],
    },
    ExperimentInfo {
        id: "prop1-arbitrary",
        module: "rajchman",
        description: "{nX + Y} uniform and independent of X for Gaussian X",
        default_replicates: 100_000,
        default_ladder: &[1000],
    },
    ExperimentInfo {
        id: "rajchman-decay",
        module: "rajchman",
        description: "characteristic-function decay verdicts for smooth, lattice and Cantor laws",
        default_replicates: 20_000,
        default_ladder: &[],
    },
    ExperimentInfo {
        id: "thm5-oscillating",
        module: "paths",
        description: "oscillating integral int f(ns) dM is centred Gaussian with variance ||f||^2 <M> and decoupled from M",
        default_replicates: 100_000,
        default_ladder: &[64],
    },
    ExperimentInfo {
        id: "kp-statistics",
        module: "paths",
        description: "variances and covariances of the Euler-type error processes P1..P4",
        default_replicates: 100_000,
        default_ladder: &[64],
    },
    ExperimentInfo {
        id: "thm6-bracket",
        module: "paths",
        description: "complex bracket limit for eta = zeta = 1, extrapolated in n",
        default_replicates: 100_000,
        default_ladder: &[16, 32, 64],
    },
    ExperimentInfo {
        id: "thm7-cf",
        module: "paths",
        description: "characteristic-function form for xi = 2 on [0, 1/2), extrapolated in n",
        default_replicates: 100_000,
        default_ladder: &[16, 32, 64],
    },
    ExperimentInfo {
        id: "thm8-sharp",
        module: "chaos",
        description: "moments of -i n (R_n X - X) against the sharp gradient X#, chaos orders 1 and 2",
        default_replicates: 100_000,
        default_ladder: &[64],
    },
    ExperimentInfo {
        id: "thm9-chaos",
        module: "chaos",
        description: "deterministic n^2 E|R_n X - X|^2 -> k ||X||^2 for orders 1 and 2",
        default_replicates: 1,
        default_ladder: &[8, 16, 32],
    },
    ExperimentInfo {
        id: "thm10-rotation",
        module: "chaos",
        description: "periodic rotations of Brownian increments preserve laws and decorrelate from B",
        default_replicates: 100_000,
        default_ladder: &[64],
    },
    ExperimentInfo {
        id: "thm11-euler",
        module: "sde",
        description: "Euler error n(X^n - X) of the mechanical system against the limit equation",
        default_replicates: 100_000,
        default_ladder: &[16, 32, 64],
    },
];

pub fn experiment_info(id: &str) -> Result<&'static ExperimentInfo> {
    EXPERIMENTS.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownName { kind: "experiment", name: id.into() })
}

pub fn experiments_in_module(module: &str) -> Vec<&'static str> {
    EXPERIMENTS.iter().filter(|e| e.module == module).map(|e| e.id).collect()
}

/// One line per experiment: `id  module  description`.
pub fn list_experiments() -> String {
    EXPERIMENTS.iter().map(|e| format!("{:<18} {:<11} {}\n", e.id, e.module, e.description)).collect()
}

/// Settings for a run. Unset fields fall back to per-experiment defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub seed: u64,
    pub replicates: Option<usize>,
    pub n_ladder: Option<Vec<usize>>,
    pub grid_mult: usize,
    pub distribution: Option<String>,
    pub system: Option<String>,
    pub function: Option<String>,
    pub gate: f64,
    pub out: Option<String>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 1,
            replicates: None,
            n_ladder: None,
            grid_mult: DEFAULT_GRID_MULT,
            distribution: None,
            system: None,
            function: None,
            gate: DEFAULT_GATE,
            out: None,
            threads: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Parse { input: format!("{key} = {value}"), reason: "not a number".into() })
}

pub fn parse_ladder(value: &str) -> Result<Vec<usize>> {
    let ladder: Vec<usize> = value.split(',').map(|v| parse_num("n_ladder", v)).collect::<Result<_>>()?;
    if ladder.is_empty() || ladder[0] == 0 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("n ladder must be positive and strictly increasing: {value}")));
    }
    Ok(ladder)
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "experiment" => self.experiment = Some(v.into()),
            "seed" => self.seed = parse_num(key, v)?,
            "replicates" => self.replicates = Some(parse_num(key, v)?),
            "n_ladder" => self.n_ladder = Some(parse_ladder(v)?),
            "grid_mult" => self.grid_mult = parse_num(key, v)?,
            "distribution" => self.distribution = Some(v.into()),
            "system" => self.system = Some(v.into()),
            "function" => self.function = Some(v.into()),
            "gate" => self.gate = parse_num(key, v)?,
            "out" => self.out = Some(v.into()),
            "threads" => self.threads = Some(parse_num(key, v)?),
            other => return Err(Error::UnknownName { kind: "config key", name: other.into() }),
        }
        Ok(())
    }

    /// Flat `key = value` text; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { input: line.into(), reason: "expected key = value".into() })?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_mult < 16 {
            return Err(Error::InvalidParameter(format!("grid multiplier must be at least 16, got {}", self.grid_mult)));
        }
        if self.replicates == Some(0) {
            return Err(Error::InvalidParameter("replicates must be positive".into()));
        }
        if !(self.gate > 0.0) {
            return Err(Error::InvalidParameter("gate must be positive".into()));
        }
        if let Some(id) = &self.experiment {
            experiment_info(id)?;
        }
        Ok(())
    }
}

/// Run settings resolved for one experiment.
struct Ctx<'a> {
    id: &'static str,
    cfg: &'a ExperimentConfig,
    count: usize,
    ladder: Vec<usize>,
    stream: RandomStream,
    rows: Vec<ResultRow>,
}

impl<'a> Ctx<'a> {
    fn stream(&self, label: &str) -> RandomStream {
        self.stream.labeled(label)
    }

    fn push(&mut self, n: NValue, statistic: impl Into<String>, est: EstimateWithError, target: Option<(f64, Provenance)>, gate: Gate) {
        self.rows.push(ResultRow {
            experiment: self.id.into(),
            n,
            statistic: statistic.into(),
            estimate: est.value,
            std_error: est.std_error,
            target,
            gate,
        });
    }

    fn check(&mut self, n: NValue, statistic: impl Into<String>, ok: bool) {
        let v = if ok { 1.0 } else { 0.0 };
        self.push(n, statistic, EstimateWithError::exact(v), Some((1.0, Provenance::AnalyticOracle)), Gate::Abs(0.0));
    }

    fn distribution(&self, default: &str) -> Result<DistributionSpec> {
        DistributionSpec::parse(self.cfg.distribution.as_deref().unwrap_or(default))
    }

    fn function(&self, default: &str) -> Result<TestFunction> {
        TestFunction::parse(self.cfg.function.as_deref().unwrap_or(default))
    }

    fn last_n(&self) -> usize {
        *self.ladder.last().expect("non-empty ladder")
    }

    fn ladder_at_least(&self, k: usize) -> Result<()> {
        if self.ladder.len() < k {
            return Err(Error::InvalidParameter(format!("{} needs an n ladder with at least {k} entries", self.id)));
        }
        Ok(())
    }
}

/// `E[g(Y)]`: quadrature for scalar laws with a density, otherwise `4·10⁶`
/// draws.
fn oracle_mean<G: Fn(&[f64]) -> f64 + Sync>(
    dist: &DistributionSpec,
    g: G,
    stream: &RandomStream,
) -> Result<(f64, Provenance)> {
    if *dist == DistributionSpec::standard_normal() {
        return Ok((normal_expectation(|y| g(&[y])), Provenance::AnalyticOracle));
    }
    if dist.dim() == 1 && dist.is_absolutely_continuous() && dist.density(&[0.0]).is_some() {
        let value = integrate_cells(|y| g(&[y]) * dist.density(&[y]).unwrap_or(0.0), -40.0, 40.0, 8000, 8);
        return Ok((value, Provenance::AnalyticOracle));
    }
    let d = dist.dim();
    let xs = crate::stochastics::replicate(stream, 4_000_000, |s| {
        let mut y = vec![0.0; d];
        dist.draw(s, &mut y);
        g(&y)
    });
    Ok((mean_with_se(&xs)?.value, Provenance::SimulationOracle))
}

fn ks_gate(count: usize) -> f64 {
    KS_GATE_SCALE / (count as f64).sqrt()
}

fn extrapolated(ctx: &mut Ctx<'_>, statistic: &str, points: &[(usize, EstimateWithError)], target: (f64, Provenance)) -> Result<()> {
    for (n, e) in points {
        ctx.push(NValue::Finite(*n), statistic, *e, Some(target), Gate::Info);
    }
    let terms = (points.len() - 1).min(2);
    let e = extrapolate(points, terms)?;
    ctx.push(NValue::Infinite, statistic, e, Some(target), Gate::Sigma);
    Ok(())
}

fn run_thm4_uniform(ctx: &mut Ctx<'_>) -> Result<()> {
    let dist = ctx.distribution("normal")?;
    if dist.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: dist.dim() });
    }
    let uniform = |x: f64| (x + 0.5).clamp(0.0, 1.0);
    for n in ctx.ladder.clone() {
        let pts = scaled_error_samples(&dist, n, ctx.count, &ctx.stream(&format!("uniform-{n}")))?;
        let ks = ks_distance(pts.coordinates(), uniform)?;
        let gate = if dist.is_absolutely_continuous() { Gate::Below } else { Gate::Info };
        ctx.push(NValue::Finite(n), "ks_uniform", EstimateWithError::exact(ks), Some((ks_gate(ctx.count), Provenance::AnalyticOracle)), gate);
        let var = variance_with_se(pts.coordinates())?;
        ctx.push(NValue::Finite(n), "variance", var, Some((1.0 / 12.0, Provenance::Paper)), if dist.is_absolutely_continuous() { Gate::Sigma } else { Gate::Info });
    }
    let n = ctx.last_n();
    let lattice = DistributionSpec::lattice(10)?;
    let pts = scaled_error_samples(&lattice, n, ctx.count, &ctx.stream("lattice"))?;
    let ks = ks_distance(pts.coordinates(), uniform)?;
    ctx.push(NValue::Finite(n), "ks_lattice", EstimateWithError::exact(ks), Some((0.4, Provenance::AnalyticOracle)), Gate::AtLeast);
    Ok(())
}

fn run_thm4_gamma(ctx: &mut Ctx<'_>) -> Result<()> {
    ctx.ladder_at_least(2)?;
    let dist = ctx.distribution("normal")?;
    let mut cases: Vec<(String, TestFunction)> = Vec::new();
    match &ctx.cfg.function {
        Some(f) => cases.push((f.clone(), TestFunction::parse(f)?)),
        None => {
            cases.push(("identity".into(), TestFunction::identity()));
            cases.push(("sin".into(), TestFunction::sin()));
        }
    }
    for (name, phi) in cases {
        let (mut t, mut prov) = oracle_mean(&dist, |y| phi.gradient_norm_sq(y) / 12.0, &ctx.stream("oracle"))?;
        if name == "identity" && dist == DistributionSpec::standard_normal() {
            // Truncation at ±10 changes the target by far less than 1e-15.
            (t, prov) = (1.0 / 12.0, Provenance::Paper);
        }
        let points: Vec<(usize, EstimateWithError)> = ctx
            .ladder
            .iter()
            .map(|&n| Ok((n, gamma_estimate(&phi, &dist, n, ctx.count, &ctx.stream(&format!("{name}-{n}")))?)))
            .collect::<Result<_>>()?;
        extrapolated(ctx, &format!("gamma[{name}]"), &points, (t, prov))?;
    }
    Ok(())
}

fn run_thm4_bias(ctx: &mut Ctx<'_>) -> Result<()> {
    ctx.ladder_at_least(2)?;
    let dist = ctx.distribution("normal")?;
    let phi = ctx.function("square")?;
    let one = TestFunction::constant(1.0);
    // With χ ≡ 1: H1 = E[Δφ]/24, H2 = -E[Δφ]/24, H3 = 0, H4 = E[Δφ]/12.
    let (lap, prov) = oracle_mean(&dist, |y| phi.laplacian(y), &ctx.stream("oracle"))?;
    let prov = if ctx.cfg.function.is_none() { Provenance::Paper } else { prov };
    let targets = [lap / 24.0, -lap / 24.0, 0.0, lap / 12.0];
    for (kind, target) in BiasKind::ALL.iter().zip(targets) {
        let points: Vec<(usize, EstimateWithError)> = ctx
            .ladder
            .iter()
            .map(|&n| {
                let s = ctx.stream(&format!("bias-{n}"));
                Ok((n, bias_estimate(*kind, &phi, &one, &dist, n, (n * n) as f64, ctx.count, &s)?))
            })
            .collect::<Result<_>>()?;
        extrapolated(ctx, &kind.to_string(), &points, (target, prov))?;
    }
    // Bracket identities per replicate under common draws, relative to the row scale.
    let n = ctx.last_n();
    let (sin, cos) = (TestFunction::sin(), TestFunction::cos());
    let setup = BracketSetup {
        map: &GraduationMap::Nearest,
        phi: &sin,
        chi: &cos,
        dist: &dist,
        n,
        alpha: (n * n) as f64,
        control_variate: true,
    };
    let rows = bias_samples_all(&setup, ctx.count, &ctx.stream("identities"))?;
    let defect = rows
        .iter()
        .map(|r| {
            let scale = r.iter().map(|v| v.abs()).fold(1.0, f64::max);
            (r[2] + r[0] + r[1]).abs().max((r[3] - (r[0] - r[1])).abs()) / scale
        })
        .fold(0.0, f64::max);
    ctx.push(
        NValue::Finite(n),
        "max_bracket_identity_defect",
        EstimateWithError::exact(defect),
        Some((0.0, Provenance::AnalyticOracle)),
        Gate::Abs(1e-12),
    );
    Ok(())
}

fn run_remark2(ctx: &mut Ctx<'_>) -> Result<()> {
    ctx.ladder_at_least(2)?;
    let dist = ctx.distribution("normal")?;
    let phi = ctx.function("sin")?;
    // At α = n the symmetric bracket is itself O(1/n), as is its standard
    // error, so only the extrapolated value can be gated.
    let mut h3 = Vec::new();
    for n in ctx.ladder.clone() {
        let e = shift_bias_default(&dist, n, ctx.count, &ctx.stream(&format!("shift-{n}")))?;
        ctx.push(NValue::Finite(n), "shift_alpha_n", e, Some((-0.5, Provenance::Paper)), Gate::Sigma);
        h3.push((n, default_symmetric_bias(&phi, &phi, &dist, n, ctx.count, &ctx.stream(&format!("h3-{n}")))?));
    }
    extrapolated(ctx, "H3_alpha_n", &h3, (0.0, Provenance::Paper))
}

fn run_first_order(ctx: &mut Ctx<'_>) -> Result<()> {
    let dist = ctx.distribution("normal")?;
    let (sin, cos) = (TestFunction::sin(), TestFunction::cos());
    let mut mags = Vec::new();
    for n in ctx.ladder.clone() {
        let r = first_order_check(&sin, &cos, &sin, &dist, n, ctx.count, &ctx.stream(&format!("fo-{n}")))?;
        ctx.push(NValue::Finite(n), "defect", r.defect, Some((0.0, Provenance::Paper)), Gate::Sigma);
        ctx.push(NValue::Finite(n), "mean_abs_defect", r.magnitude, None, Gate::Info);
        mags.push(r.magnitude.value);
    }
    ctx.check(NValue::None, "mean_abs_defect_decreasing", mags.windows(2).all(|w| w[1] < w[0]));
    Ok(())
}

fn run_girsanov(ctx: &mut Ctx<'_>) -> Result<()> {
    let dist = ctx.distribution("normal")?;
    let phi = ctx.function("sin")?;
    for (name, w) in [
        ("one-plus-tanh", TestFunction::scalar(Scalar::OnePlusTanh)),
        ("one-plus-square", TestFunction::scalar(Scalar::OnePlusSquare)),
    ] {
        let (num, p1) = oracle_mean(&dist, |y| w.value(y) * phi.gradient_norm_sq(y) / 12.0, &ctx.stream("oracle-num"))?;
        let (den, p2) = oracle_mean(&dist, |y| w.value(y), &ctx.stream("oracle-den"))?;
        let prov = if p1 == Provenance::SimulationOracle || p2 == Provenance::SimulationOracle {
            Provenance::SimulationOracle
        } else {
            Provenance::AnalyticOracle
        };
        for n in ctx.ladder.clone() {
            let g = girsanov_gamma_check(&phi, &w, &dist, n, ctx.count, &ctx.stream(&format!("{name}-{n}")))?;
            ctx.push(NValue::Finite(n), format!("weighted_gamma[{name}]"), g.weighted, Some((num / den, prov)), Gate::Sigma);
            ctx.push(NValue::Finite(n), format!("weighted_minus_plain[{name}]"), g.difference, Some((0.0, Provenance::Paper)), Gate::Sigma);
        }
    }
    Ok(())
}

fn run_general(ctx: &mut Ctx<'_>) -> Result<()> {
    let dist = DistributionSpec::iid(2, DistributionSpec::standard_normal())?;
    let l = Displacement::linear(2, vec![1.0, 0.5, 0.0, 1.0])?;
    let g = l.gamma(2);
    let phi = TestFunction::on(0, Scalar::Sin).plus(TestFunction::on(1, Scalar::Identity));
    // ∇φ = (cos y₁, 1): E[∇φᵀ γ ∇φ] with E cos = e^{-1/2}, E cos² = (1 + e^{-2})/2.
    let target = g[0] * (1.0 + (-2.0f64).exp()) / 2.0 + 2.0 * g[1] * (-0.5f64).exp() + g[3];
    for n in ctx.ladder.clone() {
        let e = general_graduation_gamma(&phi, &l, (n * n) as f64, &dist, n, ctx.count, &ctx.stream(&format!("general-{n}")))?;
        ctx.push(NValue::Finite(n), "gamma_linear_displacement", e, Some((target, Provenance::AnalyticOracle)), Gate::Sigma);
    }
    Ok(())
}

fn run_arbitrary(ctx: &mut Ctx<'_>) -> Result<()> {
    let x = ctx.distribution("normal")?;
    let y = DistributionSpec::parse("point(0)")?;
    let grid = [(1, 0.0), (2, 0.0), (1, 1.0), (0, 1.0)];
    let ac = x.is_absolutely_continuous();
    for n in ctx.ladder.clone() {
        let r = arbitrary_functions_test(&x, &y, n, &grid, ctx.count, &ctx.stream(&format!("af-{n}")))?;
        let gate = if ac { Gate::Below } else { Gate::Info };
        ctx.push(NValue::Finite(n), "ks_uniform", EstimateWithError::exact(r.ks), Some((ks_gate(ctx.count), Provenance::AnalyticOracle)), gate);
        for row in &r.joint {
            let gate = if ac { Gate::Sigma } else { Gate::Info };
            let prov = if row.k == 0 { Provenance::AnalyticOracle } else { Provenance::Paper };
            ctx.push(NValue::Finite(n), format!("joint_cf_re[k={},zeta={}]", row.k, row.zeta), row.joint.re, Some((row.limit.re, prov)), gate);
            ctx.push(NValue::Finite(n), format!("joint_cf_im[k={},zeta={}]", row.k, row.zeta), row.joint.im, Some((row.limit.im, prov)), gate);
        }
    }
    Ok(())
}

fn run_rajchman(ctx: &mut Ctx<'_>) -> Result<()> {
    let ladder = power_ladder(13);
    let cases: Vec<(String, DistributionSpec, Vec<f64>, Vec<RajchmanVerdict>)> = match &ctx.cfg.distribution {
        Some(d) => vec![(d.clone(), DistributionSpec::parse(d)?, ladder.clone(), vec![])],
        None => vec![
            ("normal".into(), DistributionSpec::standard_normal(), ladder.clone(), vec![RajchmanVerdict::Decaying]),
            ("uniform(0,1)".into(), DistributionSpec::uniform(0.0, 1.0)?, ladder.clone(), vec![RajchmanVerdict::Decaying]),
            ("exponential(1)".into(), DistributionSpec::exponential(1.0)?, ladder.clone(), vec![RajchmanVerdict::Decaying]),
            (
                "lattice(10)".into(),
                DistributionSpec::lattice(10)?,
                DistributionSpec::lattice(10)?.resonant_frequencies(8).unwrap_or_default(),
                vec![RajchmanVerdict::Persistent],
            ),
            (
                "cantor".into(),
                DistributionSpec::cantor(),
                DistributionSpec::cantor().resonant_frequencies(8).unwrap_or_default(),
                vec![RajchmanVerdict::Persistent, RajchmanVerdict::Inconclusive],
            ),
        ],
    };
    for (name, dist, freqs, expected) in cases {
        let p = cf_decay_profile(&dist, &freqs, ctx.count, &ctx.stream(&name))?;
        let tail = p.moduli[p.len().div_ceil(2)..].iter().cloned().fold(0.0, f64::max);
        ctx.push(NValue::None, format!("tail_max_modulus[{name}]"), EstimateWithError::exact(tail), None, Gate::Info);
        let verdict = classify_rajchman(&p, 0.05);
        if expected.is_empty() {
            ctx.push(NValue::None, format!("verdict[{name}]={verdict}"), EstimateWithError::exact(1.0), None, Gate::Info);
        } else {
            ctx.check(NValue::None, format!("verdict[{name}]={verdict}"), expected.contains(&verdict));
        }
    }
    Ok(())
}

fn oscillating_m(ctx: &Ctx<'_>, n: usize) -> usize {
    ctx.cfg.grid_mult * n
}

fn run_oscillating(ctx: &mut Ctx<'_>) -> Result<()> {
    let osc = OscillatorSpec::sawtooth();
    for (clock_name, clock) in [("identity", TimeChangeClock::Identity), ("power(2)", TimeChangeClock::Power(2.0))] {
        for n in ctx.ladder.clone() {
            let m = oscillating_m(ctx, n);
            let rows = oscillating_terminal_samples(&osc, n, m, &clock, ctx.count, &ctx.stream(&format!("{clock_name}-{n}")))?;
            let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let m1: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            let target = osc.l2norm_sq * clock.value(1.0);
            ctx.push(NValue::Finite(n), format!("var_int_f_dM[{clock_name}]"), variance_with_se(&x)?, Some((target, Provenance::Paper)), Gate::Sigma);
            ctx.push(NValue::Finite(n), format!("cov_int_f_dM_M1[{clock_name}]"), covariance_with_se(&x, &m1)?, Some((0.0, Provenance::Paper)), Gate::Sigma);
        }
    }
    Ok(())
}

fn run_kp(ctx: &mut Ctx<'_>) -> Result<()> {
    for n in ctx.ladder.clone() {
        let m = oscillating_m(ctx, n);
        let r = kurtz_protter_statistics(n, m, ctx.count, &ctx.stream(&format!("kp-{n}")))?;
        let a = Provenance::AnalyticOracle;
        let stats: [(&str, EstimateWithError, f64); 8] = [
            ("var_P1", r.var_p1[1], 1.0 / 12.0),
            ("var_P2", r.var_p2[1], 1.0 / 3.0),
            ("cov_P2_B", r.cov_p2_b[1], 0.5),
            ("var_P3", r.var_p3[1], 1.0 / 3.0),
            ("cov_P3_B", r.cov_p3_b[1], 0.5),
            ("cov_P2_P3", r.cov_p2_p3[1], 1.0 / 6.0),
            ("var_P4", r.var_p4[1], 0.5),
            ("cov_P4_B", r.cov_p4_b[1], 0.0),
        ];
        for (name, e, t) in stats {
            ctx.push(NValue::Finite(n), name, e, Some((t, a)), Gate::Sigma);
        }
        let half: [(&str, EstimateWithError, f64); 3] =
            [("var_P2_half", r.var_p2[0], 1.0 / 6.0), ("cov_P2_B_half", r.cov_p2_b[0], 0.25), ("var_P4_half", r.var_p4[0], 0.25)];
        for (name, e, t) in half {
            ctx.push(NValue::Finite(n), name, e, Some((t, a)), Gate::Sigma);
        }
        ctx.push(
            NValue::Finite(n),
            "max_identity_defect_P2_P3_B",
            EstimateWithError::exact(r.max_identity_defect),
            Some((0.0, a)),
            Gate::Abs(1e-9),
        );
    }
    Ok(())
}

fn bracket_rows(ctx: &mut Ctx<'_>, eta: &StepFunction, zeta: &StepFunction, label: &str) -> Result<()> {
    ctx.ladder_at_least(2)?;
    let osc = OscillatorSpec::sawtooth();
    let clock = TimeChangeClock::Identity;
    let target = theorem6_target(eta, zeta, &osc, &clock);
    let mut re = Vec::new();
    let mut im = Vec::new();
    for n in ctx.ladder.clone() {
        let m = oscillating_m(ctx, n);
        let z = theorem6_bracket(eta, zeta, &osc, n, m, &clock, ctx.count, &ctx.stream(&format!("{label}-{n}")))?;
        re.push((n, z.re));
        im.push((n, z.im));
    }
    extrapolated(ctx, "bracket_re", &re, (target, Provenance::Paper))?;
    extrapolated(ctx, "bracket_im", &im, (0.0, Provenance::Paper))?;
    Ok(())
}

fn run_thm6(ctx: &mut Ctx<'_>) -> Result<()> {
    let one = StepFunction::constant(1.0);
    bracket_rows(ctx, &one, &one, "eta1-zeta1")
}

fn run_thm7(ctx: &mut Ctx<'_>) -> Result<()> {
    let xi = StepFunction::indicator(2.0, 0.0, 0.5)?;
    bracket_rows(ctx, &xi, &xi, "xi")
}

fn run_thm8(ctx: &mut Ctx<'_>) -> Result<()> {
    for k in 1..=2 {
        for n in ctx.ladder.clone() {
            let m = (ctx.cfg.grid_mult * n).max(16 * n);
            let x = ChaosElement::unit_constant(k, m)?;
            let w = RnWeights::sawtooth(n, m)?;
            let rows = sharp_moment_comparison(&x, &w, ctx.count, &ctx.stream(&format!("k{k}-{n}")))?;
            for r in rows {
                ctx.push(NValue::Finite(n), format!("{}_difference[k={k}]", r.statistic), r.difference, Some((0.0, Provenance::Paper)), Gate::Sigma);
                ctx.push(NValue::Finite(n), format!("{}_sharp[k={k}]", r.statistic), r.sharp, None, Gate::Info);
            }
        }
    }
    Ok(())
}

fn run_thm9(ctx: &mut Ctx<'_>) -> Result<()> {
    let m = 4096usize.max(16 * ctx.last_n());
    let theta = OscillatorSpec::new(PeriodicFn::NormalizedSawtooth);
    for k in 1..=2 {
        let x = ChaosElement::unit_constant(k, m)?;
        let mut gaps = Vec::new();
        for n in ctx.ladder.clone() {
            let v = theorem9_limit(&x, &RnWeights::sawtooth(n, m)?, theta.sup)?;
            let last = n == ctx.last_n();
            let gate = if last { Gate::Abs(0.02 * v.target) } else { Gate::Info };
            ctx.push(NValue::Finite(n), format!("n2_norm_sq[k={k}]"), EstimateWithError::exact(v.value), Some((v.target, Provenance::Paper)), gate);
            ctx.check(NValue::Finite(n), format!("below_domination_bound[k={k}]"), v.value <= v.bound);
            gaps.push((v.value - v.target).abs());
        }
        ctx.check(NValue::None, format!("gap_decreasing[k={k}]"), gaps.windows(2).all(|w| w[1] < w[0]));
    }
    Ok(())
}

fn run_thm10(ctx: &mut Ctx<'_>) -> Result<()> {
    let schedule = RotationSchedule::rotation(2)?;
    ctx.push(
        NValue::None,
        "orthogonality_defect",
        EstimateWithError::exact(schedule.orthogonality_defect(1024)),
        Some((0.0, Provenance::AnalyticOracle)),
        Gate::Abs(1e-12),
    );
    ctx.push(
        NValue::None,
        "period_average_norm",
        EstimateWithError::exact(schedule.average_norm(1024)),
        Some((0.0, Provenance::AnalyticOracle)),
        Gate::Abs(1e-10),
    );
    for n in ctx.ladder.clone() {
        let m = (ctx.cfg.grid_mult * n).max(16 * n);
        for (name, f) in [
            ("terminal", PathFunctional::Terminal(0)),
            ("time_average", PathFunctional::TimeAverage(0)),
            ("running_max", PathFunctional::RunningMax(0)),
        ] {
            let r = rotation_transform(f, &schedule, n, m, ctx.count, &ctx.stream(&format!("{name}-{n}")))?;
            let crit = if r.two_sample { ks_gate(ctx.count) * 2f64.sqrt() } else { ks_gate(ctx.count) };
            ctx.push(NValue::Finite(n), format!("ks[{name}]"), EstimateWithError::exact(r.ks), Some((crit, Provenance::AnalyticOracle)), Gate::Below);
            ctx.push(NValue::Finite(n), format!("cov_B1[{name}]"), r.cov_with_b1, Some((0.0, Provenance::Paper)), Gate::Sigma);
            ctx.push(NValue::Finite(n), format!("cov_B_half[{name}]"), r.cov_with_b_half, Some((0.0, Provenance::Paper)), Gate::Sigma);
        }
    }
    Ok(())
}

fn run_thm11(ctx: &mut Ctx<'_>) -> Result<()> {
    let sys = SdeSystem::from_name(ctx.cfg.system.as_deref().unwrap_or("linear"))?;
    let refine = ctx.cfg.grid_mult.max(64);
    let report = error_law_comparison(&sys, &ctx.ladder, refine, ctx.count, &ctx.stream("euler"))?;
    let last = ctx.last_n();
    let mut scaled = Vec::new();
    for row in &report.rows {
        let n = NValue::Finite(row.n);
        for ((name, e), (_, u)) in row.error.as_array().into_iter().zip(row.limit.as_array()) {
            let gate = if row.n == last { Gate::SigmaAt(3.0) } else { Gate::Info };
            ctx.push(n, format!("{name}_error_minus_limit"), e.minus_independent(&u), Some((0.0, Provenance::SimulationOracle)), gate);
            ctx.push(n, format!("{name}_error"), e, Some((u.value, Provenance::SimulationOracle)), Gate::Info);
        }
        for ((name, e), (_, u)) in row.error.as_array().into_iter().zip(row.matched_limit.as_array()) {
            ctx.push(n, format!("{name}_error_minus_matched_limit"), e.minus_independent(&u), Some((0.0, Provenance::SimulationOracle)), Gate::Info);
        }
        ctx.push(n, "sqrt_n_mean_square", row.sqrt_n_mean_square, None, Gate::Info);
        scaled.push(row.sqrt_n_mean_square.value);
    }
    ctx.check(NValue::None, "sqrt_n_error_decreasing", scaled.windows(2).all(|w| w[1] < w[0]));
    let constant = error_law_comparison(&SdeSystem::constant(), &[last], refine, ctx.count.min(1000), &ctx.stream("constant"))?;
    let worst = constant.rows[0].error.as_array().iter().map(|(_, e)| e.value.abs()).fold(0.0, f64::max);
    ctx.push(NValue::Finite(last), "constant_system_error", EstimateWithError::exact(worst), Some((0.0, Provenance::AnalyticOracle)), Gate::Abs(1e-12));
    Ok(())
}

/// Runs one experiment by id.
pub fn run_experiment(id: &str, cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let info = experiment_info(id)?;
    let ladder = match &cfg.n_ladder {
        Some(l) if !info.default_ladder.is_empty() => l.clone(),
        _ => info.default_ladder.to_vec(),
    };
    let mut ctx = Ctx {
        id: info.id,
        cfg,
        count: cfg.replicates.unwrap_or(info.default_replicates),
        ladder,
        stream: RandomStream::new(cfg.seed, 0).labeled(info.id),
        rows: Vec::new(),
    };
    match info.id {
        "thm4-uniform" => run_thm4_uniform(&mut ctx)?,
        "thm4-gamma" => run_thm4_gamma(&mut ctx)?,
        "thm4-bias" => run_thm4_bias(&mut ctx)?,
        "remark2-default" => run_remark2(&mut ctx)?,
        "thm2-first-order" => run_first_order(&mut ctx)?,
        "thm3-girsanov" => run_girsanov(&mut ctx)?,
        "thm4bis-general" => run_general(&mut ctx)?,
        "prop1-arbitrary" => run_arbitrary(&mut ctx)?,
        "rajchman-decay" => run_rajchman(&mut ctx)?,
        "thm5-oscillating" => run_oscillating(&mut ctx)?,
        "kp-statistics" => run_kp(&mut ctx)?,
        "thm6-bracket" => run_thm6(&mut ctx)?,
        "thm7-cf" => run_thm7(&mut ctx)?,
        "thm8-sharp" => run_thm8(&mut ctx)?,
        "thm9-chaos" => run_thm9(&mut ctx)?,
        "thm10-rotation" => run_thm10(&mut ctx)?,
        "thm11-euler" => run_thm11(&mut ctx)?,
        other => unreachable!("catalog entry {other} has no runner"),
    }
    Ok(ctx.rows)
}

/// Runs several experiments in order and concatenates their rows.
pub fn run_many(ids: &[&str], cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for id in ids {
        rows.extend(run_experiment(id, cfg)?);
    }
    Ok(rows)
}

/// Whether every gated row passes.
pub fn all_pass(rows: &[ResultRow], gate_sigma: f64) -> bool {
    rows.iter().all(|r| r.passes(gate_sigma))
}
