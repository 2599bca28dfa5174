//! Gauss rules used to turn closed-form limit formulas into numeric targets.

use std::f64::consts::PI;

/// Nodes and weights of a Gauss rule.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre rule with `n` nodes on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 * half / ((1.0 - z * z) * dp * dp);
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

/// Gauss–Hermite rule for the standard normal weight, so that
/// `Σ w_i g(x_i) ≈ E[g(Z)]` with `Z ~ N(0, 1)`.
pub fn gauss_hermite_normal(n: usize) -> GaussRule {
    // Physicists' rule for exp(-x^2), then x -> sqrt(2) x, w -> w / sqrt(pi).
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let mut z: f64 = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        // The recurrences above use the unscaled previous roots.
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2 - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-14 {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    let scale = std::f64::consts::SQRT_2;
    let norm = PI.sqrt();
    GaussRule {
        nodes: nodes.into_iter().map(|x| x * scale).collect(),
        weights: weights.into_iter().map(|w| w / norm).collect(),
    }
}

impl GaussRule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `E[g(Z)]` for `Z ~ N(0, 1)` with a 64-node rule.
pub fn normal_expectation<F: Fn(f64) -> f64>(g: F) -> f64 {
    gauss_hermite_normal(64).integrate(g)
}

/// Composite Gauss–Legendre over `cells` equal cells of `[a, b]`.
pub fn integrate_cells<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cells: usize, order: usize) -> f64 {
    let unit = gauss_legendre(order, 0.0, 1.0);
    let h = (b - a) / cells as f64;
    let mut total = 0.0;
    for c in 0..cells {
        let left = a + c as f64 * h;
        total += h * unit.nodes.iter().zip(&unit.weights).map(|(&x, &w)| w * f(left + h * x)).sum::<f64>();
    }
    total
}
