//! Fixed-shape reductions.
//!
//! Every sum goes through the same binary tree for a given length, so the
//! result only depends on the values and their order, never on how the work
//! that produced them was scheduled.

use num_complex::Complex64;

const LEAF: usize = 16;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(x)` without materializing the mapped values.
pub fn pairwise_sum_by<T, F: Fn(&T) -> f64 + Copy>(xs: &[T], f: F) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |acc, x| acc + f(x));
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    Complex64::new(pairwise_sum_by(xs, |z| z.re), pairwise_sum_by(xs, |z| z.im))
}
