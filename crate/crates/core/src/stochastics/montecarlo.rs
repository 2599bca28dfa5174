//! Replicate-parallel evaluation.

use rayon::prelude::*;

use super::rng::RandomStream;

/// Runs `f` on the replicate streams `base.split(0..count)` and returns the
/// results in replicate order.
pub fn replicate<T, F>(base: &RandomStream, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomStream) -> T + Sync + Send,
{
    (0..count as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = base.split(r);
            f(&mut stream)
        })
        .collect()
}

/// Column `j` of a replicate table.
pub fn column<const K: usize>(rows: &[[f64; K]], j: usize) -> Vec<f64> {
    rows.iter().map(|row| row[j]).collect()
}
