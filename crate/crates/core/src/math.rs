//! Floating-point helpers that `core` does not provide.

use num_complex::Complex64;

pub use libm::{erfc, exp, expm1, fabs as abs, log, log1p, sqrt};

pub const PI: f64 = core::f64::consts::PI;

/// Below this block length sums fall back to a plain loop.
const PAIRWISE_BLOCK: usize = 64;

/// Pairwise (cascade) summation. The split points depend only on the slice
/// length, so the result is identical however the caller chunks its work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(i)` for `i` in `0..n` without materializing the terms.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: &F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            return (lo..hi).fold(0.0, |acc, i| acc + f(i));
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, f) + go(mid, hi, f)
    }
    go(0, n, f)
}

pub fn pairwise_sum_complex_by<F: Fn(usize) -> Complex64>(n: usize, f: &F) -> Complex64 {
    fn go<F: Fn(usize) -> Complex64>(lo: usize, hi: usize, f: &F) -> Complex64 {
        if hi - lo <= PAIRWISE_BLOCK {
            return (lo..hi).fold(Complex64::new(0.0, 0.0), |acc, i| acc + f(i));
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, f) + go(mid, hi, f)
    }
    go(0, n, f)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs = [1.0, 2.0, 3.0, 4.5];
        assert_eq!(pairwise_sum(&xs), 10.5);
    }

    #[test]
    fn pairwise_beats_naive_accumulation() {
        let n = 1 << 20;
        let s = pairwise_sum_by(n, &|_| 0.1);
        assert!((s - 0.1 * n as f64).abs() < 1e-6);
    }
}
