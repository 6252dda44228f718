//! Hölder seminorm estimators for sampled functions.

use crate::fit::line_fit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `sup |u(x) − u(y)| / |x − y|^δ` over sampled pairs.
///
/// All pairs are used when there are at most `max_pairs`; otherwise stride pairs
/// `(k, k + 2ʲ)`, the extreme pair and random pairs.
pub fn holder_seminorm(xs: &[f64], values: &[f64], delta: f64, max_pairs: usize, seed: u64) -> f64 {
    let n = xs.len().min(values.len());
    if n < 2 {
        return 0.0;
    }
    let q = |i: usize, j: usize| {
        let dx = (xs[i] - xs[j]).abs();
        if dx > 0.0 {
            (values[i] - values[j]).abs() / dx.powf(delta)
        } else {
            0.0
        }
    };
    let all = n * (n - 1) / 2;
    let mut best = 0.0f64;
    if all <= max_pairs {
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(q(i, j));
            }
        }
        return best;
    }
    let mut used = 0;
    let mut s = 1;
    while s < n && used < max_pairs {
        let mut i = 0;
        while i + s < n && used < max_pairs {
            best = best.max(q(i, i + s));
            i += 1;
            used += 1;
        }
        s *= 2;
    }
    best = best.max(q(0, n - 1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_pairs.saturating_sub(used) {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        best = best.max(q(i, j));
    }
    best
}

/// Fitted modulus of continuity `ω(r) ≈ C r^δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub delta: f64,
    pub constant: f64,
    pub r_squared: f64,
}

impl HolderReport {
    pub fn zero() -> Self {
        HolderReport { delta: 1.0, constant: 0.0, r_squared: 1.0 }
    }
}

/// Hölder exponent of values on a uniform grid of `[0,1]`, from dyadic scales.
pub fn holder_estimate(values: &[f64]) -> HolderReport {
    let n = values.len();
    if n < 3 {
        return HolderReport::zero();
    }
    let h = 1.0 / (n - 1) as f64;
    let mut lr = Vec::new();
    let mut lw = Vec::new();
    let mut s = 1;
    while s < n / 4 {
        let w = (0..n - s).map(|k| (values[k + s] - values[k]).abs()).fold(0.0, f64::max);
        if w > 0.0 {
            lr.push((s as f64 * h).ln());
            lw.push(w.ln());
        }
        s *= 2;
    }
    match line_fit(&lr, &lw) {
        Some(f) => HolderReport { delta: f.slope, constant: f.intercept.exp(), r_squared: f.r_squared },
        None => HolderReport::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_linear() {
        let xs: Vec<f64> = (0..101).map(|k| k as f64 / 100.0).collect();
        assert_eq!(holder_seminorm(&xs, &vec![3.0; 101], 0.5, 10_000, 0), 0.0);
        for delta in [0.3, 0.5, 1.0] {
            let s = holder_seminorm(&xs, &xs, delta, 10_000, 0);
            assert!((s - 1.0).abs() < 0.05, "{delta} {s}");
        }
    }

    #[test]
    fn exponent_of_power_law() {
        let v: Vec<f64> = (0..1025).map(|k| (k as f64 / 1024.0).sqrt()).collect();
        let r = holder_estimate(&v);
        assert!((r.delta - 0.5).abs() < 0.02, "{r:?}");
        let lin: Vec<f64> = (0..1025).map(|k| 2.0 * k as f64 / 1024.0).collect();
        assert!((holder_estimate(&lin).delta - 1.0).abs() < 1e-9);
    }
}
