//! Composite Simpson quadrature with a Richardson error estimate.

use serde::{Deserialize, Serialize};

/// An integral with its estimated absolute error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl Integral {
    pub fn zero() -> Self {
        Integral { value: 0.0, error: 0.0 }
    }
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, o: Integral) -> Integral {
        Integral { value: self.value + o.value, error: self.error + o.error }
    }
}

/// Simpson's rule on every cell of `breaks`, refined once by halving each cell.
pub fn simpson(breaks: &[f64], f: impl Fn(f64) -> f64) -> Integral {
    let mut fine = 0.0;
    let mut err = 0.0;
    let mut fa = f(breaks[0]);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        let m = 0.5 * (a + b);
        let fm = f(m);
        let fb = f(b);
        let fl = f(a + 0.25 * h);
        let fr = f(a + 0.75 * h);
        let c = h / 6.0 * (fa + 4.0 * fm + fb);
        let r = h / 12.0 * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb);
        fine += r;
        err += (r - c).abs() / 15.0;
        fa = fb;
    }
    Integral { value: fine, error: err }
}

/// Simpson integral of `f` over `[a, b]` split into `n` equal cells.
pub fn simpson_uniform(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Integral {
    let breaks: Vec<f64> = (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect();
    simpson(&breaks, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = simpson(&[0.0, 0.3, 1.0], |x| x * x * x - 2.0 * x + 1.0);
        assert!((r.value - (0.25 - 1.0 + 1.0)).abs() < 1e-15);
        assert!(r.error < 1e-15);
    }

    #[test]
    fn exp_converges() {
        let r = simpson_uniform(0.0, 1.0, 16, f64::exp);
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-9);
        assert!(r.error > 0.0 && r.error < 1e-7);
    }
}
