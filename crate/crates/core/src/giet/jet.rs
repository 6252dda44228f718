//! Third-order jets and exact chain-rule algebra.

use serde::{Deserialize, Serialize};

/// Value and first three derivatives of a scalar function at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Jet { v, d1, d2, d3 }
    }

    /// Jet of the identity map at `x`.
    pub const fn identity(x: f64) -> Self {
        Jet { v: x, d1: 1.0, d2: 0.0, d3: 0.0 }
    }

    /// Jet of `x ↦ a + b x` at `x`.
    pub fn affine(x: f64, a: f64, b: f64) -> Self {
        Jet { v: a + b * x, d1: b, d2: 0.0, d3: 0.0 }
    }

    /// Jet of `f ∘ g` given `outer` = jet of `f` at `g(x)` and `inner` = jet of `g` at `x`.
    #[inline]
    pub fn compose(outer: Jet, inner: Jet) -> Jet {
        let g1 = inner.d1;
        Jet {
            v: outer.v,
            d1: outer.d1 * g1,
            d2: outer.d2 * g1 * g1 + outer.d1 * inner.d2,
            d3: outer.d3 * g1 * g1 * g1 + 3.0 * outer.d2 * g1 * inner.d2 + outer.d1 * inner.d3,
        }
    }

    /// Post-composition with `y ↦ (y − shift) · scale`.
    #[inline]
    pub fn post_affine(self, shift: f64, scale: f64) -> Jet {
        Jet { v: (self.v - shift) * scale, d1: self.d1 * scale, d2: self.d2 * scale, d3: self.d3 * scale }
    }

    /// Pre-composition with `t ↦ a + w t`; the caller supplies the jet at `a + w t`.
    #[inline]
    pub fn pre_scale(self, w: f64) -> Jet {
        Jet { v: self.v, d1: self.d1 * w, d2: self.d2 * w * w, d3: self.d3 * w * w * w }
    }

    /// Jet of the inverse function at `self.v`, whose value is `x`.
    #[inline]
    pub fn inverse_at(self, x: f64) -> Jet {
        let f1 = self.d1;
        let f2 = self.d2;
        let f3 = self.d3;
        let i1 = 1.0 / f1;
        let i3 = i1 * i1 * i1;
        Jet { v: x, d1: i1, d2: -f2 * i3, d3: (3.0 * f2 * f2 - f1 * f3) * i3 * i1 * i1 }
    }

    /// Non-linearity `f''/f'`.
    #[inline]
    pub fn eta(&self) -> f64 {
        self.d2 / self.d1
    }

    /// Derivative of the non-linearity, `(f''' f' − f''²)/f'²`.
    #[inline]
    pub fn deta(&self) -> f64 {
        (self.d3 * self.d1 - self.d2 * self.d2) / (self.d1 * self.d1)
    }

    /// Componentwise difference, used for norms of `f − g`.
    pub fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2, d3: self.d3 - o.d3 }
    }

    /// Max of the absolute values of orders `0..=r`.
    pub fn max_abs(&self, r: usize) -> f64 {
        let c = [self.v, self.d1, self.d2, self.d3];
        c[..=r.min(3)].iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(x: f64) -> Jet {
        Jet::new(x * x * x + x, 3.0 * x * x + 1.0, 6.0 * x, 6.0)
    }

    fn expj(x: f64) -> Jet {
        let e = x.exp();
        Jet::new(e, e, e, e)
    }

    #[test]
    fn compose_matches_closed_form() {
        // exp(x^3 + x)
        let x = 0.3;
        let j = Jet::compose(expj(cube(x).v), cube(x));
        let u = x * x * x + x;
        let e = u.exp();
        let u1 = 3.0 * x * x + 1.0;
        let u2 = 6.0 * x;
        let u3 = 6.0;
        assert!((j.v - e).abs() < 1e-14);
        assert!((j.d1 - e * u1).abs() < 1e-13);
        assert!((j.d2 - e * (u1 * u1 + u2)).abs() < 1e-13);
        assert!((j.d3 - e * (u1 * u1 * u1 + 3.0 * u1 * u2 + u3)).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_exp_is_log() {
        let x = 0.7;
        let inv = expj(x).inverse_at(x);
        let y = x.exp();
        assert!((inv.d1 - 1.0 / y).abs() < 1e-14);
        assert!((inv.d2 + 1.0 / (y * y)).abs() < 1e-14);
        assert!((inv.d3 - 2.0 / (y * y * y)).abs() < 1e-13);
    }
}
