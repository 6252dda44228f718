//! Lazy compositions of normalised restrictions of a fixed set of profiles.

use crate::giet::{Jet, MonotoneMap};

/// `N(φ_branch | [a, b])` for a profile of the base system.
#[derive(Clone, Debug)]
pub(crate) struct Factor {
    branch: usize,
    a: f64,
    b: f64,
    fa: f64,
    scale: f64,
}

impl Factor {
    fn new(base: &[MonotoneMap], branch: usize, a: f64, b: f64) -> Factor {
        let p = &base[branch];
        let fa = p.value(a);
        let fb = p.value(b);
        Factor { branch, a, b, fa, scale: 1.0 / (fb - fa) }
    }

    #[inline]
    fn point(&self, t: f64) -> f64 {
        if t >= 1.0 {
            self.b
        } else if t <= 0.0 {
            self.a
        } else {
            self.a + (self.b - self.a) * t
        }
    }

    #[inline]
    fn value(&self, base: &[MonotoneMap], t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        (base[self.branch].value(self.point(t)) - self.fa) * self.scale
    }

    #[inline]
    fn jet(&self, base: &[MonotoneMap], t: f64) -> Jet {
        let w = self.b - self.a;
        let j = base[self.branch].jet(self.point(t)).pre_scale(w).post_affine(self.fa, self.scale);
        if t <= 0.0 {
            Jet { v: 0.0, ..j }
        } else if t >= 1.0 {
            Jet { v: 1.0, ..j }
        } else {
            j
        }
    }

    fn inverse(&self, base: &[MonotoneMap], y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        let x = base[self.branch].inverse_value(self.fa + y / self.scale);
        ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }
}

/// Composition `f_m ∘ ⋯ ∘ f_1` of factors; empty means the identity.
#[derive(Clone, Debug, Default)]
pub(crate) struct Chain {
    factors: Vec<Factor>,
}

impl Chain {
    /// The base profile `branch` itself, or the identity if that profile is the identity.
    pub fn base(base: &[MonotoneMap], branch: usize) -> Chain {
        if base[branch].is_identity() {
            Chain::default()
        } else {
            Chain { factors: vec![Factor::new(base, branch, 0.0, 1.0)] }
        }
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn value(&self, base: &[MonotoneMap], t: f64) -> f64 {
        self.factors.iter().fold(t, |x, f| f.value(base, x))
    }

    pub fn jet(&self, base: &[MonotoneMap], t: f64) -> Jet {
        self.factors.iter().fold(Jet::identity(t), |inner, f| Jet::compose(f.jet(base, inner.v), inner))
    }

    pub fn inverse(&self, base: &[MonotoneMap], y: f64) -> f64 {
        self.factors.iter().rev().fold(y, |x, f| f.inverse(base, x))
    }

    /// `N(self | [a, b])` as a chain, pushing the interval through every factor.
    pub fn restrict(&self, base: &[MonotoneMap], a: f64, b: f64) -> Chain {
        let mut lo = a;
        let mut hi = b;
        let mut out = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let w = f.b - f.a;
            let na = if lo <= 0.0 { f.a } else { f.a + w * lo };
            let nb = if hi >= 1.0 { f.b } else { f.a + w * hi };
            let nlo = f.value(base, lo);
            let nhi = f.value(base, hi);
            out.push(Factor::new(base, f.branch, na, nb));
            lo = nlo;
            hi = nhi;
        }
        Chain { factors: out }
    }

    /// `outer ∘ self`.
    pub fn then(mut self, outer: Chain) -> Chain {
        self.factors.extend(outer.factors);
        self
    }
}
