//! Closed-form perturbations of the identity, used to build test maps near `T₀`.

use super::jet::Jet;
use super::map::{Grid, MonotoneMap};
use crate::error::Result;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A shape `b` with `b(0) = b(1) = 0` and `sup |b'| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BumpShape {
    /// `sin(2πkt) / (2πk)`; equal slopes at both ends.
    Sine(u32),
    /// `t²(1−t)²` rescaled; flat at both ends.
    Quartic,
    /// `t(1−t)`; slopes `±1` at the ends.
    Parabola,
}

const QUARTIC_SCALE: f64 = 5.196152422706632; // 9/√3

impl BumpShape {
    pub fn jet(self, t: f64) -> Jet {
        match self {
            BumpShape::Sine(k) => {
                let w = 2.0 * PI * k as f64;
                let (s, c) = (w * t).sin_cos();
                Jet::new(s / w, c, -w * s, -w * w * c)
            }
            BumpShape::Quartic => {
                let q = QUARTIC_SCALE;
                let v = t * t * (1.0 - t) * (1.0 - t);
                let d1 = 2.0 * t - 6.0 * t * t + 4.0 * t * t * t;
                let d2 = 2.0 - 12.0 * t + 12.0 * t * t;
                let d3 = -12.0 + 24.0 * t;
                Jet::new(q * v, q * d1, q * d2, q * d3)
            }
            BumpShape::Parabola => Jet::new(t * (1.0 - t), 1.0 - 2.0 * t, -2.0, 0.0),
        }
    }

    /// Whether `b'(0) = b'(1)`, so that `t + a b` has zero total non-linearity.
    pub fn in_slice(self) -> bool {
        !matches!(self, BumpShape::Parabola)
    }
}

/// `t ↦ t + Σ aₖ bₖ(t)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub terms: Vec<(BumpShape, f64)>,
}

impl Bump {
    pub fn new(terms: Vec<(BumpShape, f64)>) -> Self {
        Bump { terms }
    }

    pub fn single(shape: BumpShape, a: f64) -> Self {
        Bump { terms: vec![(shape, a)] }
    }

    /// Upper bound for `sup |φ' − 1|`.
    pub fn amplitude(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.abs()).sum()
    }

    pub fn in_slice(&self) -> bool {
        self.terms.iter().all(|(s, _)| s.in_slice())
    }

    pub fn scaled(&self, c: f64) -> Bump {
        Bump { terms: self.terms.iter().map(|&(s, a)| (s, a * c)).collect() }
    }

    pub fn jet(&self, t: f64) -> Jet {
        let mut j = Jet::identity(t);
        for &(s, a) in &self.terms {
            let b = s.jet(t);
            j.v += a * b.v;
            j.d1 += a * b.d1;
            j.d2 += a * b.d2;
            j.d3 += a * b.d3;
        }
        j
    }

    pub fn map(&self, grid: &Grid) -> Result<MonotoneMap> {
        if self.terms.iter().all(|&(_, a)| a == 0.0) {
            return Ok(MonotoneMap::identity(grid));
        }
        let n = grid.len();
        MonotoneMap::from_fn(grid, |t| {
            let j = self.jet(t);
            if t == 0.0 {
                Jet { v: 0.0, ..j }
            } else if t == 1.0 && n > 1 {
                Jet { v: 1.0, ..j }
            } else {
                j
            }
        })
    }

    /// Random combination of `Sine(1..=kmax)` and `Quartic` with `Σ|aₖ| = amplitude`.
    pub fn random_slice<R: Rng>(rng: &mut R, amplitude: f64, kmax: u32) -> Bump {
        let mut shapes: Vec<BumpShape> = (1..=kmax).map(BumpShape::Sine).collect();
        shapes.push(BumpShape::Quartic);
        Self::random_over(rng, &shapes, amplitude)
    }

    /// Random combination that also includes the non-slice `Parabola`.
    pub fn random_generic<R: Rng>(rng: &mut R, amplitude: f64, kmax: u32) -> Bump {
        let mut shapes: Vec<BumpShape> = (1..=kmax).map(BumpShape::Sine).collect();
        shapes.push(BumpShape::Quartic);
        shapes.push(BumpShape::Parabola);
        Self::random_over(rng, &shapes, amplitude)
    }

    fn random_over<R: Rng>(rng: &mut R, shapes: &[BumpShape], amplitude: f64) -> Bump {
        let c: Vec<f64> = shapes.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = c.iter().map(|x: &f64| x.abs()).sum::<f64>().max(1e-300);
        Bump { terms: shapes.iter().zip(c).map(|(&s, x)| (s, amplitude * x / norm)).collect() }
    }
}
