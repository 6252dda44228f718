//! Numerical GIETs: maps, affine parts, branch profiles.

pub mod jet;
pub mod map;
pub mod perturb;
pub mod quad;

pub use jet::Jet;
pub use map::{eta_distance, moebius_jet, normalize_fn, Grid, MonotoneMap};
pub use quad::Integral;

use crate::combinatorics::Permutation;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default number of grid nodes.
pub const DEFAULT_GRID: usize = 257;

/// Affine interval exchange: top lengths, slopes and permutation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aiet {
    permutation: Permutation,
    lambda: Vec<f64>,
    rho: Vec<f64>,
}

impl Aiet {
    /// Validates `Σλ = 1`, `Σρλ = 1` within `1e-9` and renormalises exactly.
    pub fn new(permutation: Permutation, lambda: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let d = permutation.d();
        if lambda.len() != d || rho.len() != d {
            return Err(Error::InvalidInput(format!("expected {d} lengths and slopes")));
        }
        let sl: f64 = lambda.iter().sum();
        let sr: f64 = lambda.iter().zip(&rho).map(|(l, r)| l * r).sum();
        if (sl - 1.0).abs() > 1e-9 || (sr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("constraint violated: sum lambda = {sl}, sum rho lambda = {sr}")));
        }
        let image: Vec<f64> = lambda.iter().zip(&rho).map(|(l, r)| l * r).collect();
        Self::from_lengths(permutation, lambda, image)
    }

    /// Standard IET with unit slopes.
    pub fn iet(permutation: Permutation, lambda: Vec<f64>) -> Result<Self> {
        let image = lambda.clone();
        Self::from_lengths(permutation, lambda, image)
    }

    /// Builds from unnormalised top lengths and image lengths, rescaling both to total 1.
    pub fn from_lengths(permutation: Permutation, top: Vec<f64>, image: Vec<f64>) -> Result<Self> {
        let d = permutation.d();
        if top.len() != d || image.len() != d {
            return Err(Error::InvalidInput(format!("expected {d} lengths")));
        }
        if top.iter().chain(&image).any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput(format!("lengths must be positive: {top:?} {image:?}")));
        }
        let st: f64 = top.iter().sum();
        let si: f64 = image.iter().sum();
        let lambda: Vec<f64> = top.iter().map(|x| x / st).collect();
        let rho: Vec<f64> = image.iter().zip(&lambda).map(|(y, l)| (y / si) / l).collect();
        Ok(Aiet { permutation, lambda, rho })
    }

    /// Builds from lengths and log-slopes; `μ` is shifted by a constant to satisfy `Σ e^μ λ = 1`.
    pub fn from_log_slopes(permutation: Permutation, lambda: Vec<f64>, mu: &[f64]) -> Result<Self> {
        let image: Vec<f64> = lambda.iter().zip(mu).map(|(l, m)| l * m.exp()).collect();
        Self::from_lengths(permutation, lambda, image)
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn d(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Log-slopes `μ = log ρ`.
    pub fn mu(&self) -> Vec<f64> {
        self.rho.iter().map(|r| r.ln()).collect()
    }

    /// Image lengths `ρᵢλᵢ`.
    pub fn image_lengths(&self) -> Vec<f64> {
        self.lambda.iter().zip(&self.rho).map(|(l, r)| l * r).collect()
    }

    pub fn is_iet(&self) -> bool {
        self.rho.iter().all(|&r| (r - 1.0).abs() <= 1e-15)
    }

    /// Sup distance of `(λ, μ)` coordinates.
    pub fn distance(&self, other: &Aiet) -> f64 {
        let dl = self.lambda.iter().zip(&other.lambda).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dm = self.mu().iter().zip(other.mu()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        dl.max(dm)
    }
}

/// Per-branch non-linearity data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonLinearityProfile {
    /// Sampled `η_{φᵢ}` at the nodes of each profile's grid.
    pub samples: Vec<Vec<f64>>,
    /// `∫₀¹ η_{φᵢ}` by quadrature.
    pub branch_integrals: Vec<Integral>,
    /// Sum of the branch integrals.
    pub total: f64,
}

/// Serialised form of a [`Giet`].
#[derive(Serialize, Deserialize)]
struct GietData {
    permutation: Permutation,
    lambda: Vec<f64>,
    rho: Vec<f64>,
    profiles: Vec<MonotoneMap>,
}

/// Generalised interval exchange: affine part plus one profile per branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GietData", into = "GietData")]
pub struct Giet {
    affine: Aiet,
    profiles: Vec<MonotoneMap>,
    top_starts: Vec<f64>,
    image_starts: Vec<f64>,
    image_lengths: Vec<f64>,
}

impl TryFrom<GietData> for Giet {
    type Error = Error;
    fn try_from(d: GietData) -> Result<Self> {
        let d_ = d.permutation.d();
        if d.lambda.len() != d_ || d.rho.len() != d_ {
            return Err(Error::InvalidInput("length mismatch".into()));
        }
        // keep the stored floats bit-for-bit
        let affine = Aiet { permutation: d.permutation, lambda: d.lambda, rho: d.rho };
        if affine.lambda.iter().chain(&affine.rho).any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput("lengths and slopes must be positive".into()));
        }
        Giet::assemble(affine, d.profiles)
    }
}

impl From<Giet> for GietData {
    fn from(g: Giet) -> Self {
        GietData { permutation: g.affine.permutation, lambda: g.affine.lambda, rho: g.affine.rho, profiles: g.profiles }
    }
}

impl Giet {
    pub fn assemble(affine: Aiet, profiles: Vec<MonotoneMap>) -> Result<Self> {
        let d = affine.d();
        if profiles.len() != d {
            return Err(Error::InvalidInput(format!("expected {d} profiles, got {}", profiles.len())));
        }
        let mut top_starts = Vec::with_capacity(d + 1);
        let mut acc = 0.0;
        for l in &affine.lambda {
            top_starts.push(acc);
            acc += l;
        }
        top_starts.push(1.0);
        let image_lengths = affine.image_lengths();
        let inv = affine.permutation.inverse();
        let mut image_starts = vec![0.0; d];
        let mut acc = 0.0;
        for &label in &inv {
            image_starts[label] = acc;
            acc += image_lengths[label];
        }
        Ok(Giet { affine, profiles, top_starts, image_starts, image_lengths })
    }

    /// AIET with identity profiles on `grid`.
    pub fn from_aiet(affine: Aiet, grid: &Grid) -> Self {
        let d = affine.d();
        let profiles = (0..d).map(|_| MonotoneMap::identity(grid)).collect();
        Self::assemble(affine, profiles).expect("dimensions agree")
    }

    pub fn decompose(&self) -> (Aiet, Vec<MonotoneMap>) {
        (self.affine.clone(), self.profiles.clone())
    }

    pub fn affine(&self) -> &Aiet {
        &self.affine
    }

    pub fn profiles(&self) -> &[MonotoneMap] {
        &self.profiles
    }

    pub fn profile(&self, i: usize) -> &MonotoneMap {
        &self.profiles[i]
    }

    pub fn permutation(&self) -> &Permutation {
        &self.affine.permutation
    }

    pub fn d(&self) -> usize {
        self.affine.d()
    }

    /// Left endpoints of the top intervals followed by 1.
    pub fn top_starts(&self) -> &[f64] {
        &self.top_starts
    }

    /// Domain `[u_i, u_{i+1}]` of branch `i`.
    pub fn domain(&self, i: usize) -> (f64, f64) {
        (self.top_starts[i], self.top_starts[i + 1])
    }

    /// Image interval of branch `i`.
    pub fn image(&self, i: usize) -> (f64, f64) {
        let a = self.image_starts[i];
        let b = if self.affine.permutation.sigma(i) == self.d() - 1 { 1.0 } else { a + self.image_lengths[i] };
        (a, b)
    }

    pub fn is_aiet(&self) -> bool {
        self.profiles.iter().all(|p| p.is_identity())
    }

    /// Branch containing `x` under the half-open convention.
    #[inline]
    pub fn branch_of(&self, x: f64) -> usize {
        let d = self.d();
        if x >= 1.0 {
            return d - 1;
        }
        let mut i = match self.top_starts.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        };
        if i >= d {
            i = d - 1;
        }
        i
    }

    /// Jet of branch `i` (extended to the closure of its domain) at `x`.
    #[inline]
    pub fn branch_jet(&self, i: usize, x: f64) -> Jet {
        let (a, b) = self.domain(i);
        let w = b - a;
        let t = ((x - a) / w).clamp(0.0, 1.0);
        let (c, e) = self.image(i);
        let l = e - c;
        let j = self.profiles[i].jet(t);
        let s = l / w;
        Jet { v: c + l * j.v, d1: s * j.d1, d2: s * j.d2 / w, d3: s * j.d3 / (w * w) }
    }

    /// Value of branch `i` at `x`.
    #[inline]
    pub fn branch_value(&self, i: usize, x: f64) -> f64 {
        let (a, b) = self.domain(i);
        let t = ((x - a) / (b - a)).clamp(0.0, 1.0);
        let (c, e) = self.image(i);
        c + (e - c) * self.profiles[i].value(t)
    }

    /// Image of `[x, x + len]` under branch `i` as `(start, length)`.
    #[inline]
    pub fn branch_image_interval(&self, i: usize, x: f64, len: f64) -> (f64, f64) {
        let (a, b) = self.domain(i);
        let w = b - a;
        let t = ((x - a) / w).clamp(0.0, 1.0);
        let (c, e) = self.image(i);
        let l = e - c;
        let p = &self.profiles[i];
        (c + l * p.value(t), l * p.increment(t, len / w))
    }

    /// Preimage of `y` under branch `i`.
    pub fn branch_inverse(&self, i: usize, y: f64) -> f64 {
        let (a, b) = self.domain(i);
        let (c, e) = self.image(i);
        let s = ((y - c) / (e - c)).clamp(0.0, 1.0);
        a + (b - a) * self.profiles[i].inverse_value(s)
    }

    /// `T(x)` and the branch used.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, usize) {
        let i = self.branch_of(x);
        (self.branch_value(i, x), i)
    }

    /// Checked evaluation.
    pub fn eval_checked(&self, x: f64) -> Result<(f64, usize)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidInput(format!("point {x} outside [0,1]")));
        }
        Ok(self.eval(x))
    }

    /// Jet of `T` at `x`.
    pub fn jet(&self, x: f64) -> Jet {
        self.branch_jet(self.branch_of(x), x)
    }

    /// `T⁻¹(y)` for `y ∈ [0,1]`.
    pub fn inverse(&self, y: f64) -> (f64, usize) {
        let d = self.d();
        let inv = self.affine.permutation.inverse();
        let mut label = inv[d - 1];
        for p in 0..d {
            let l = inv[p];
            let (c, e) = self.image(l);
            if y >= c && (y < e || p == d - 1) {
                label = l;
                break;
            }
        }
        (self.branch_inverse(label, y), label)
    }

    /// Max over branches of `‖φᵢ − id‖_{C^r}`.
    pub fn cr_norm(&self, r: usize) -> f64 {
        self.profiles.iter().map(|p| p.cr_norm(r)).fold(0.0, f64::max)
    }

    /// Affine sup-distance plus max over branches of `‖φᵢ¹ − φᵢ²‖_{C^r}`.
    pub fn cr_distance(&self, other: &Giet, r: usize) -> Result<f64> {
        if self.permutation() != other.permutation() {
            return Err(Error::InvalidInput("different permutations".into()));
        }
        let p = self.profiles.iter().zip(&other.profiles).map(|(a, b)| a.cr_distance(b, r)).fold(0.0, f64::max);
        Ok(self.affine.distance(&other.affine) + p)
    }

    /// Sup-distance of the assembled maps on `samples` equispaced points per branch plus all breaks.
    pub fn c0_map_distance(&self, other: &Giet, samples: usize) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.d() {
            let (a, b) = self.domain(i);
            for k in 0..samples {
                let x = a + (b - a) * (k as f64 + 0.5) / samples as f64;
                m = m.max((self.eval(x).0 - other.eval(x).0).abs());
            }
        }
        m
    }

    /// `∫₀¹ η_T = Σᵢ ∫₀¹ η_{φᵢ}`.
    pub fn total_nonlinearity(&self) -> f64 {
        self.profiles.iter().map(|p| p.integral_eta().value).sum()
    }

    /// `∫₀¹ |η_T|`.
    pub fn total_abs_nonlinearity(&self) -> f64 {
        self.profiles.iter().map(|p| p.integral_abs_eta().value).sum()
    }

    pub fn nonlinearity_profile(&self) -> NonLinearityProfile {
        let samples = self.profiles.iter().map(|p| p.node_jets().iter().map(|j| j.eta()).collect()).collect();
        let branch_integrals: Vec<Integral> = self.profiles.iter().map(|p| p.integral_eta()).collect();
        let total = branch_integrals.iter().map(|i| i.value).sum();
        NonLinearityProfile { samples, branch_integrals, total }
    }

    /// `Σᵢ d_η(φᵢ, ψᵢ)` over the profiles of two maps with the same permutation.
    pub fn eta_distance(&self, other: &Giet) -> Result<f64> {
        if self.permutation() != other.permutation() {
            return Err(Error::InvalidInput("different permutations".into()));
        }
        Ok(self.profiles.iter().zip(&other.profiles).map(|(a, b)| eta_distance(a, b).value).sum())
    }

    /// Replaces the profiles, keeping the affine part.
    pub fn with_profiles(&self, profiles: Vec<MonotoneMap>) -> Result<Giet> {
        Giet::assemble(self.affine.clone(), profiles)
    }

    /// The conjugate `g ∘ T ∘ g⁻¹`, with profiles sampled on `grid`.
    pub fn conjugate_by(&self, g: &MonotoneMap, grid: &Grid) -> Result<Giet> {
        if g.is_identity() {
            return Ok(self.clone());
        }
        let d = self.d();
        let mut top = Vec::with_capacity(d);
        let mut image = Vec::with_capacity(d);
        let mut profiles = Vec::with_capacity(d);
        for i in 0..d {
            let (a, b) = self.domain(i);
            let (c, e) = self.image(i);
            let (ga, gb) = (g.value(a), g.value(b));
            let (gc, ge) = (g.value(c), g.value(e));
            top.push(gb - ga);
            image.push(ge - gc);
            let w = gb - ga;
            let scale = 1.0 / (ge - gc);
            let p = MonotoneMap::from_fn(grid, |t| {
                let xp = if t == 1.0 { gb } else { ga + w * t };
                let x = if t == 0.0 {
                    a
                } else if t == 1.0 {
                    b
                } else {
                    g.inverse_value(xp)
                };
                let ginv = g.jet(x).inverse_at(x);
                let tj = self.branch_jet(i, x);
                let outer = g.jet(tj.v);
                let full = Jet::compose(Jet::compose(outer, tj), ginv).pre_scale(w).post_affine(gc, scale);
                if t == 0.0 {
                    Jet { v: 0.0, ..full }
                } else if t == 1.0 {
                    Jet { v: 1.0, ..full }
                } else {
                    full
                }
            })?;
            profiles.push(p);
        }
        let affine = Aiet::from_lengths(self.permutation().clone(), top, image)?;
        Giet::assemble(affine, profiles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Giet {
        let p = Permutation::from_one_based(&[2, 1]).unwrap();
        let t = 0.5 * (5f64.sqrt() - 1.0);
        Giet::from_aiet(Aiet::iet(p, vec![t, 1.0 - t]).unwrap(), &Grid::uniform(33).unwrap())
    }

    #[test]
    fn rotation_eval() {
        let g = golden();
        let t = g.affine().lambda()[0];
        let (y, b) = g.eval(0.0);
        assert_eq!(b, 0);
        assert!((y - (1.0 - t)).abs() < 1e-15);
        let (y, b) = g.eval(t);
        assert_eq!(b, 1);
        assert!(y.abs() < 1e-15);
        let (x, l) = g.inverse(0.2);
        assert_eq!(l, 1);
        assert!((g.eval(x).0 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn aiet_constraints() {
        let p = Permutation::rotation(3).unwrap();
        let a = Aiet::from_log_slopes(p.clone(), vec![0.2, 0.3, 0.5], &[0.1, -0.2, 0.05]).unwrap();
        let s1: f64 = a.lambda().iter().sum();
        let s2: f64 = a.image_lengths().iter().sum();
        assert!((s1 - 1.0).abs() < 1e-15 && (s2 - 1.0).abs() < 1e-15);
        assert!(Aiet::new(p, vec![0.2, 0.3, 0.6], vec![1.0; 3]).is_err());
    }
}
