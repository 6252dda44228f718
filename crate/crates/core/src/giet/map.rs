//! Orientation-preserving diffeomorphisms of `[0,1]` as quintic Hermite splines.
//!
//! Each node carries a full third-order [`Jet`]. Cells interpolate orders 0–2
//! with a quintic, so the interpolant is C² across nodes. Third-derivative data
//! at nodes is stored exactly and returned when a node is hit.

use super::jet::Jet;
use super::quad::{self, Integral};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Tolerance on endpoint values before snapping them to exactly 0 and 1.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Sample abscissae: strictly increasing, starting at 0 and ending at 1.
#[derive(Clone, Debug)]
pub struct Grid {
    nodes: Arc<[f64]>,
    uniform: bool,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.nodes, &other.nodes) || self.nodes[..] == other.nodes[..]
    }
}

impl Grid {
    /// Uniform grid with `n` nodes.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 nodes, got {n}")));
        }
        let m = (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|k| k as f64 / m).collect();
        Ok(Grid { nodes: nodes.into(), uniform: true })
    }

    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 2 {
            return Err(Error::InvalidInput("grid needs at least 2 nodes".into()));
        }
        if nodes[0] != 0.0 || nodes[n - 1] != 1.0 {
            return Err(Error::InvalidInput("grid must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("grid must be strictly increasing".into()));
        }
        let m = (n - 1) as f64;
        let uniform = nodes.iter().enumerate().all(|(k, &x)| x == k as f64 / m);
        Ok(Grid { nodes: nodes.into(), uniform })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Largest cell width.
    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Cell index `i` with `nodes[i] <= x < nodes[i+1]`, clamped to the last cell.
    #[inline]
    pub fn locate(&self, x: f64) -> usize {
        let n = self.nodes.len();
        if x <= 0.0 {
            return 0;
        }
        if x >= 1.0 {
            return n - 2;
        }
        if self.uniform {
            let mut i = ((x * (n - 1) as f64) as usize).min(n - 2);
            if x < self.nodes[i] {
                i -= 1;
            } else if i + 2 < n && x >= self.nodes[i + 1] {
                i += 1;
            }
            i
        } else {
            match self.nodes.binary_search_by(|p| p.total_cmp(&x)) {
                Ok(i) => i.min(n - 2),
                Err(i) => i - 1,
            }
        }
    }

    /// Union of two grids with near-duplicates (closer than `tol`) merged.
    pub fn merge(&self, other: &[f64], tol: f64) -> Grid {
        if other.is_empty() || (other.len() == self.len() && other == &self.nodes[..]) {
            return self.clone();
        }
        let mut all: Vec<f64> = self.nodes.iter().copied().chain(other.iter().copied().filter(|x| *x > 0.0 && *x < 1.0)).collect();
        all.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(all.len());
        for x in all {
            match out.last() {
                Some(&l) if x - l <= tol => {}
                _ => out.push(x),
            }
        }
        if *out.last().unwrap() != 1.0 {
            out.pop();
            out.push(1.0);
        }
        // ensure the final 1.0 is not within tol of its predecessor
        while out.len() > 2 && out[out.len() - 1] - out[out.len() - 2] <= tol {
            let k = out.len() - 2;
            out.remove(k);
        }
        Grid::new(out).expect("merged grid is valid")
    }
}

/// Serialised form of a [`MonotoneMap`].
#[derive(Serialize, Deserialize)]
struct MonotoneMapData {
    order: String,
    identity: bool,
    grid: Vec<f64>,
    v: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
}

/// Increasing C³ diffeomorphism of `[0,1]` represented by Hermite data.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "MonotoneMapData", into = "MonotoneMapData")]
pub struct MonotoneMap {
    grid: Grid,
    jets: Vec<Jet>,
    coeffs: Vec<[f64; 6]>,
    identity: bool,
}

impl PartialEq for MonotoneMap {
    fn eq(&self, other: &Self) -> bool {
        self.identity == other.identity && self.grid == other.grid && self.jets == other.jets
    }
}

impl TryFrom<MonotoneMapData> for MonotoneMap {
    type Error = Error;

    fn try_from(d: MonotoneMapData) -> Result<Self> {
        if d.order != INTERPOLATION_ORDER {
            return Err(Error::InvalidInput(format!("unknown interpolation order {:?}", d.order)));
        }
        let grid = Grid::new(d.grid)?;
        let n = grid.len();
        if d.v.len() != n || d.d1.len() != n || d.d2.len() != n || d.d3.len() != n {
            return Err(Error::InvalidInput("Hermite data length mismatch".into()));
        }
        if d.identity {
            return Ok(MonotoneMap::identity(&grid));
        }
        let jets = (0..n).map(|k| Jet::new(d.v[k], d.d1[k], d.d2[k], d.d3[k])).collect();
        MonotoneMap::from_jets(&grid, jets)
    }
}

impl From<MonotoneMap> for MonotoneMapData {
    fn from(m: MonotoneMap) -> Self {
        MonotoneMapData {
            order: INTERPOLATION_ORDER.to_string(),
            identity: m.identity,
            grid: m.grid.nodes().to_vec(),
            v: m.jets.iter().map(|j| j.v).collect(),
            d1: m.jets.iter().map(|j| j.d1).collect(),
            d2: m.jets.iter().map(|j| j.d2).collect(),
            d3: m.jets.iter().map(|j| j.d3).collect(),
        }
    }
}

pub const INTERPOLATION_ORDER: &str = "quintic-hermite";

fn cell_coeffs(x0: f64, x1: f64, a: &Jet, b: &Jet) -> [f64; 6] {
    let h = x1 - x0;
    let a0 = a.v;
    let a1 = h * a.d1;
    let a2 = 0.5 * h * h * a.d2;
    let r0 = b.v - a0 - a1 - a2;
    let r1 = h * b.d1 - a1 - 2.0 * a2;
    let r2 = h * h * b.d2 - 2.0 * a2;
    let a3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
    let a4 = -15.0 * r0 + 7.0 * r1 - r2;
    let a5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
    [a0, a1, a2, a3, a4, a5]
}

/// Bernstein control points of the quintic on one cell.
fn bernstein(h: f64, a: &Jet, b: &Jet) -> [f64; 6] {
    [
        a.v,
        a.v + h * a.d1 / 5.0,
        a.v + 2.0 * h * a.d1 / 5.0 + h * h * a.d2 / 20.0,
        b.v - 2.0 * h * b.d1 / 5.0 + h * h * b.d2 / 20.0,
        b.v - h * b.d1 / 5.0,
        b.v,
    ]
}

fn split_bernstein(b: &[f64; 6]) -> ([f64; 6], [f64; 6]) {
    let mut w = *b;
    let mut left = [0.0; 6];
    let mut right = [0.0; 6];
    left[0] = w[0];
    right[5] = w[5];
    for k in 1..6 {
        for i in 0..6 - k {
            w[i] = 0.5 * (w[i] + w[i + 1]);
        }
        left[k] = w[0];
        right[5 - k] = w[5 - k];
    }
    (left, right)
}

fn bernstein_monotone(b: &[f64; 6], depth: usize) -> bool {
    if b.windows(2).all(|w| w[1] > w[0]) {
        return true;
    }
    // derivative at the ends of this piece is a multiple of the end differences
    if !(b[1] > b[0]) && !(b[1] == b[0] && b[2] > b[1]) {
        return false;
    }
    if !(b[5] > b[4]) && !(b[5] == b[4] && b[4] > b[3]) {
        return false;
    }
    if depth == 0 {
        // control polygon not yet positive; decide from a dense scan of the quartic derivative
        return (0..=64).all(|k| deriv_bernstein(b, k as f64 / 64.0) > 0.0);
    }
    let (l, r) = split_bernstein(b);
    bernstein_monotone(&l, depth - 1) && bernstein_monotone(&r, depth - 1)
}

fn deriv_bernstein(b: &[f64; 6], t: f64) -> f64 {
    let d: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
    let s = 1.0 - t;
    let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
    (0..5).map(|k| binom[k] * d[k] * t.powi(k as i32) * s.powi(4 - k as i32)).sum::<f64>() * 5.0
}

impl MonotoneMap {
    /// The identity map on `grid`.
    pub fn identity(grid: &Grid) -> Self {
        let jets: Vec<Jet> = grid.nodes().iter().map(|&x| Jet::identity(x)).collect();
        let coeffs = Self::build_coeffs(grid, &jets);
        MonotoneMap { grid: grid.clone(), jets, coeffs, identity: true }
    }

    /// Builds a map from node jets, validating monotonicity.
    pub fn from_jets(grid: &Grid, mut jets: Vec<Jet>) -> Result<Self> {
        let n = grid.len();
        if jets.len() != n {
            return Err(Error::InvalidInput("jet count differs from grid size".into()));
        }
        if jets.iter().any(|j| !j.is_finite()) {
            return Err(Error::InvalidInput("non-finite Hermite data".into()));
        }
        if jets[0].v.abs() > ENDPOINT_TOL || (jets[n - 1].v - 1.0).abs() > ENDPOINT_TOL {
            return Err(Error::InvalidInput(format!(
                "endpoint values must be 0 and 1, got {} and {}",
                jets[0].v,
                jets[n - 1].v
            )));
        }
        jets[0].v = 0.0;
        jets[n - 1].v = 1.0;
        if let Some(k) = jets.iter().position(|j| !(j.d1 > 0.0)) {
            return Err(Error::InvalidInput(format!("non-positive derivative {} at node {k}", jets[k].d1)));
        }
        if let Some(k) = jets.windows(2).position(|w| !(w[1].v > w[0].v)) {
            return Err(Error::InvalidInput(format!("values not strictly increasing at node {k}")));
        }
        let x = grid.nodes();
        for k in 0..n - 1 {
            let b = bernstein(x[k + 1] - x[k], &jets[k], &jets[k + 1]);
            if !bernstein_monotone(&b, 12) {
                return Err(Error::InvalidInput(format!("interpolant not monotone on cell {k}")));
            }
        }
        let identity = jets.iter().zip(x).all(|(j, &xk)| j.v == xk && j.d1 == 1.0 && j.d2 == 0.0 && j.d3 == 0.0);
        let coeffs = Self::build_coeffs(grid, &jets);
        Ok(MonotoneMap { grid: grid.clone(), jets, coeffs, identity })
    }

    /// Samples a closed-form jet function on `grid`.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Jet) -> Result<Self> {
        let jets = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::from_jets(grid, jets)
    }

    fn build_coeffs(grid: &Grid, jets: &[Jet]) -> Vec<[f64; 6]> {
        let x = grid.nodes();
        (0..x.len() - 1).map(|k| cell_coeffs(x[k], x[k + 1], &jets[k], &jets[k + 1])).collect()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn node_jets(&self) -> &[Jet] {
        &self.jets
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// Jet at `x`, clamped into `[0,1]`. Exact node data at nodes.
    #[inline]
    pub fn jet(&self, x: f64) -> Jet {
        if self.identity {
            return Jet::identity(x);
        }
        let x = x.clamp(0.0, 1.0);
        let i = self.grid.locate(x);
        let nodes = self.grid.nodes();
        let x0 = nodes[i];
        if x == x0 {
            return self.jets[i];
        }
        let x1 = nodes[i + 1];
        if x == x1 {
            return self.jets[i + 1];
        }
        let h = x1 - x0;
        let t = (x - x0) / h;
        let c = &self.coeffs[i];
        let v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
        let p1 = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        let p2 = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        let p3 = 6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5]);
        let ih = 1.0 / h;
        Jet { v, d1: p1 * ih, d2: p2 * ih * ih, d3: p3 * ih * ih * ih }
    }

    /// Value at `x`, clamped into `[0,1]`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if self.identity {
            return x;
        }
        let x = x.clamp(0.0, 1.0);
        let i = self.grid.locate(x);
        let nodes = self.grid.nodes();
        let x0 = nodes[i];
        if x == x0 {
            return self.jets[i].v;
        }
        let t = (x - x0) / (nodes[i + 1] - x0);
        let c = &self.coeffs[i];
        c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))))
    }

    /// `f(t + dt) − f(t)` without cancellation when both points share a cell.
    pub fn increment(&self, t: f64, dt: f64) -> f64 {
        if self.identity {
            return dt;
        }
        let t = t.clamp(0.0, 1.0);
        let tb = (t + dt).min(1.0);
        let i = self.grid.locate(t);
        let nodes = self.grid.nodes();
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        if tb > x1 {
            return self.value(tb) - self.value(t);
        }
        let h = x1 - x0;
        let sa = (t - x0) / h;
        let ds = (tb - t) / h;
        let sb = sa + ds;
        let c = &self.coeffs[i];
        // Σ c_k (s_b^k − s_a^k) = ds Σ c_k q_k with q_{k+1} = s_b q_k + s_a^k
        let mut q = 1.0;
        let mut pa = sa;
        let mut acc = c[1];
        for ck in &c[2..] {
            q = sb * q + pa;
            pa *= sa;
            acc += ck * q;
        }
        ds * acc
    }

    fn check_domain(x: f64) -> Result<()> {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("point {x} outside [0,1]")))
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.value(x))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.jet(x).d1)
    }

    pub fn deriv2(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.jet(x).d2)
    }

    pub fn deriv3(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.jet(x).d3)
    }

    pub fn eta(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.jet(x).eta())
    }

    pub fn deta(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.jet(x).deta())
    }

    /// Solves `f(x) = y` for `y ∈ [0,1]`.
    pub fn inverse_value(&self, y: f64) -> f64 {
        if self.identity {
            return y.clamp(0.0, 1.0);
        }
        if y <= 0.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        let n = self.jets.len();
        let i = match self.jets.binary_search_by(|j| j.v.total_cmp(&y)) {
            Ok(k) => return self.grid.nodes()[k],
            Err(k) => (k - 1).min(n - 2),
        };
        let nodes = self.grid.nodes();
        let (mut lo, mut hi) = (nodes[i], nodes[i + 1]);
        let (ya, yb) = (self.jets[i].v, self.jets[i + 1].v);
        let mut x = lo + (hi - lo) * (y - ya) / (yb - ya);
        for _ in 0..60 {
            let j = self.jet(x);
            let r = j.v - y;
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if r == 0.0 {
                break;
            }
            let mut nx = x - r / j.d1;
            if !(nx > lo && nx < hi) {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() <= 1e-17 + 2.0 * f64::EPSILON * x.abs() {
                x = nx;
                break;
            }
            x = nx;
        }
        x
    }

    /// Inverse map, with node data transformed by the inverse-function rules.
    pub fn invert(&self) -> Result<MonotoneMap> {
        if self.identity {
            return Ok(self.clone());
        }
        let nodes: Vec<f64> = self.jets.iter().map(|j| j.v).collect();
        let grid = Grid::new(nodes)?;
        let jets = self.jets.iter().zip(self.grid.nodes()).map(|(j, &x)| j.inverse_at(x)).collect();
        MonotoneMap::from_jets(&grid, jets)
    }

    /// `self ∘ g` on the merged grid `g.grid ∪ g⁻¹(self.grid)`.
    pub fn compose(&self, g: &MonotoneMap) -> Result<MonotoneMap> {
        if g.identity {
            return Ok(self.clone());
        }
        if self.identity {
            return Ok(g.clone());
        }
        let pulled: Vec<f64> = self.grid.nodes().iter().map(|&y| g.inverse_value(y)).collect();
        let grid = g.grid.merge(&pulled, 1e-13);
        MonotoneMap::from_fn(&grid, |x| {
            let inner = g.jet(x);
            Jet::compose(self.jet(inner.v), inner)
        })
    }

    /// Hermite data of the interpolant on another grid.
    pub fn resample(&self, grid: &Grid) -> Result<MonotoneMap> {
        if self.identity {
            return Ok(MonotoneMap::identity(grid));
        }
        MonotoneMap::from_fn(grid, |x| self.jet(x))
    }

    /// Unit rescaling of the restriction of `self` to `[a, b]`, sampled on `grid`.
    pub fn normalize(&self, a: f64, b: f64, grid: &Grid) -> Result<MonotoneMap> {
        if self.identity {
            if !(b > a) {
                return Err(Error::InvalidInput(format!("degenerate interval [{a}, {b}]")));
            }
            return Ok(MonotoneMap::identity(grid));
        }
        normalize_fn(grid, a, b, |x| self.jet(x))
    }

    /// Sup over sampled points of `|Dᵏ(self − other)|` for `k ≤ r`.
    pub fn cr_distance(&self, other: &MonotoneMap, r: usize) -> f64 {
        if self.identity && other.identity {
            return 0.0;
        }
        let grid = self.grid.merge(other.grid.nodes(), 0.0);
        sample_points(&grid).into_iter().map(|x| self.jet(x).sub(other.jet(x)).max_abs(r)).fold(0.0, f64::max)
    }

    /// `‖self − id‖_{C^r}` over nodes and cell midpoints.
    pub fn cr_norm(&self, r: usize) -> f64 {
        if self.identity {
            return 0.0;
        }
        sample_points(&self.grid).into_iter().map(|x| self.jet(x).sub(Jet::identity(x)).max_abs(r)).fold(0.0, f64::max)
    }

    /// Sup of `|f^{(k)}|` for a single order `k` (1, 2 or 3) over nodes and midpoints.
    pub fn sup_derivative(&self, k: usize) -> f64 {
        sample_points(&self.grid)
            .into_iter()
            .map(|x| {
                let j = self.jet(x);
                match k {
                    0 => j.v.abs(),
                    1 => j.d1.abs(),
                    2 => j.d2.abs(),
                    _ => j.d3.abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    /// Sup of `|η|` and of `|Dη|` over nodes and midpoints.
    pub fn sup_eta(&self) -> (f64, f64) {
        if self.identity {
            return (0.0, 0.0);
        }
        sample_points(&self.grid).into_iter().fold((0.0f64, 0.0f64), |(a, b), x| {
            let j = self.jet(x);
            (a.max(j.eta().abs()), b.max(j.deta().abs()))
        })
    }

    /// `∫₀¹ η` by quadrature.
    pub fn integral_eta(&self) -> Integral {
        if self.identity {
            return Integral::zero();
        }
        quad::simpson(self.grid.nodes(), |x| self.jet(x).eta())
    }

    /// `∫₀¹ |η|` by quadrature.
    pub fn integral_abs_eta(&self) -> Integral {
        if self.identity {
            return Integral::zero();
        }
        quad::simpson(self.grid.nodes(), |x| self.jet(x).eta().abs())
    }

    /// `∫₀¹ η = log f'(1) − log f'(0)`.
    pub fn total_eta_exact(&self) -> f64 {
        let n = self.jets.len();
        self.jets[n - 1].d1.ln() - self.jets[0].d1.ln()
    }
}

/// `d_η(f, g) = ∫₀¹ |η_f − η_g|` on the merged grid.
pub fn eta_distance(f: &MonotoneMap, g: &MonotoneMap) -> Integral {
    if f.is_identity() && g.is_identity() {
        return Integral::zero();
    }
    let grid = f.grid().merge(g.grid().nodes(), 0.0);
    quad::simpson(grid.nodes(), |x| (f.jet(x).eta() - g.jet(x).eta()).abs())
}

/// Nodes plus cell midpoints.
pub fn sample_points(grid: &Grid) -> Vec<f64> {
    let x = grid.nodes();
    let mut out = Vec::with_capacity(2 * x.len());
    for k in 0..x.len() - 1 {
        out.push(x[k]);
        out.push(0.5 * (x[k] + x[k + 1]));
    }
    out.push(1.0);
    out
}

/// Unit rescaling of an increasing function given by its jets on `[a, b]`.
pub fn normalize_fn(grid: &Grid, a: f64, b: f64, f: impl Fn(f64) -> Jet) -> Result<MonotoneMap> {
    if !(b > a) {
        return Err(Error::InvalidInput(format!("degenerate interval [{a}, {b}]")));
    }
    let w = b - a;
    let fa = f(a).v;
    let fb = f(b).v;
    if !(fb > fa) {
        return Err(Error::InvalidInput("function not increasing on interval".into()));
    }
    let scale = 1.0 / (fb - fa);
    let n = grid.len();
    MonotoneMap::from_fn(grid, |t| {
        let x = if t == 1.0 { b } else { a + w * t };
        let j = f(x).pre_scale(w).post_affine(fa, scale);
        if t == 0.0 {
            Jet { v: 0.0, ..j }
        } else if t == 1.0 {
            Jet { v: 1.0, ..j }
        } else {
            j
        }
    })
    .map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("normalisation on {n} nodes: {m}")),
        other => other,
    })
}

/// Moebius map `x ↦ x / (k + (1 − k) x)` of `[0,1]` fixing both ends.
pub fn moebius_jet(k: f64, x: f64) -> Jet {
    let c = 1.0 - k;
    let den = k + c * x;
    let v = x / den;
    let d1 = k / (den * den);
    let d2 = -2.0 * k * c / (den * den * den);
    let d3 = 6.0 * k * c * c / (den * den * den * den);
    Jet { v, d1, d2, d3 }
}
