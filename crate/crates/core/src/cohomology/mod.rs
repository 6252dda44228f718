//! Birkhoff sums, the cohomological equation `u ∘ T − u = f`, the invariant density
//! and the conjugacy `h` with `h ∘ T₀ = T ∘ h`, and the fine-grid ratio test.

pub mod finegrid;
pub mod holder;
pub mod special;

pub use finegrid::{atom_alignment, fine_grid_ratio_test, salem_map, AtomAlignment, FineGridLevel, FineGridReport};
pub use holder::{holder_estimate, holder_seminorm, HolderReport};
pub use special::{decompose, direct_orbit, special_birkhoff_decomposition, LevelStack, SpecialDecomposition};

use crate::error::{Error, Result};
use crate::giet::Giet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CohomConfig {
    /// Length of the orbit carrying the solution.
    pub orbit_length: usize,
    /// Base point of the orbit.
    pub x0: f64,
    /// Size of the uniform grid on which `u` is stored.
    pub grid_size: usize,
    /// Boundedness compares `N = orbit_length / 4` with `4N`.
    pub growth_tolerance: f64,
    /// Base points for the Birkhoff sups.
    pub birkhoff_points: usize,
    pub residual_samples: usize,
    /// Residual samples closer than this to a break point (or its image) are skipped.
    pub break_guard: f64,
    /// Declared bound on the residual.
    pub tolerance: f64,
    /// Iterates of each break point used for the conditioning indicator.
    pub break_orbit_length: usize,
    /// Birkhoff sups below this are rounding noise and count as bounded.
    pub sum_floor: f64,
}

impl Default for CohomConfig {
    fn default() -> Self {
        CohomConfig {
            orbit_length: 100_000,
            x0: 1e-7,
            grid_size: 1_048_577,
            growth_tolerance: 1.05,
            birkhoff_points: 8,
            residual_samples: 2_000,
            break_guard: 2e-5,
            tolerance: 1e-5,
            break_orbit_length: 2_000,
            sum_floor: 1e-9,
        }
    }
}

/// A function sampled on a uniform grid of `[0,1]`, linearly interpolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.values.len() - 1;
        let s = (x.clamp(0.0, 1.0) * m as f64).min(m as f64);
        let k = (s.floor() as usize).min(m - 1);
        let w = s - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Sup of `|Sₙ f(x)|` over `n ≤ n_max` and the base points, by direct iteration.
pub fn birkhoff_bound(t: &Giet, f: &(dyn Fn(f64) -> f64 + Sync), n_max: usize, points: &[f64]) -> f64 {
    points
        .par_iter()
        .map(|&x0| {
            let mut x = x0;
            let mut s = 0.0f64;
            let mut m = 0.0f64;
            for _ in 0..n_max {
                s += f(x);
                m = m.max(s.abs());
                x = t.eval(x).0;
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

/// `sup_{n ≤ 4N} / sup_{n ≤ N}`, or `1` when `sup_{n ≤ 4N}` is below the floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCheck {
    pub n: usize,
    pub sup_n: f64,
    pub sup_4n: f64,
    pub growth: f64,
}

/// Equispaced base points avoiding the ends.
pub fn base_points(k: usize) -> Vec<f64> {
    (0..k).map(|i| (i as f64 + 0.5) / k as f64 * (1.0 - 2e-3) + 1e-3).collect()
}

pub fn boundedness_check(t: &Giet, f: &(dyn Fn(f64) -> f64 + Sync), n: usize, points: &[f64], floor: f64) -> BoundednessCheck {
    let sup_n = birkhoff_bound(t, f, n, points);
    let sup_4n = birkhoff_bound(t, f, 4 * n, points);
    let growth = if sup_4n <= floor {
        1.0
    } else if sup_n > 0.0 {
        sup_4n / sup_n
    } else {
        f64::INFINITY
    };
    BoundednessCheck { n, sup_n, sup_4n, growth }
}

/// `u` with `u ∘ T − u = f`, `u(0) = 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CohomSolution {
    pub u: SampledFunction,
    /// `sup |u ∘ T − u − f|` over the residual samples.
    pub residual: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
    /// `sup |Sₙ f|` over the orbit.
    pub birkhoff_bound: f64,
    pub boundedness: BoundednessCheck,
    pub orbit_length: usize,
    /// Smallest distance between distinct points of the break-point orbits.
    pub min_break_gap: f64,
}

impl CohomSolution {
    pub fn eval(&self, x: f64) -> f64 {
        self.u.eval(x)
    }
}

/// Smallest gap between the first `len` iterates of the interior break points.
pub fn min_break_orbit_gap(t: &Giet, len: usize) -> f64 {
    let mut pts = Vec::with_capacity((t.d() - 1) * len);
    for &b in &t.top_starts()[1..t.d()] {
        let mut x = b;
        for _ in 0..len {
            pts.push(x);
            x = t.eval(x).0;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min)
}

fn near_break(t: &Giet, x: f64, guard: f64) -> bool {
    let d = t.d();
    (0..d).any(|i| {
        let (a, b) = t.domain(i);
        let (c, e) = t.image(i);
        (x - a).abs() < guard || (x - b).abs() < guard || (x - c).abs() < guard || (x - e).abs() < guard
    })
}

/// Linear continuation past the end point `orbit[edge]` through an orbit point at least as far inside.
fn extrapolate(orbit: &[(f64, f64)], edge: usize, x: f64) -> f64 {
    let (xe, ue) = orbit[edge];
    let reach = (x - xe).abs();
    let other = if edge == 0 {
        orbit.iter().find(|p| p.0 - xe >= reach)
    } else {
        orbit.iter().rev().find(|p| xe - p.0 >= reach)
    };
    match other {
        Some(&(xo, uo)) if xo != xe => ue + (ue - uo) * (x - xe) / (xe - xo),
        _ => ue,
    }
}

/// Builds `u` along the orbit of `x₀` and checks the residual and the boundedness of the sums.
pub fn solve_cohomological(t: &Giet, f: &(dyn Fn(f64) -> f64 + Sync), cfg: &CohomConfig) -> Result<CohomSolution> {
    if cfg.orbit_length < 8 || cfg.grid_size < 3 {
        return Err(Error::InvalidInput("orbit and grid too short".into()));
    }
    let n = cfg.orbit_length / 4;
    let boundedness = boundedness_check(t, f, n, &base_points(cfg.birkhoff_points), cfg.sum_floor);
    if boundedness.growth > cfg.growth_tolerance {
        return Err(Error::Boundedness { growth: boundedness.growth, n, n4: 4 * n });
    }
    let mut orbit = Vec::with_capacity(cfg.orbit_length);
    let mut x = cfg.x0;
    let mut s = 0.0f64;
    let mut bound = 0.0f64;
    for _ in 0..cfg.orbit_length {
        orbit.push((x, s));
        s += f(x);
        bound = bound.max(s.abs());
        x = t.eval(x).0;
    }
    orbit.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = cfg.grid_size - 1;
    let mut values = Vec::with_capacity(cfg.grid_size);
    let mut k = 0;
    for q in 0..=m {
        let xq = q as f64 / m as f64;
        while k + 1 < orbit.len() && orbit[k + 1].0 <= xq {
            k += 1;
        }
        let v = if xq <= orbit[0].0 {
            extrapolate(&orbit, 0, xq)
        } else if k + 1 >= orbit.len() {
            extrapolate(&orbit, orbit.len() - 1, xq)
        } else {
            let (xa, ua) = orbit[k];
            let (xb, ub) = orbit[k + 1];
            ua + (ub - ua) * (xq - xa) / (xb - xa)
        };
        values.push(v);
    }
    let u0 = values[0];
    for v in values.iter_mut() {
        *v -= u0;
    }
    let u = SampledFunction { values };
    let residual = (0..cfg.residual_samples)
        .into_par_iter()
        .filter_map(|q| {
            let x = (q as f64 + 0.5) / cfg.residual_samples as f64;
            if near_break(t, x, cfg.break_guard) {
                return None;
            }
            let tx = t.eval(x).0;
            Some((u.eval(tx) - u.eval(x) - f(x)).abs())
        })
        .reduce(|| 0.0, f64::max);
    Ok(CohomSolution {
        u,
        residual,
        tolerance: cfg.tolerance,
        within_tolerance: residual <= cfg.tolerance,
        birkhoff_bound: bound,
        boundedness,
        orbit_length: cfg.orbit_length,
        min_break_gap: min_break_orbit_gap(t, cfg.break_orbit_length),
    })
}

/// `log DT`.
pub fn log_derivative(t: &Giet) -> impl Fn(f64) -> f64 + Sync + '_ {
    move |x| t.jet(x).d1.ln()
}

/// Density below this counts as vanishing.
pub const DENSITY_FLOOR: f64 = 1e-6;

/// The conjugacy `h = H⁻¹`, `H(x) = ∫₀ˣ μ`, sampled on a uniform grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjugacyMap {
    /// `h` at the grid nodes.
    pub h: SampledFunction,
    /// The density `μ` at the grid nodes.
    pub density: SampledFunction,
    /// `H(x) = ∫₀ˣ μ` at the grid nodes.
    pub distribution: SampledFunction,
    /// `h ∘ T₀ = T ∘ h`.
    pub conjugates_t0_to_t: bool,
    /// `max(sup|h − id|, sup|h' − 1|)` with `h' = 1/μ∘h`.
    pub c1_distance: f64,
    pub holder: HolderReport,
    /// `sup ‖h∘T₀ − T∘h‖` on samples away from breaks.
    pub conjugacy_residual: f64,
    /// `max |h(break of T₀) − break of T|`.
    pub break_error: f64,
    /// `c1_distance / d_{C²}(T, T₀)`.
    pub linear_constant: Option<f64>,
}

impl ConjugacyMap {
    pub fn value(&self, y: f64) -> f64 {
        self.h.eval(y)
    }

    pub fn derivative(&self, y: f64) -> f64 {
        1.0 / self.density.eval(self.h.eval(y))
    }

    /// `∫ₐᵇ μ`.
    pub fn measure(&self, a: f64, b: f64) -> f64 {
        self.distribution.eval(b) - self.distribution.eval(a)
    }

    pub fn identity(grid_size: usize) -> Self {
        let m = grid_size.max(2) - 1;
        let h = SampledFunction { values: (0..=m).map(|k| k as f64 / m as f64).collect() };
        let density = SampledFunction { values: vec![1.0; m + 1] };
        ConjugacyMap {
            distribution: h.clone(),
            h,
            density,
            conjugates_t0_to_t: true,
            c1_distance: 0.0,
            holder: HolderReport::zero(),
            conjugacy_residual: 0.0,
            break_error: 0.0,
            linear_constant: None,
        }
    }
}

/// `μ = e^u / ∫e^u` from a solution of `u ∘ T − u = −log DT`, and `h = H⁻¹`.
pub fn invariant_density_and_conjugacy(t: &Giet, t0: &Giet, sol: &CohomSolution, cfg: &CohomConfig) -> Result<ConjugacyMap> {
    let n = sol.u.len();
    let m = n - 1;
    let hstep = sol.u.step();
    let raw: Vec<f64> = sol.u.values.iter().map(|v| v.exp()).collect();
    let mut cum = vec![0.0; n];
    for k in 1..n {
        cum[k] = cum[k - 1] + 0.5 * hstep * (raw[k - 1] + raw[k]);
    }
    let z = cum[m];
    let density = SampledFunction { values: raw.iter().map(|r| r / z).collect() };
    let dmin = density.values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(dmin > DENSITY_FLOOR) {
        return Err(Error::DegenerateDensity { min: dmin });
    }
    let big_h: Vec<f64> = cum.iter().map(|c| c / z).collect();
    let mut hv = Vec::with_capacity(n);
    let mut k = 0;
    for q in 0..=m {
        let y = q as f64 / m as f64;
        while k + 1 < m && big_h[k + 1] <= y {
            k += 1;
        }
        let (ha, hb) = (big_h[k], big_h[k + 1]);
        let w = if hb > ha { ((y - ha) / (hb - ha)).clamp(0.0, 1.0) } else { 0.0 };
        hv.push((k as f64 + w) * hstep);
    }
    hv[0] = 0.0;
    hv[m] = 1.0;
    let h = SampledFunction { values: hv };
    let mut map = ConjugacyMap {
        holder: HolderReport::zero(),
        h,
        density,
        distribution: SampledFunction { values: big_h },
        conjugates_t0_to_t: true,
        c1_distance: 0.0,
        conjugacy_residual: 0.0,
        break_error: 0.0,
        linear_constant: None,
    };
    let mut c1 = 0.0f64;
    for q in 0..=m {
        let y = q as f64 / m as f64;
        c1 = c1.max((map.value(y) - y).abs()).max((map.derivative(y) - 1.0).abs());
    }
    map.c1_distance = c1;
    let deriv: Vec<f64> = (0..=m).map(|q| map.derivative(q as f64 / m as f64)).collect();
    map.holder = holder_estimate(&deriv);
    map.conjugacy_residual = (0..cfg.residual_samples)
        .into_par_iter()
        .filter_map(|q| {
            let y = (q as f64 + 0.5) / cfg.residual_samples as f64;
            if near_break(t0, y, cfg.break_guard) || near_break(t, map.value(y), cfg.break_guard) {
                return None;
            }
            Some((map.value(t0.eval(y).0) - t.eval(map.value(y)).0).abs())
        })
        .reduce(|| 0.0, f64::max);
    map.break_error = t0
        .top_starts()
        .iter()
        .zip(t.top_starts())
        .map(|(a, b)| (map.value(*a) - b).abs())
        .fold(0.0, f64::max);
    map.conjugates_t0_to_t = map.conjugacy_residual <= cfg.tolerance && map.break_error <= cfg.tolerance;
    let d2 = t.cr_distance(t0, 2)?;
    map.linear_constant = (d2 > 0.0).then(|| map.c1_distance / d2);
    Ok(map)
}

/// Full pipeline for `T`: solve with `f = −log DT`, then build `μ` and `h`.
pub fn conjugacy_to_reference(t: &Giet, t0: &Giet, cfg: &CohomConfig) -> Result<(CohomSolution, ConjugacyMap)> {
    let ld = log_derivative(t);
    let f = move |x: f64| -ld(x);
    let sol = solve_cohomological(t, &f, cfg)?;
    let map = invariant_density_and_conjugacy(t, t0, &sol, cfg)?;
    Ok((sol, map))
}
