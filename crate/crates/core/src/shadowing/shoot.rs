//! Shooting for the unstable coordinates of a pre-stable map.
//!
//! Depth by depth, `u` is corrected so that the unstable coordinates of `Rⁿ(s, u, h)`
//! vanish. The corrections `vₙ = uₙ − uₙ₋₁` are recorded.

use super::{affine_coordinates, unstable_linear_model, weakest_expansion, ShadowingProblem};
use crate::error::{Error, Result};
use crate::fit::{rate_fit, RateFit};
use crate::giet::Giet;
use crate::renorm::{renormalize, renormalize_n};
use crate::systems::System;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Bisection when `dim 𝒰 = 1`, Newton otherwise.
    Auto,
    Newton,
    Bisection,
    BoxSearch,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShootConfig {
    pub strategy: Strategy,
    pub newton_max_iter: usize,
    /// Target size of the finite-difference response in `u`-coordinates at the solve depth.
    pub fd_target: f64,
    pub max_halvings: usize,
    pub bisection_iter: usize,
    /// Half-width of the initial bracket or box, relative to the problem size.
    pub search_box: f64,
    pub box_samples: usize,
    pub box_rounds: usize,
    pub seed: u64,
    /// Run the fallback when the primary strategy fails at some depth.
    pub fallback: bool,
    /// Corrections at or below this size, or below the resolution of `uₙ`, are
    /// unresolved and end the ratio sequence.
    pub correction_floor: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            strategy: Strategy::Auto,
            newton_max_iter: 12,
            fd_target: 1e-6,
            max_halvings: 12,
            bisection_iter: 80,
            search_box: 20.0,
            box_samples: 48,
            box_rounds: 40,
            seed: 0,
            fallback: true,
            correction_floor: 1e-12,
        }
    }
}

/// Distances to `T₀` along the final orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub c0: f64,
    pub c1: f64,
    pub d_eta: f64,
    pub s_norm: f64,
    pub u_norm: f64,
    pub total_nonlinearity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShadowingResult {
    pub u_star: Vec<f64>,
    pub strategy: Strategy,
    pub achieved_depth: usize,
    pub levels: Vec<LevelRecord>,
    /// `‖vₙ‖` for `n = 1..=depth`.
    pub corrections: Vec<f64>,
    /// Uncertainty of `uₙ`: the final residual at depth `n` times `‖Mₙ⁻¹‖`.
    pub resolutions: Vec<f64>,
    /// `‖vₙ₊₁‖ / ‖vₙ‖` for `n = 1, 2, …` while both corrections are resolved.
    pub correction_ratios: Vec<f64>,
    /// Newton iterations (or bisection steps) per depth.
    pub iterations: Vec<usize>,
    /// `‖π_𝒰 Rⁿ‖` at the accepted `uₙ`.
    pub residuals: Vec<f64>,
    /// Whether the fallback was used at each depth.
    pub fallback_used: Vec<bool>,
    /// `(u, escape depth)` pairs visited by bisection at the final depth.
    pub bisection_trace: Vec<(f64, usize)>,
    /// Max C¹ distance to `T₀` along the orbit.
    pub k1: f64,
    /// `1/λ₂` with `λ₂` the weakest measured expansion.
    pub lambda2_inverse: f64,
    /// Levels `0..=c1_fit_end` enter `c1_fit`.
    pub c1_fit_end: usize,
    pub c1_fit: Option<RateFit>,
    pub correction_fit: Option<RateFit>,
}

impl ShadowingResult {
    pub fn u(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.u_star)
    }

    /// The shadowing map `(s, u*, h)`.
    pub fn map(&self, sys: &System, p: &ShadowingProblem) -> Result<Giet> {
        p.map(sys, &self.u())
    }

    /// Largest correction ratio from `n = 2` on.
    pub fn max_correction_ratio_from(&self, n: usize) -> Option<f64> {
        let r = self.correction_ratios.get(n.saturating_sub(1)..)?;
        r.iter().copied().reduce(f64::max)
    }
}

fn residual(sys: &System, p: &ShadowingProblem, u: &DVector<f64>, n: usize) -> Result<DVector<f64>> {
    let t = p.map(sys, u)?;
    if n == 0 {
        return Ok(affine_coordinates(sys, &t).1);
    }
    let (levels, _) = renormalize_n(&t, &sys.lp, n)?;
    Ok(affine_coordinates(sys, &levels[n]).1)
}

/// Number of levels `k ≤ n_max` of the orbit of `(s, u, h)` staying within the radius,
/// and the unstable coordinates at the last level reached.
pub fn escape_depth(sys: &System, p: &ShadowingProblem, u: &DVector<f64>, n_max: usize) -> (usize, DVector<f64>) {
    let mut t = match p.map(sys, u) {
        Ok(t) => t,
        Err(_) => return (0, u.clone()),
    };
    let mut last_u = affine_coordinates(sys, &t).1;
    for k in 0..n_max {
        match renormalize(&t, &sys.lp) {
            Ok(next) => {
                let d = next.cr_distance(&sys.t0, 1).unwrap_or(f64::INFINITY);
                last_u = affine_coordinates(sys, &next).1;
                if !(d <= p.escape_radius) {
                    return (k, last_u);
                }
                t = next;
            }
            Err(_) => return (k, last_u),
        }
    }
    (n_max, last_u)
}

fn solve_newton(
    sys: &System,
    p: &ShadowingProblem,
    u0: &DVector<f64>,
    n: usize,
    model: &DMatrix<f64>,
    cfg: &ShootConfig,
) -> Result<(DVector<f64>, usize, f64)> {
    let ku = u0.len();
    let mut u = u0.clone();
    let mut f = residual(sys, p, &u, n)?;
    let floor = 1e-15;
    let precond = model.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(ku, ku) / model.norm().max(1e-300));
    let mut its = 0;
    for _ in 0..cfg.newton_max_iter {
        if f.norm() <= floor {
            break;
        }
        its += 1;
        // Directions with unit-scale response: columns of `Mₙ⁻¹`.
        let mut jac = DMatrix::zeros(ku, ku);
        for k in 0..ku {
            let dir = precond.column(k) * cfg.fd_target;
            let up = &u + &dir;
            let um = &u - &dir;
            match (residual(sys, p, &up, n), residual(sys, p, &um, n)) {
                (Ok(fp), Ok(fm)) => jac.set_column(k, &((fp - fm) / (2.0 * cfg.fd_target))),
                _ => jac.set_column(k, &(model * precond.column(k))),
            }
        }
        let y = match jac.clone().lu().solve(&(-&f)) {
            Some(s) => s,
            None => crate::linalg::lstsq(&jac, &(-&f)),
        };
        let step = &precond * y;
        let mut a = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let trial = &u + &step * a;
            if let Ok(ft) = residual(sys, p, &trial, n) {
                if ft.norm() < f.norm() {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            a *= 0.5;
        }
        match accepted {
            Some((nu, nf)) => {
                let moved = (&nu - &u).norm();
                u = nu;
                f = nf;
                if moved <= 1e-16 * (1.0 + u.norm()) {
                    break;
                }
            }
            None => break,
        }
    }
    let r = f.norm();
    Ok((u, its, r))
}

fn solve_bisection(
    sys: &System,
    p: &ShadowingProblem,
    center: f64,
    width: f64,
    n: usize,
    cfg: &ShootConfig,
    trace: &mut Vec<(f64, usize)>,
) -> Result<(DVector<f64>, usize, f64)> {
    let side = |u: f64, trace: &mut Vec<(f64, usize)>| -> f64 {
        let uv = DVector::from_element(1, u);
        let (depth, last) = escape_depth(sys, p, &uv, n);
        trace.push((u, depth));
        if depth >= n {
            residual(sys, p, &uv, n).map(|r| r[0]).unwrap_or(last[0])
        } else {
            last[0]
        }
    };
    let mut lo = center - width;
    let mut hi = center + width;
    let mut flo = side(lo, trace);
    let mut fhi = side(hi, trace);
    let mut grow = 0;
    while flo.signum() == fhi.signum() && grow < 20 {
        lo = center - (hi - center) * 2.0;
        hi = center + (hi - center) * 2.0;
        flo = side(lo, trace);
        fhi = side(hi, trace);
        grow += 1;
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoShadow { best_depth: trace.iter().map(|t| t.1).max().unwrap_or(0) });
    }
    let mut its = 0;
    for _ in 0..cfg.bisection_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        its += 1;
        let fm = side(mid, trace);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let u = DVector::from_element(1, 0.5 * (lo + hi));
    let r = residual(sys, p, &u, n).map(|r| r.norm()).unwrap_or(f64::INFINITY);
    Ok((u, its, r))
}

fn solve_box(
    sys: &System,
    p: &ShadowingProblem,
    u0: &DVector<f64>,
    n: usize,
    model_n: &DMatrix<f64>,
    cfg: &ShootConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(DVector<f64>, usize, f64)> {
    let ku = u0.len();
    let score = |u: &DVector<f64>| -> (usize, f64) {
        let (depth, _) = escape_depth(sys, p, u, n);
        let r = if depth >= n { residual(sys, p, u, n).map(|r| r.norm()).unwrap_or(f64::INFINITY) } else { f64::INFINITY };
        (depth, r)
    };
    let better = |a: (usize, f64), b: (usize, f64)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
    let mut best = u0.clone();
    let mut best_score = score(&best);
    let mut half: Vec<f64> = (0..ku).map(|k| p.escape_radius / model_n.column(k).norm().max(1e-300)).collect();
    let mut evals = 0;
    for _ in 0..cfg.box_rounds {
        let mut improved = false;
        for _ in 0..cfg.box_samples {
            let cand = DVector::from_fn(ku, |k, _| best[k] + half[k] * rng.gen_range(-1.0..1.0));
            let sc = score(&cand);
            evals += 1;
            if better(sc, best_score) {
                best = cand;
                best_score = sc;
                improved = true;
            }
        }
        if !improved {
            for h in half.iter_mut() {
                *h *= 0.5;
            }
        }
        if best_score.0 >= n && best_score.1 <= 1e-12 {
            break;
        }
    }
    if best_score.0 < n {
        return Err(Error::NoShadow { best_depth: best_score.0 });
    }
    Ok((best, evals, best_score.1))
}

/// Shoots for `u*` such that the orbit of `(s, u*, h)` stays within the escape radius up to `n_max`.
pub fn shoot(sys: &System, p: &ShadowingProblem, cfg: &ShootConfig) -> Result<ShadowingResult> {
    let ku = sys.splitting.dim_unstable();
    let model = unstable_linear_model(sys);
    let strategy = match cfg.strategy {
        Strategy::Auto if ku == 1 => Strategy::Bisection,
        Strategy::Auto => Strategy::Newton,
        s => s,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let size = p.s.iter().map(|x| x.abs()).fold(0.0, f64::max).max(p.profiles.iter().map(|m| m.cr_norm(1)).fold(0.0, f64::max));
    let mut u = DVector::zeros(ku);
    let mut corrections = Vec::new();
    let mut iterations = Vec::new();
    let mut residuals = Vec::new();
    let mut resolutions = Vec::new();
    let mut fallback_used = Vec::new();
    let mut trace = Vec::new();
    let mut depth = 0;
    let mut model_n = DMatrix::identity(ku, ku);
    for n in 1..=p.n_max {
        model_n = &model * &model_n;
        let primary = match strategy {
            Strategy::Newton | Strategy::Auto => solve_newton(sys, p, &u, n, &model_n, cfg),
            Strategy::Bisection => {
                if ku != 1 {
                    return Err(Error::InvalidInput("bisection needs a one-dimensional unstable space".into()));
                }
                let prev = corrections.last().copied().unwrap_or(0.0f64);
                let width = (cfg.search_box * size).max(4.0 * prev).max(1e-14);
                trace.clear();
                solve_bisection(sys, p, u[0], width, n, cfg, &mut trace)
            }
            Strategy::BoxSearch => solve_box(sys, p, &u, n, &model_n, cfg, &mut rng),
        };
        let ok = |r: &Result<(DVector<f64>, usize, f64)>| match r {
            Ok((cand, _, _)) => escape_depth(sys, p, cand, n).0 >= n,
            Err(_) => false,
        };
        let mut used_fallback = false;
        let accepted = if ok(&primary) {
            primary
        } else if cfg.fallback && strategy != Strategy::BoxSearch {
            used_fallback = true;
            let start = match &primary {
                Ok((c, _, _)) => c.clone(),
                Err(_) => u.clone(),
            };
            let fb = solve_box(sys, p, &start, n, &model_n, cfg, &mut rng);
            if ok(&fb) {
                fb
            } else {
                break;
            }
        } else {
            break;
        };
        let (nu, its, res) = accepted?;
        corrections.push((&nu - &u).norm());
        iterations.push(its);
        residuals.push(res);
        let sigma_min = model_n.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        resolutions.push(res / sigma_min);
        fallback_used.push(used_fallback);
        u = nu;
        depth = n;
    }
    if depth < p.n_max {
        return Err(Error::NoShadow { best_depth: depth });
    }
    let t = p.map(sys, &u)?;
    let (levels_g, _) = renormalize_n(&t, &sys.lp, depth)?;
    let mut levels = Vec::with_capacity(depth + 1);
    for (k, g) in levels_g.iter().enumerate() {
        let (s, uu) = affine_coordinates(sys, g);
        levels.push(LevelRecord {
            level: k,
            c0: g.cr_distance(&sys.t0, 0)?,
            c1: g.cr_distance(&sys.t0, 1)?,
            d_eta: g.eta_distance(&sys.t0)?,
            s_norm: s.norm(),
            u_norm: uu.norm(),
            total_nonlinearity: g.total_nonlinearity(),
        });
    }
    let k1 = levels.iter().map(|l| l.c1).fold(0.0, f64::max);
    let resolved = corrections
        .iter()
        .zip(&resolutions)
        .take_while(|(v, r)| **v > cfg.correction_floor && **v > **r)
        .count();
    let correction_ratios: Vec<f64> = corrections[..resolved].windows(2).map(|w| w[1] / w[0]).collect();
    // Past the minimum the orbit is dominated by amplified rounding.
    let fit_end = levels
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.c1.total_cmp(&b.1.c1))
        .map(|(k, _)| k)
        .unwrap_or(depth)
        .max(depth.min(2));
    let lv: Vec<f64> = levels[..=fit_end].iter().map(|l| l.level as f64).collect();
    let c1: Vec<f64> = levels[..=fit_end].iter().map(|l| l.c1).collect();
    let c1_fit = rate_fit(&lv, &c1);
    let cn: Vec<f64> = (1..=resolved).map(|k| k as f64).collect();
    let correction_fit = rate_fit(&cn, &corrections[..resolved]);
    Ok(ShadowingResult {
        u_star: u.iter().copied().collect(),
        strategy,
        achieved_depth: depth,
        levels,
        corrections,
        correction_ratios,
        iterations,
        residuals,
        resolutions,
        fallback_used,
        bisection_trace: trace,
        k1,
        lambda2_inverse: 1.0 / weakest_expansion(sys),
        c1_fit_end: fit_end,
        c1_fit,
        correction_fit,
    })
}
