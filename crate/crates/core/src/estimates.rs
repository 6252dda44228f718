//! Executable versions of the distortion, C¹, C² and `Dη` estimates along towers,
//! the composition formulas behind them, and the empirical `η`-Lipschitz constant of `R_P`.
//!
//! The level-`n` profiles are evaluated as exact compositions of normalised branch
//! restrictions `N(S_k)` along each tower, without resampling.

use crate::combinatorics::RauzyLoop;
use crate::error::{Error, Result};
use crate::fit::{rate_fit, RateFit};
use crate::giet::map::sample_points;
use crate::giet::perturb::Bump;
use crate::giet::{Giet, Jet, MonotoneMap};
use crate::renorm::partition::{walk_towers, DEFAULT_ATOM_BUDGET, PARTITION_SLACK};
use crate::renorm::renormalize;
use crate::systems::System;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative slack in the pass criterion `margin ≥ −tol`.
pub const REPORTING_TOLERANCE: f64 = 1e-12;

/// Where a bound is (nearly) attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub level: usize,
    /// Tower or branch index.
    pub index: usize,
    /// Point in `[0,1]` (profile coordinate) or in the domain of `T`.
    pub point: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub checker: String,
    pub level: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Measured constant, when the inequality has one (`M`, `M′`, ...).
    pub constant: Option<f64>,
    pub witnesses: Vec<Witness>,
    pub pass: bool,
}

impl BoundReport {
    pub fn new(checker: &str, level: usize, lhs: f64, rhs: f64, constant: Option<f64>, witnesses: Vec<Witness>) -> Self {
        let margin = rhs - lhs;
        let pass = margin >= -REPORTING_TOLERANCE * (1.0 + rhs.abs()) && lhs.is_finite();
        BoundReport { checker: checker.to_string(), level, lhs, rhs, margin, constant, witnesses, pass }
    }

    pub const CSV_HEADER: &'static str = "checker,level,lhs,rhs,margin,constant,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.14e},{:.14e},{:.14e},{},{}",
            self.checker,
            self.level,
            self.lhs,
            self.rhs,
            self.margin,
            self.constant.map(|c| format!("{c:.14e}")).unwrap_or_default(),
            self.pass
        )
    }
}

/// Sup-norm data of `T` sampled on every branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapNorms {
    pub d1_min: f64,
    pub d1_max: f64,
    pub d2: f64,
    pub d3: f64,
    pub eta: f64,
    pub deta: f64,
    /// `∫₀¹ |η_T|`.
    pub abs_eta_integral: f64,
    /// Largest profile grid step.
    pub grid_step: f64,
    pub samples: usize,
}

impl MapNorms {
    /// `‖(T⁻¹)'‖ = 1 / min T'`.
    pub fn inverse_d1(&self) -> f64 {
        1.0 / self.d1_min
    }
}

/// Norms over grid nodes, cell midpoints and `random` extra points spread over the branches.
pub fn map_norms(t: &Giet, random: usize, seed: u64) -> MapNorms {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<(usize, f64)> = Vec::new();
    let mut grid_step = 0.0f64;
    for i in 0..t.d() {
        let p = t.profile(i);
        grid_step = grid_step.max(p.grid().max_step());
        pts.extend(sample_points(p.grid()).into_iter().map(|s| (i, s)));
    }
    for _ in 0..random {
        let x: f64 = rng.gen_range(0.0..1.0);
        let i = t.branch_of(x);
        let (a, b) = t.domain(i);
        pts.push((i, ((x - a) / (b - a)).clamp(0.0, 1.0)));
    }
    let mut n = MapNorms {
        d1_min: f64::INFINITY,
        d1_max: 0.0,
        d2: 0.0,
        d3: 0.0,
        eta: 0.0,
        deta: 0.0,
        abs_eta_integral: t.total_abs_nonlinearity(),
        grid_step,
        samples: pts.len(),
    };
    for &(i, s) in &pts {
        let (a, b) = t.domain(i);
        let j = t.branch_jet(i, a + (b - a) * s);
        n.d1_min = n.d1_min.min(j.d1);
        n.d1_max = n.d1_max.max(j.d1);
        n.d2 = n.d2.max(j.d2.abs());
        n.d3 = n.d3.max(j.d3.abs());
        n.eta = n.eta.max(j.eta().abs());
        n.deta = n.deta.max(j.deta().abs());
    }
    n
}

/// Distortion of `Tⁿ` on `J = [a, b]`.
///
/// Checks that `J, T(J), …, Tⁿ(J)` are pairwise disjoint and free of break points, then
/// compares `max DTⁿ(x)/DTⁿ(y)` over `samples` points of `J` with `exp(∫|η_T|)`.
pub fn distortion_check(t: &Giet, j: (f64, f64), n: usize, samples: usize) -> Result<BoundReport> {
    let (a, b) = j;
    if !(b > a) || a < 0.0 || b > 1.0 {
        return Err(Error::InvalidInput(format!("bad interval [{a}, {b}]")));
    }
    let mut ivs = Vec::with_capacity(n + 1);
    let mut branches = Vec::with_capacity(n);
    let (mut s, mut len) = (a, b - a);
    for k in 0..=n {
        let i = t.branch_of(s + 0.5 * len);
        let (u, v) = t.domain(i);
        if s < u - PARTITION_SLACK || s + len > v + PARTITION_SLACK {
            return Err(Error::Hypothesis {
                iterate: k,
                reason: format!("T^{k}(J) = [{s}, {}] contains a break point of branch {i}", s + len),
            });
        }
        ivs.push((s, s + len, k));
        if k < n {
            branches.push(i);
            let (ns, nl) = t.branch_image_interval(i, s.max(u), len);
            s = ns;
            len = nl;
        }
    }
    let mut sorted = ivs.clone();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    for w in sorted.windows(2) {
        if w[1].0 < w[0].1 - PARTITION_SLACK {
            return Err(Error::Hypothesis {
                iterate: w[0].2.max(w[1].2),
                reason: format!("T^{}(J) and T^{}(J) overlap", w[0].2, w[1].2),
            });
        }
    }
    let m = samples.max(2);
    let logs: Vec<(f64, f64)> = (0..m)
        .map(|q| {
            let x0 = a + (b - a) * q as f64 / (m - 1) as f64;
            let mut x = x0;
            let mut acc = 0.0;
            for &i in &branches {
                let jt = t.branch_jet(i, x);
                acc += jt.d1.ln();
                x = jt.v;
            }
            (x0, acc)
        })
        .collect();
    let (xmax, lmax) = logs.iter().copied().fold((a, f64::NEG_INFINITY), |p, q| if q.1 > p.1 { q } else { p });
    let (xmin, lmin) = logs.iter().copied().fold((a, f64::INFINITY), |p, q| if q.1 < p.1 { q } else { p });
    let lhs = (lmax - lmin).exp();
    let rhs = t.total_abs_nonlinearity().exp();
    let wit = vec![Witness { level: n, index: 0, point: xmax }, Witness { level: n, index: 0, point: xmin }];
    Ok(BoundReport::new("distortion", n, lhs, rhs, None, wit))
}

/// One floor `T^k(I^j_n)` of a tower and the branch of `T` used on it.
#[derive(Clone, Copy, Debug)]
struct Floor {
    start: f64,
    len: f64,
    branch: usize,
    image_len: f64,
}

fn tower_chains(t: &Giet, lp: &RauzyLoop, n: usize, budget: u128) -> Result<Vec<Vec<Floor>>> {
    let mut chains: Vec<Vec<Floor>> = vec![Vec::new(); t.d()];
    walk_towers(t, lp, n, budget, |a| {
        let i = t.branch_of(a.start + 0.5 * a.len());
        let (u, _) = t.domain(i);
        let (_, image_len) = t.branch_image_interval(i, a.start.max(u), a.len());
        chains[a.tower].push(Floor { start: a.start.max(u), len: a.len(), branch: i, image_len });
    })?;
    Ok(chains)
}

/// Jet of `N(S)` at `s ∈ [0,1]` for the restriction `S` of `T` to a floor.
#[inline]
fn factor_jet(t: &Giet, f: &Floor, s: f64) -> Jet {
    let j = t.branch_jet(f.branch, f.start + s * f.len);
    let v = if s <= 0.0 { 0.0 } else { t.branch_image_interval(f.branch, f.start, s * f.len).1 / f.image_len };
    let r = f.len / f.image_len;
    Jet { v, d1: j.d1 * r, d2: j.d2 * r * f.len, d3: j.d3 * r * f.len * f.len }
}

/// Something with a third-order jet on `[0,1]`.
pub trait JetMap {
    fn jet_at(&self, x: f64) -> Jet;
}

impl JetMap for MonotoneMap {
    fn jet_at(&self, x: f64) -> Jet {
        self.jet(x)
    }
}

impl JetMap for Bump {
    fn jet_at(&self, x: f64) -> Jet {
        self.jet(x)
    }
}

/// The composition `fₙ = φₙ ∘ … ∘ φ₁` at one point, by the chain rule and by the expansion formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionSample {
    pub x: f64,
    pub direct: Jet,
    /// `Σₘ (f'ₘ)² · φ''ₘ₊₁(fₘ) · (φₙ ∘ … ∘ φₘ₊₂)'(fₘ₊₁)`.
    pub d2_formula: f64,
    /// `Σₖ log φ'ₖ(ψₖ₋₁)`.
    pub log_d1_formula: f64,
    /// `Σₖ η(φₖ)(ψₖ₋₁) · ψ'ₖ₋₁`.
    pub eta_formula: f64,
    /// `Σₖ Dη(φₖ)(ψₖ₋₁) · (ψ'ₖ₋₁)² + η(φₖ)(ψₖ₋₁) · ψ''ₖ₋₁`.
    pub deta_formula: f64,
}

impl CompositionSample {
    /// Largest relative discrepancy between the formulas and the chain rule.
    pub fn max_relative_error(&self) -> f64 {
        let d = self.direct;
        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
        rel(self.d2_formula, d.d2)
            .max(rel(self.log_d1_formula, d.d1.ln()))
            .max(rel(self.eta_formula, d.eta()))
            .max(rel(self.deta_formula, d.deta()))
    }
}

fn compose_sample(x: f64, factor: impl Fn(usize, f64) -> Jet, n: usize) -> CompositionSample {
    // prefix[k] = jet of ψₖ = φₖ ∘ … ∘ φ₁ at x; fac[k] = jet of φₖ₊₁ at ψₖ(x).
    let mut prefix = Vec::with_capacity(n + 1);
    let mut fac = Vec::with_capacity(n);
    let mut cur = Jet::identity(x);
    prefix.push(cur);
    for k in 0..n {
        let f = factor(k, cur.v);
        fac.push(f);
        cur = Jet::compose(f, cur);
        prefix.push(cur);
    }
    let mut d2_formula = 0.0;
    let mut suffix = 1.0;
    let mut log_d1_formula = 0.0;
    let mut eta_formula = 0.0;
    let mut deta_formula = 0.0;
    for m in (0..n).rev() {
        let p = prefix[m];
        let f = fac[m];
        d2_formula += p.d1 * p.d1 * f.d2 * suffix;
        suffix *= f.d1;
        log_d1_formula += f.d1.ln();
        eta_formula += f.eta() * p.d1;
        deta_formula += f.deta() * p.d1 * p.d1 + f.eta() * p.d2;
    }
    CompositionSample { x, direct: cur, d2_formula, log_d1_formula, eta_formula, deta_formula }
}

/// `fₙ''` of `φₙ ∘ … ∘ φ₁` at `points`, by the expansion formula and by the chain rule.
pub fn second_derivative_composition<M: JetMap + Sync>(phis: &[M], points: &[f64]) -> Vec<CompositionSample> {
    composition_samples(phis, points)
}

/// `log D`, `η` and `Dη` of `φₙ ∘ … ∘ φ₁` at `points`, by the three expansion formulas and by the chain rule.
pub fn eta_derivative_composition<M: JetMap + Sync>(phis: &[M], points: &[f64]) -> Vec<CompositionSample> {
    composition_samples(phis, points)
}

fn composition_samples<M: JetMap + Sync>(phis: &[M], points: &[f64]) -> Vec<CompositionSample> {
    points.par_iter().map(|&x| compose_sample(x, |k, y| phis[k].jet_at(y), phis.len())).collect()
}

/// Sampling options for the tower-based checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateConfig {
    /// Points per level-`n` profile.
    pub chain_samples: usize,
    /// Off-grid points for the norms of `T`.
    pub random_samples: usize,
    pub seed: u64,
    pub atom_budget: u128,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig { chain_samples: 33, random_samples: 1000, seed: 0, atom_budget: DEFAULT_ATOM_BUDGET }
    }
}

/// Sup data of one level-`n` profile `φ = N(T^l | I^j_n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerProfile {
    pub tower: usize,
    pub height: usize,
    pub c0: f64,
    pub c1: f64,
    pub d1_min: (f64, f64),
    pub d1_max: (f64, f64),
    pub d2: (f64, f64),
    pub deta: (f64, f64),
    /// `Σₖ |T^k(I)|`.
    pub sum_len: f64,
    /// `Σₖ |T^k(I)|²`.
    pub sum_len_sq: f64,
    /// Largest relative error of the expansion formulas against the chain rule.
    pub formula_error: f64,
}

/// Profiles of `Rⁿ T` as exact tower compositions.
pub fn tower_profiles(t: &Giet, lp: &RauzyLoop, n: usize, cfg: &EstimateConfig) -> Result<Vec<TowerProfile>> {
    let chains = tower_chains(t, lp, n, cfg.atom_budget)?;
    let m = cfg.chain_samples.max(2);
    let pts: Vec<f64> = (0..m).map(|q| q as f64 / (m - 1) as f64).collect();
    Ok(chains
        .iter()
        .enumerate()
        .map(|(j, ch)| {
            let samples: Vec<CompositionSample> =
                pts.par_iter().map(|&s| compose_sample(s, |k, y| factor_jet(t, &ch[k], y), ch.len())).collect();
            let mut tp = TowerProfile {
                tower: j,
                height: ch.len(),
                c0: 0.0,
                c1: 0.0,
                d1_min: (f64::INFINITY, 0.0),
                d1_max: (0.0, 0.0),
                d2: (0.0, 0.0),
                deta: (0.0, 0.0),
                sum_len: ch.iter().map(|f| f.len).sum(),
                sum_len_sq: ch.iter().map(|f| f.len * f.len).sum(),
                formula_error: 0.0,
            };
            for c in &samples {
                let d = c.direct;
                tp.c0 = tp.c0.max((d.v - c.x).abs());
                tp.c1 = tp.c1.max((d.v - c.x).abs()).max((d.d1 - 1.0).abs());
                if d.d1 < tp.d1_min.0 {
                    tp.d1_min = (d.d1, c.x);
                }
                if d.d1 > tp.d1_max.0 {
                    tp.d1_max = (d.d1, c.x);
                }
                if d.d2.abs() > tp.d2.0 {
                    tp.d2 = (d.d2.abs(), c.x);
                }
                if d.deta().abs() > tp.deta.0 {
                    tp.deta = (d.deta().abs(), c.x);
                }
                tp.formula_error = tp.formula_error.max(c.max_relative_error());
            }
            tp
        })
        .collect())
}

fn worst<'a>(items: impl Iterator<Item = (&'a TowerProfile, f64, f64)>) -> Option<(&'a TowerProfile, f64, f64)> {
    items.min_by(|a, b| (a.2 - a.1).total_cmp(&(b.2 - b.1)))
}

/// `DTˡ(x)/DTˡ(y) ≤ exp(∫|η_T|)` on every level-`n` tower.
pub fn tower_distortion_report(n: usize, towers: &[TowerProfile], norms: &MapNorms) -> BoundReport {
    let rhs = norms.abs_eta_integral.exp();
    let (tp, lhs, _) =
        worst(towers.iter().map(|p| (p, p.d1_max.0 / p.d1_min.0, rhs))).expect("at least one tower");
    let wit = vec![
        Witness { level: n, index: tp.tower, point: tp.d1_max.1 },
        Witness { level: n, index: tp.tower, point: tp.d1_min.1 },
    ];
    BoundReport::new("distortion", n, lhs, rhs, None, wit)
}

/// `Σⱼ ‖φⱼⁿ − id‖_{C¹} ≤ d (exp(∫|η_T|) − 1)`, with the measured `M = lhs / ‖π_P(T) − Id‖_{C²}`.
pub fn profile_c1_report(t: &Giet, n: usize, towers: &[TowerProfile], norms: &MapNorms) -> BoundReport {
    let lhs: f64 = towers.iter().map(|p| p.c1).sum();
    let rhs = t.d() as f64 * norms.abs_eta_integral.exp_m1();
    let base: f64 = t.profiles().iter().map(|p| p.cr_norm(2)).sum();
    let constant = if base > 0.0 { Some(lhs / base) } else { None };
    let tp = towers.iter().max_by(|a, b| a.c1.total_cmp(&b.c1)).expect("at least one tower");
    BoundReport::new("profile_c1", n, lhs, rhs, constant, vec![Witness { level: n, index: tp.tower, point: f64::NAN }])
}

/// `‖(φⱼⁿ)''‖ ≤ e^{3E} ‖(T⁻¹)'‖ ‖T''‖ Σₖ|T^k(I^j_n)|` with `E = ∫|η_T|`; the constant is `M′ = sup ‖φ''‖ / (‖(T⁻¹)'‖ ‖T''‖)`.
pub fn c2_report(n: usize, towers: &[TowerProfile], norms: &MapNorms) -> BoundReport {
    let e = norms.abs_eta_integral;
    let base = norms.inverse_d1() * norms.d2;
    let (tp, lhs, rhs) =
        worst(towers.iter().map(|p| (p, p.d2.0, (3.0 * e).exp() * base * p.sum_len))).expect("at least one tower");
    let sup = towers.iter().map(|p| p.d2.0).fold(0.0, f64::max);
    let constant = if base > 0.0 { Some(sup / base) } else { None };
    BoundReport::new("c2", n, lhs, rhs, constant, vec![Witness { level: n, index: tp.tower, point: tp.d2.1 }])
}

/// `‖Dη(φⱼⁿ)‖ ≤ e^{2E}‖Dη_T‖ Σₖ|T^kI|² + e^{3E}‖η_T‖ ‖(T⁻¹)'‖ ‖T''‖ (Σₖ|T^kI|)²`.
pub fn c3_report(n: usize, towers: &[TowerProfile], norms: &MapNorms) -> BoundReport {
    let e = norms.abs_eta_integral;
    let b2 = norms.inverse_d1() * norms.d2;
    let bound = |p: &TowerProfile| {
        (2.0 * e).exp() * norms.deta * p.sum_len_sq + (3.0 * e).exp() * norms.eta * b2 * p.sum_len * p.sum_len
    };
    let (tp, lhs, rhs) = worst(towers.iter().map(|p| (p, p.deta.0, bound(p)))).expect("at least one tower");
    let sup = towers.iter().map(|p| p.deta.0).fold(0.0, f64::max);
    let k = norms.d2.max(norms.d3);
    let constant = if k > 0.0 { Some(sup / k) } else { None };
    BoundReport::new("c3", n, lhs, rhs, constant, vec![Witness { level: n, index: tp.tower, point: tp.deta.1 }])
}

/// Agreement of the expansion formulas with the chain rule along the towers.
pub fn formula_report(n: usize, towers: &[TowerProfile], tol: f64) -> BoundReport {
    let (tp, lhs) = towers
        .iter()
        .map(|p| (p, p.formula_error))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one tower");
    BoundReport::new("formulas", n, lhs, tol, None, vec![Witness { level: n, index: tp.tower, point: f64::NAN }])
}

/// `profile_c1_report` at level `n`.
pub fn profile_c1_check(t: &Giet, lp: &RauzyLoop, n: usize) -> Result<BoundReport> {
    let cfg = EstimateConfig::default();
    let towers = tower_profiles(t, lp, n, &cfg)?;
    Ok(profile_c1_report(t, n, &towers, &map_norms(t, cfg.random_samples, cfg.seed)))
}

/// `c2_report` at level `n`.
pub fn c2_check(t: &Giet, lp: &RauzyLoop, n: usize) -> Result<BoundReport> {
    let cfg = EstimateConfig::default();
    let towers = tower_profiles(t, lp, n, &cfg)?;
    Ok(c2_report(n, &towers, &map_norms(t, cfg.random_samples, cfg.seed)))
}

/// `c3_report` at level `n`.
pub fn c3_check(t: &Giet, lp: &RauzyLoop, n: usize) -> Result<BoundReport> {
    let cfg = EstimateConfig::default();
    let towers = tower_profiles(t, lp, n, &cfg)?;
    Ok(c3_report(n, &towers, &map_norms(t, cfg.random_samples, cfg.seed)))
}

/// All tower checks for levels `0..=n_max`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateBattery {
    pub norms: MapNorms,
    pub reports: Vec<BoundReport>,
    /// Measured `sup_n` of each constant.
    pub sup_m: Option<f64>,
    pub sup_m_prime: Option<f64>,
    pub sup_k: Option<f64>,
}

impl EstimateBattery {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn by_checker(&self, name: &str) -> Vec<&BoundReport> {
        self.reports.iter().filter(|r| r.checker == name).collect()
    }
}

/// Tolerance for the expansion formulas along towers.
pub const FORMULA_TOLERANCE: f64 = 1e-7;

pub fn estimate_battery(t: &Giet, lp: &RauzyLoop, n_max: usize, cfg: &EstimateConfig) -> Result<EstimateBattery> {
    let norms = map_norms(t, cfg.random_samples, cfg.seed);
    let mut reports = Vec::new();
    for n in 0..=n_max {
        let towers = tower_profiles(t, lp, n, cfg)?;
        reports.push(tower_distortion_report(n, &towers, &norms));
        reports.push(profile_c1_report(t, n, &towers, &norms));
        reports.push(c2_report(n, &towers, &norms));
        reports.push(c3_report(n, &towers, &norms));
        reports.push(formula_report(n, &towers, FORMULA_TOLERANCE));
    }
    let sup = |name: &str| reports.iter().filter(|r| r.checker == name).filter_map(|r| r.constant).reduce(f64::max);
    Ok(EstimateBattery { norms, sup_m: sup("profile_c1"), sup_m_prime: sup("c2"), sup_k: sup("c3"), reports })
}

/// `sup_n ‖Dη(φⁿ)‖` over an amplitude ramp of conjugates `g_ε ∘ T₀ ∘ g_ε⁻¹`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmplitudeRamp {
    pub amplitudes: Vec<f64>,
    pub sup_deta: Vec<f64>,
    /// `max(‖T''‖, ‖T'''‖)` of each map.
    pub size: Vec<f64>,
    /// Strictly decreasing in `ε` (amplitudes sorted decreasingly).
    pub monotone: bool,
    /// Fit of `log sup` against `log ε`; `rate` is `e^{slope}`, so read `log_intercept` with the slope `ln rate`.
    pub fit: Option<RateFit>,
}

pub fn c3_amplitude_ramp(sys: &System, shape: &Bump, amplitudes: &[f64], n_max: usize, cfg: &EstimateConfig) -> Result<AmplitudeRamp> {
    let mut amps = amplitudes.to_vec();
    amps.sort_by(|a, b| b.total_cmp(a));
    let mut sup_deta = Vec::with_capacity(amps.len());
    let mut size = Vec::with_capacity(amps.len());
    for &eps in &amps {
        let g = shape.scaled(eps / shape.amplitude().max(1e-300)).map(&sys.grid)?;
        let t = sys.t0.conjugate_by(&g, &sys.grid)?;
        let norms = map_norms(&t, cfg.random_samples, cfg.seed);
        size.push(norms.d2.max(norms.d3));
        let mut s = 0.0f64;
        for n in 0..=n_max {
            for p in tower_profiles(&t, &sys.lp, n, cfg)? {
                s = s.max(p.deta.0);
            }
        }
        sup_deta.push(s);
    }
    let monotone = sup_deta.windows(2).all(|w| w[1] < w[0]);
    let logs: Vec<f64> = amps.iter().map(|a| a.ln()).collect();
    let fit = rate_fit(&logs, &sup_deta);
    Ok(AmplitudeRamp { amplitudes: amps, sup_deta, size, monotone, fit })
}

/// `d_η(R_P T₁, R_P T₂) / d_η(π_P T₁, π_P T₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub before: f64,
    pub after: f64,
    /// `None` when `T₁ = T₂` in the profile coordinates.
    pub ratio: Option<f64>,
}

impl LipschitzEstimate {
    pub fn is_defined(&self) -> bool {
        self.ratio.is_some()
    }
}

/// Affine parts closer than this count as equal.
pub const AFFINE_MATCH_TOLERANCE: f64 = 1e-14;

pub fn eta_lipschitz_estimate(t1: &Giet, t2: &Giet, lp: &RauzyLoop) -> Result<LipschitzEstimate> {
    if t1.permutation() != t2.permutation() {
        return Err(Error::InvalidInput("different permutations".into()));
    }
    let gap = t1.affine().distance(t2.affine());
    if gap > AFFINE_MATCH_TOLERANCE {
        return Err(Error::InvalidInput(format!("affine parts differ by {gap:e}")));
    }
    let before = t1.eta_distance(t2)?;
    let r1 = renormalize(t1, lp)?;
    let r2 = renormalize(t2, lp)?;
    let after = r1.eta_distance(&r2)?;
    let ratio = if before > 0.0 { Some(after / before) } else { None };
    Ok(LipschitzEstimate { before, after, ratio })
}

/// `max |η(a f) − η(f)|` and `max |η(f ∘ m_a) − a · η(f) ∘ m_a|` with `m_a(x) = a x`, over `points` in `[0, min(1, 1/a)]`.
pub fn scaling_law_errors<M: JetMap>(f: &M, a: f64, points: usize) -> (f64, f64) {
    let top = (1.0 / a).min(1.0);
    let m = points.max(2);
    let mut e1 = 0.0f64;
    let mut e2 = 0.0f64;
    for q in 0..m {
        let x = top * q as f64 / (m - 1) as f64;
        let j = f.jet_at(x);
        let scaled = j.post_affine(0.0, a);
        e1 = e1.max((scaled.eta() - j.eta()).abs());
        let y = a * x;
        let inner = f.jet_at(y);
        let comp = Jet::compose(inner, Jet::affine(x, 0.0, a));
        e2 = e2.max((comp.eta() - a * inner.eta()).abs());
    }
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::giet::perturb::BumpShape;
    use crate::giet::{moebius_jet, Grid};

    fn moebius_map(k: f64) -> impl JetMap {
        struct M(f64);
        impl JetMap for M {
            fn jet_at(&self, x: f64) -> Jet {
                moebius_jet(self.0, x)
            }
        }
        M(k)
    }

    #[test]
    fn identity_chain_has_zero_derivatives() {
        let g = Grid::uniform(17).unwrap();
        let ids = vec![MonotoneMap::identity(&g); 4];
        for s in eta_derivative_composition(&ids, &[0.0, 0.3, 1.0]) {
            assert_eq!(s.d2_formula, 0.0);
            assert_eq!(s.deta_formula, 0.0);
            assert_eq!(s.direct.d2, 0.0);
        }
    }

    #[test]
    fn moebius_chain_matches_closed_form() {
        // m_a ∘ m_b = m_{ab}; Dη(m_k)(x) = 2(1−k)² / (k + (1−k)x)².
        let ks = [0.9, 1.2, 0.7];
        let phis: Vec<_> = ks.iter().map(|&k| moebius_map(k)).collect();
        let k: f64 = ks.iter().product();
        for s in eta_derivative_composition(&phis, &[0.0, 0.25, 0.5, 0.9, 1.0]) {
            let den = k + (1.0 - k) * s.x;
            let deta = 2.0 * (1.0 - k) * (1.0 - k) / (den * den);
            let eta = -2.0 * (1.0 - k) / den;
            assert!((s.deta_formula - deta).abs() < 1e-12);
            assert!((s.eta_formula - eta).abs() < 1e-12);
            assert!(s.max_relative_error() < 1e-12);
        }
    }

    #[test]
    fn scaling_laws_exact_for_bumps() {
        let f = Bump::single(BumpShape::Sine(2), 0.2);
        for a in [0.1, 0.5, 3.0, 10.0] {
            let (e1, e2) = scaling_law_errors(&f, a, 50);
            assert!(e1 < 1e-10 && e2 < 1e-10, "{a} {e1} {e2}");
        }
    }

    #[test]
    fn aiet_towers_are_affine() {
        let sys = System::golden(33).unwrap();
        let cfg = EstimateConfig::default();
        let b = estimate_battery(&sys.t0, &sys.lp, 4, &cfg).unwrap();
        assert!(b.all_pass());
        for r in &b.reports {
            if r.checker != "formulas" {
                assert!(r.lhs <= 1.0 + 1e-12, "{r:?}");
            }
        }
    }
}
