//! Cross-validation of the resampled backend against [`OrbitOracle`].

use super::partition::OrbitOracle;
use super::step::renormalize_n;
use crate::combinatorics::RauzyLoop;
use crate::error::Result;
use crate::fit::{line_fit, LineFit};
use crate::giet::Giet;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationLevel {
    pub level: usize,
    /// `max |orbit_eval − resampled eval|`.
    pub max_error: f64,
    /// `ε lⁿ / xₙ`: rounding accumulated along the longest orbit, rescaled.
    pub roundoff: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossValidation {
    pub grid_step: f64,
    pub levels: Vec<CrossValidationLevel>,
}

impl CrossValidation {
    pub fn max_error(&self) -> f64 {
        self.levels.iter().map(|l| l.max_error).fold(0.0, f64::max)
    }
}

/// Both backends at levels `1..=n_max`, `points` stratified points per branch.
pub fn cross_validate(t: &Giet, lp: &RauzyLoop, n_max: usize, points: usize, budget: u128) -> Result<CrossValidation> {
    let (levels, _) = renormalize_n(t, lp, n_max)?;
    let grid_step = t.profiles().iter().map(|p| p.grid().max_step()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(n_max);
    for (n, g) in levels.iter().enumerate().skip(1) {
        let oracle = OrbitOracle::new(t, lp, n, budget)?;
        let mut max_error = 0.0f64;
        for j in 0..g.d() {
            let (a, b) = g.domain(j);
            for k in 0..points {
                let x = a + (b - a) * (k as f64 + 0.5) / points as f64;
                max_error = max_error.max((oracle.eval(t, j, x) - g.branch_value(j, x)).abs());
            }
        }
        let longest = oracle.heights.iter().copied().max().unwrap_or(1) as f64;
        let roundoff = f64::EPSILON * longest / oracle.x_n;
        out.push(CrossValidationLevel { level: n, max_error, roundoff, points: points * g.d() });
    }
    Ok(CrossValidation { grid_step, levels: out })
}

/// Per-level bound `safety · (Cₙ h⁴ + roundoffₙ)` with `Cₙ` fitted on the coarser grids,
/// checked on the finest grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InterpolationBound {
    pub steps: Vec<f64>,
    pub levels: Vec<usize>,
    /// `Cₙ`.
    pub constants: Vec<f64>,
    pub bounds: Vec<f64>,
    pub finest_errors: Vec<f64>,
    /// Log-log fit of the worst error against the grid step.
    pub order_fit: Option<LineFit>,
    pub pass: bool,
}

pub const INTERPOLATION_ORDER: i32 = 4;

pub fn interpolation_bound(runs: &[CrossValidation], safety: f64) -> InterpolationBound {
    let mut runs: Vec<&CrossValidation> = runs.iter().collect();
    runs.sort_by(|a, b| b.grid_step.total_cmp(&a.grid_step));
    let steps: Vec<f64> = runs.iter().map(|r| r.grid_step).collect();
    let Some((finest, coarse)) = runs.split_last() else {
        return InterpolationBound {
            steps,
            levels: vec![],
            constants: vec![],
            bounds: vec![],
            finest_errors: vec![],
            order_fit: None,
            pass: false,
        };
    };
    let h = finest.grid_step;
    let mut levels = Vec::new();
    let mut constants = Vec::new();
    let mut bounds = Vec::new();
    let mut finest_errors = Vec::new();
    for (k, lv) in finest.levels.iter().enumerate() {
        let c = coarse
            .iter()
            .filter_map(|r| r.levels.get(k).map(|l| (l.max_error - l.roundoff).max(0.0) / r.grid_step.powi(INTERPOLATION_ORDER)))
            .fold(0.0, f64::max);
        levels.push(lv.level);
        constants.push(c);
        bounds.push(safety * (c * h.powi(INTERPOLATION_ORDER) + lv.roundoff));
        finest_errors.push(lv.max_error);
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        runs.iter().filter(|r| r.max_error() > 0.0).map(|r| (r.grid_step.ln(), r.max_error().ln())).unzip();
    let pass = !coarse.is_empty() && finest_errors.iter().zip(&bounds).all(|(e, b)| e <= b);
    InterpolationBound { steps, levels, constants, bounds, finest_errors, order_fit: line_fit(&lx, &ly), pass }
}
