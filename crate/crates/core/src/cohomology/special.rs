//! Special times: `Tⁿ(x)` as a walk through the return maps `RⁱT`, each used at most `M` times.

use crate::combinatorics::RauzyLoop;
use crate::error::{Error, Result};
use crate::giet::Giet;
use crate::renorm::{heights, renormalize_n};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// `RⁱT` for `i ≤ k`, with the scales `xᵢ = |Iᵢ|` and return times `lⁱⱼ`.
#[derive(Clone, Debug)]
pub struct LevelStack {
    pub levels: Vec<Giet>,
    pub scales: Vec<f64>,
    pub heights: Vec<Vec<u64>>,
    /// Largest row sum of the loop matrix, the bound on every coefficient.
    pub max_return: u64,
}

impl LevelStack {
    pub fn new(t: &Giet, lp: &RauzyLoop, depth: usize) -> Result<Self> {
        let (levels, scales) = renormalize_n(t, lp, depth)?;
        let heights = (0..=depth).map(|i| heights(lp, i)).collect::<Result<Vec<_>>>()?;
        let max_return = lp.matrix().max_row_sum().to_u64().unwrap_or(u64::MAX);
        Ok(LevelStack { levels, scales, heights, max_return })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// One step of the first return map to `Iᵢ` at `y ∈ Iᵢ`: `(image, return time, log derivative)`.
    fn step(&self, i: usize, y: f64) -> (f64, u64, f64) {
        let x = self.scales[i];
        let z = (y / x).clamp(0.0, 1.0);
        let g = &self.levels[i];
        let (zn, j) = g.eval(z);
        let d1 = g.branch_jet(j, z).d1;
        (zn * x, self.heights[i][j], d1.ln())
    }

    fn return_time(&self, i: usize, y: f64) -> u64 {
        let z = (y / self.scales[i]).clamp(0.0, 1.0);
        self.heights[i][self.levels[i].branch_of(z)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecialDecomposition {
    pub n: u64,
    pub x: f64,
    /// Steps of `RⁱT` while climbing, `i = 0, 1, …, top`.
    pub ascent: Vec<u64>,
    /// Steps of `RⁱT` while descending, `i = top−1, …, 0`.
    pub descent: Vec<u64>,
    /// Points visited, starting at `x`.
    pub points: Vec<f64>,
    pub value: f64,
    /// `Sₙ log DT (x)` accumulated from the derivatives of the return maps.
    pub log_derivative_sum: f64,
}

impl SpecialDecomposition {
    pub fn coefficients(&self) -> impl Iterator<Item = u64> + '_ {
        self.ascent.iter().chain(&self.descent).copied()
    }

    pub fn max_coefficient(&self) -> u64 {
        self.coefficients().max().unwrap_or(0)
    }
}

/// Decomposes `Tⁿ(x)` through the levels `≤ depth`.
pub fn special_birkhoff_decomposition(t: &Giet, lp: &RauzyLoop, n: u64, x: f64, depth: usize) -> Result<SpecialDecomposition> {
    decompose(&LevelStack::new(t, lp, depth)?, n, x)
}

pub fn decompose(stack: &LevelStack, n: u64, x: f64) -> Result<SpecialDecomposition> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!("x = {x} outside [0,1]")));
    }
    let k = stack.depth();
    let mut y = x;
    let mut r = n;
    let mut ascent = Vec::new();
    let mut descent = Vec::new();
    let mut points = vec![x];
    let mut logd = 0.0;
    let mut level = 0;
    'up: loop {
        let mut count = 0;
        loop {
            if level < k && y < stack.scales[level + 1] {
                break;
            }
            if r < stack.return_time(level, y) {
                ascent.push(count);
                break 'up;
            }
            let (ny, h, l) = stack.step(level, y);
            y = ny;
            r -= h;
            logd += l;
            count += 1;
            points.push(y);
            if count > stack.max_return {
                return Err(Error::Budget { needed: count as u128, allowed: stack.max_return as u128 });
            }
        }
        ascent.push(count);
        level += 1;
    }
    for m in (0..level).rev() {
        let mut count = 0;
        while r > 0 {
            if r < stack.return_time(m, y) {
                break;
            }
            let (ny, h, l) = stack.step(m, y);
            y = ny;
            r -= h;
            logd += l;
            count += 1;
            points.push(y);
        }
        descent.push(count);
    }
    if r != 0 {
        return Err(Error::Consistency(format!("special-time walk left {r} steps")));
    }
    Ok(SpecialDecomposition { n, x, ascent, descent, points, value: y, log_derivative_sum: logd })
}

/// `Tⁿ(x)` and `Sₙ log DT(x)` by direct iteration.
pub fn direct_orbit(t: &Giet, n: u64, x: f64) -> (f64, f64) {
    let mut y = x;
    let mut s = 0.0;
    for _ in 0..n {
        let j = t.jet(y);
        s += j.d1.ln();
        y = j.v;
    }
    (y, s)
}
