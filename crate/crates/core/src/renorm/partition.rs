//! Dynamical partitions: towers over the level-`n` return intervals.

use super::step::{exact_level_data, renormalize_n};
use crate::combinatorics::RauzyLoop;
use crate::error::{Error, Result};
use crate::giet::Giet;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// Slack for containment and break-point avoidance checks.
pub const PARTITION_SLACK: f64 = 1e-9;

/// Default cap on the number of atoms enumerated.
pub const DEFAULT_ATOM_BUDGET: u128 = 50_000_000;

/// One atom `T^k(I^j_n)` of a tower.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub start: f64,
    pub end: f64,
    pub tower: usize,
    pub floor: u64,
}

impl Atom {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Tower decomposition `𝒫ₙ` of `[0,1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DynamicalPartition {
    pub level: usize,
    /// Length of the level-`n` return interval `[0, x_n]`.
    pub x_n: f64,
    /// Base floors `I^j_n`.
    pub floors: Vec<(f64, f64)>,
    /// Heights `l^j_n`.
    pub heights: Vec<u64>,
    /// All atoms, sorted by `start`.
    pub atoms: Vec<Atom>,
    /// Largest atom length.
    pub delta: f64,
    /// Total measure of the atoms.
    pub measure: f64,
    /// Largest gap or overlap between consecutive atoms.
    pub max_defect: f64,
}

/// Summary without the atom list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub level: usize,
    pub x_n: f64,
    pub heights: Vec<u64>,
    pub delta: f64,
    pub measure: f64,
    pub atom_count: usize,
}

impl DynamicalPartition {
    pub fn summary(&self) -> PartitionSummary {
        PartitionSummary {
            level: self.level,
            x_n: self.x_n,
            heights: self.heights.clone(),
            delta: self.delta,
            measure: self.measure,
            atom_count: self.atoms.len(),
        }
    }

    /// Atoms of tower `j` in floor order.
    pub fn tower(&self, j: usize) -> Vec<Atom> {
        let mut v: Vec<Atom> = self.atoms.iter().copied().filter(|a| a.tower == j).collect();
        v.sort_by_key(|a| a.floor);
        v
    }

    /// Index of the atom containing `x` (half-open).
    pub fn locate(&self, x: f64) -> usize {
        match self.atoms.binary_search_by(|a| a.start.total_cmp(&x)) {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        }
    }

    /// Every atom of `finer` lies inside an atom of `self`, up to `slack`.
    pub fn is_refined_by(&self, finer: &DynamicalPartition, slack: f64) -> bool {
        finer.atoms.iter().all(|a| {
            let mid = 0.5 * (a.start + a.end);
            let c = &self.atoms[self.locate(mid)];
            a.start >= c.start - slack && a.end <= c.end + slack
        })
    }
}

/// Heights `l_n = Aⁿ 𝟙` of the level-`n` towers.
pub fn heights(lp: &RauzyLoop, n: usize) -> Result<Vec<u64>> {
    let a = lp.matrix().pow(n as u32);
    a.row_sums()
        .into_iter()
        .map(|h| h.to_u64().ok_or_else(|| Error::Budget { needed: u128::MAX, allowed: u64::MAX as u128 }))
        .collect()
}

/// The level-`n` dynamical partition of `t` along `lp`.
pub fn dynamical_partition(t: &Giet, lp: &RauzyLoop, n: usize) -> Result<DynamicalPartition> {
    dynamical_partition_with_budget(t, lp, n, DEFAULT_ATOM_BUDGET)
}

pub fn dynamical_partition_with_budget(t: &Giet, lp: &RauzyLoop, n: usize, budget: u128) -> Result<DynamicalPartition> {
    let mut atoms = Vec::new();
    let (x_n, floors, hs) = walk_towers(t, lp, n, budget, |a| atoms.push(a))?;
    atoms.sort_by(|p, q| p.start.total_cmp(&q.start));
    let delta = atoms.iter().map(|a| a.len()).fold(0.0, f64::max);
    let measure: f64 = atoms.iter().map(|a| a.len()).sum();
    let mut max_defect = atoms[0].start.abs().max((atoms[atoms.len() - 1].end - 1.0).abs());
    for w in atoms.windows(2) {
        max_defect = max_defect.max((w[1].start - w[0].end).abs());
    }
    Ok(DynamicalPartition { level: n, x_n, floors, heights: hs, atoms, delta, measure, max_defect })
}

/// `Δₙ` and the total measure of `𝒫ₙ` without storing the atoms.
pub fn partition_delta(t: &Giet, lp: &RauzyLoop, n: usize, budget: u128) -> Result<(f64, f64)> {
    let mut delta = 0.0f64;
    let mut measure = 0.0;
    walk_towers(t, lp, n, budget, |a| {
        delta = delta.max(a.len());
        measure += a.len();
    })?;
    Ok((delta, measure))
}

/// Visits every atom of `𝒫ₙ` tower by tower, checking the tower structure on the way.
pub fn walk_towers(
    t: &Giet,
    lp: &RauzyLoop,
    n: usize,
    budget: u128,
    mut visit: impl FnMut(Atom),
) -> Result<(f64, Vec<(f64, f64)>, Vec<u64>)> {
    let hs = heights(lp, n)?;
    let total: u128 = hs.iter().map(|&h| h as u128).sum();
    if total > budget {
        return Err(Error::Budget { needed: total, allowed: budget });
    }
    let (x_n, starts) = level_geometry(t, lp, n)?;
    let floors: Vec<(f64, f64)> = (0..t.d()).map(|j| (x_n * starts[j], x_n * starts[j + 1])).collect();
    for (j, &(a0, b0)) in floors.iter().enumerate() {
        let (mut a, mut len) = (a0, b0 - a0);
        for k in 0..hs[j] {
            visit(Atom { start: a, end: a + len, tower: j, floor: k });
            let i = t.branch_of(a + 0.5 * len);
            let (u, v) = t.domain(i);
            if a < u - PARTITION_SLACK || a + len > v + PARTITION_SLACK {
                return Err(Error::Consistency(format!(
                    "tower {j} floor {k} = [{a}, {}] straddles a break point of branch {i} = [{u}, {v}]",
                    a + len
                )));
            }
            let (na, nl) = t.branch_image_interval(i, a.max(u), len);
            a = na;
            len = nl;
            if k + 1 < hs[j] && a < x_n - PARTITION_SLACK {
                return Err(Error::Consistency(format!("tower {j} returns early at floor {}", k + 1)));
            }
        }
        if a + len > x_n + PARTITION_SLACK {
            return Err(Error::Consistency(format!("tower {j} does not return to [0, x_n] after {} floors", hs[j])));
        }
    }
    Ok((x_n, floors, hs))
}

/// `x_n` and the normalised branch starts of `Rⁿ T`, from the resampled backend.
fn level_geometry(t: &Giet, lp: &RauzyLoop, n: usize) -> Result<(f64, Vec<f64>)> {
    if n == 0 {
        return Ok((1.0, t.top_starts().to_vec()));
    }
    if t.is_aiet() {
        return exact_level_data(t, lp, n);
    }
    let (levels, xs) = renormalize_n(t, lp, n)?;
    Ok((xs[n], levels[n].top_starts().to_vec()))
}

/// Geometric intersection counts: `a_ij` = number of floors of tower `i` at level `n` inside `I^j_0`.
pub fn geometric_counts(t: &Giet, lp: &RauzyLoop, n: usize) -> Result<Vec<Vec<u64>>> {
    let p = dynamical_partition(t, lp, n)?;
    let d = t.d();
    let mut counts = vec![vec![0u64; d]; d];
    for a in &p.atoms {
        let j = t.branch_of(0.5 * (a.start + a.end));
        counts[a.tower][j] += 1;
    }
    Ok(counts)
}

/// `(RⁿT)_j(x)` computed by iterating `T` itself `l^j_n` times.
pub fn orbit_eval(t: &Giet, lp: &RauzyLoop, n: usize, j: usize, x: f64, budget: u128) -> Result<f64> {
    let hs = heights(lp, n)?;
    if j >= t.d() {
        return Err(Error::InvalidInput(format!("branch {j} out of range")));
    }
    if hs[j] as u128 > budget {
        return Err(Error::Budget { needed: hs[j] as u128, allowed: budget });
    }
    let (x_n, starts) = exact_level_data(t, lp, n)?;
    if x < starts[j] - PARTITION_SLACK || x > starts[j + 1] + PARTITION_SLACK {
        return Err(Error::InvalidInput(format!("point {x} outside branch {j} = [{}, {}]", starts[j], starts[j + 1])));
    }
    let mut y = x * x_n;
    for _ in 0..hs[j] {
        y = t.eval(y).0;
    }
    Ok(y / x_n)
}

/// Level data shared by many orbit evaluations.
#[derive(Clone, Debug)]
pub struct OrbitOracle {
    pub x_n: f64,
    pub starts: Vec<f64>,
    pub heights: Vec<u64>,
}

impl OrbitOracle {
    pub fn new(t: &Giet, lp: &RauzyLoop, n: usize, budget: u128) -> Result<Self> {
        let heights = heights(lp, n)?;
        if let Some(&h) = heights.iter().max() {
            if h as u128 > budget {
                return Err(Error::Budget { needed: h as u128, allowed: budget });
            }
        }
        let (x_n, starts) = exact_level_data(t, lp, n)?;
        Ok(OrbitOracle { x_n, starts, heights })
    }

    /// `(RⁿT)_j(x)` by iterating `t` itself.
    pub fn eval(&self, t: &Giet, j: usize, x: f64) -> f64 {
        let mut y = x * self.x_n;
        for _ in 0..self.heights[j] {
            y = t.eval(y).0;
        }
        y / self.x_n
    }
}
