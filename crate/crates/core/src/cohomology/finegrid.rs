//! Fine-grid axioms and the adjacent-ratio test for the regularity of a conjugacy.

use super::ConjugacyMap;
use crate::fit::{rate_fit, RateFit};
use crate::renorm::DynamicalPartition;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FineGridLevel {
    pub level: usize,
    pub atoms: usize,
    /// Largest ratio of adjacent atom lengths.
    pub adjacency: f64,
    /// Largest number of next-level atoms inside one atom; `None` on the last level.
    pub refinement: Option<usize>,
    /// `max |I/J − h(I)/h(J)|` over adjacent atoms `I, J`.
    pub discrepancy: f64,
    pub max_atom: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FineGridReport {
    pub levels: Vec<FineGridLevel>,
    /// Consecutive partitions refine each other.
    pub qualifies: bool,
    /// `sup c`.
    pub adjacency: f64,
    /// `sup a`.
    pub refinement: usize,
    /// Decay of the discrepancies, `≈ C λⁿ`.
    pub fit: Option<RateFit>,
    /// Decay of the largest atom.
    pub atom_fit: Option<RateFit>,
    /// `log λ / log ρ` with `ρ` the atom decay rate.
    pub delta_estimate: Option<f64>,
}

impl FineGridReport {
    pub const CSV_HEADER: &'static str = "level,atoms,adjacency,refinement,discrepancy,max_atom";

    pub fn csv_rows(&self) -> Vec<String> {
        self.levels
            .iter()
            .map(|l| {
                format!(
                    "{},{},{:.14e},{},{:.14e},{:.14e}",
                    l.level,
                    l.atoms,
                    l.adjacency,
                    l.refinement.map(|a| a.to_string()).unwrap_or_default(),
                    l.discrepancy,
                    l.max_atom
                )
            })
            .collect()
    }
}

fn discrepancy(h: &dyn Fn(f64) -> f64, p: &DynamicalPartition) -> (f64, f64) {
    let mut c = 0.0f64;
    let mut disc = 0.0f64;
    let hv: Vec<(f64, f64)> = p.atoms.iter().map(|a| (h(a.start), h(a.end))).collect();
    for k in 0..p.atoms.len().saturating_sub(1) {
        let (i, j) = (&p.atoms[k], &p.atoms[k + 1]);
        let (li, lj) = (i.len(), j.len());
        let (hi, hj) = (hv[k].1 - hv[k].0, hv[k + 1].1 - hv[k + 1].0);
        c = c.max(li / lj).max(lj / li);
        disc = disc.max((li / lj - hi / hj).abs()).max((lj / li - hj / hi).abs());
    }
    (c, disc)
}

fn refinement(coarse: &DynamicalPartition, fine: &DynamicalPartition) -> usize {
    let mut counts = vec![0usize; coarse.atoms.len()];
    for a in &fine.atoms {
        counts[coarse.locate(0.5 * (a.start + a.end))] += 1;
    }
    counts.into_iter().max().unwrap_or(0)
}

/// Runs the ratio test of `h` on a sequence of partitions of the reference map.
pub fn fine_grid_ratio_test(h: &dyn Fn(f64) -> f64, partitions: &[DynamicalPartition], fit_from: usize) -> FineGridReport {
    let slack = 1e-9;
    let qualifies = partitions.windows(2).all(|w| w[0].is_refined_by(&w[1], slack));
    let levels: Vec<FineGridLevel> = partitions
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (adjacency, discrepancy) = discrepancy(h, p);
            FineGridLevel {
                level: p.level,
                atoms: p.atoms.len(),
                adjacency,
                refinement: partitions.get(k + 1).map(|q| refinement(p, q)),
                discrepancy,
                max_atom: p.delta,
            }
        })
        .collect();
    let used: Vec<&FineGridLevel> = levels.iter().filter(|l| l.level >= fit_from).collect();
    let x: Vec<f64> = used.iter().map(|l| l.level as f64).collect();
    let fit = rate_fit(&x, &used.iter().map(|l| l.discrepancy).collect::<Vec<_>>());
    let atom_fit = rate_fit(&x, &used.iter().map(|l| l.max_atom).collect::<Vec<_>>());
    let delta_estimate = match (fit, atom_fit) {
        (Some(f), Some(a)) if a.rate < 1.0 && f.rate > 0.0 => Some(f.rate.ln() / a.rate.ln()),
        _ => None,
    };
    FineGridReport {
        adjacency: levels.iter().map(|l| l.adjacency).fold(0.0, f64::max),
        refinement: levels.iter().filter_map(|l| l.refinement).max().unwrap_or(0),
        levels,
        qualifies,
        fit,
        atom_fit,
        delta_estimate,
    }
}

/// Salem's singular function: strictly increasing with zero derivative almost everywhere.
pub fn salem_map(a: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let mut y = x;
        let mut lo = 0.0;
        let mut w = 1.0;
        for _ in 0..60 {
            y *= 2.0;
            if y >= 1.0 {
                lo += w * a;
                w *= 1.0 - a;
                y -= 1.0;
            } else {
                w *= a;
            }
        }
        lo + w * y
    }
}

/// Atoms of `T`'s partition against the `h`-images of the matching atoms of `T₀`'s partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomAlignment {
    pub level: usize,
    /// `max |h(∂I₀) − ∂I|`.
    pub endpoint_error: f64,
    /// `max |Leb(I₀) − μ(I)|`.
    pub measure_error: f64,
}

pub fn atom_alignment(h: &ConjugacyMap, p0: &DynamicalPartition, p: &DynamicalPartition) -> AtomAlignment {
    let index: HashMap<(usize, u64), (f64, f64)> = p.atoms.iter().map(|a| ((a.tower, a.floor), (a.start, a.end))).collect();
    let mut endpoint_error = 0.0f64;
    let mut measure_error = 0.0f64;
    for a in &p0.atoms {
        match index.get(&(a.tower, a.floor)) {
            Some(&(s, e)) => {
                endpoint_error = endpoint_error.max((h.value(a.start) - s).abs()).max((h.value(a.end) - e).abs());
                measure_error = measure_error.max((a.len() - h.measure(s, e)).abs());
            }
            None => {
                endpoint_error = f64::INFINITY;
                measure_error = f64::INFINITY;
            }
        }
    }
    AtomAlignment { level: p0.level, endpoint_error, measure_error }
}
