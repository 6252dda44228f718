//! Level-by-level record of a renormalisation run.

use super::partition::{dynamical_partition, PartitionSummary};
use super::step::{grid_of, offset_step, renormalize_with_scale};
use crate::combinatorics::RauzyLoop;
use crate::error::{Error, Result};
use crate::giet::Giet;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Norms of one level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelNorms {
    /// `max_i ‖φᵢ − id‖_{C^r}` for `r = 0..=3`.
    pub profile: [f64; 4],
    /// Per-branch `‖φᵢ − id‖_{C¹}`.
    pub branch_c1: Vec<f64>,
    /// Per-branch `‖φᵢ − id‖_{C²}`.
    pub branch_c2: Vec<f64>,
    pub total_nonlinearity: f64,
}

impl LevelNorms {
    pub fn of(t: &Giet) -> Self {
        let profile = [t.cr_norm(0), t.cr_norm(1), t.cr_norm(2), t.cr_norm(3)];
        LevelNorms {
            profile,
            branch_c1: t.profiles().iter().map(|p| p.cr_norm(1)).collect(),
            branch_c2: t.profiles().iter().map(|p| p.cr_norm(2)).collect(),
            total_nonlinearity: t.total_nonlinearity(),
        }
    }
}

/// One level of a trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceLevel {
    pub level: usize,
    pub giet: Giet,
    /// Cumulative scale `x_k`.
    pub x: f64,
    pub partition: Option<PartitionSummary>,
    pub norms: LevelNorms,
}

/// Outcome of a trace run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TraceStatus {
    Completed,
    /// The run stopped with an error at the given level.
    Exited { level: usize, error: String },
}

/// Levels `0..=n` of a renormalisation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenormTrace {
    pub levels: Vec<TraceLevel>,
    pub status: TraceStatus,
}

impl RenormTrace {
    /// Runs up to `n` levels; partitions are computed when `partitions` is set.
    pub fn run(t: &Giet, lp: &RauzyLoop, n: usize, partitions: bool) -> Result<Self> {
        let grid = grid_of(t);
        let mut levels = Vec::with_capacity(n + 1);
        let summary = |k: usize| -> Result<Option<PartitionSummary>> {
            if partitions {
                Ok(Some(dynamical_partition(t, lp, k)?.summary()))
            } else {
                Ok(None)
            }
        };
        levels.push(TraceLevel { level: 0, giet: t.clone(), x: 1.0, partition: summary(0)?, norms: LevelNorms::of(t) });
        let mut status = TraceStatus::Completed;
        for k in 0..n {
            let prev = &levels[k];
            match renormalize_with_scale(&prev.giet, lp, &grid) {
                Ok((g, x)) => {
                    let x = prev.x * x;
                    let part = match summary(k + 1) {
                        Ok(p) => p,
                        Err(e) => {
                            status = TraceStatus::Exited { level: k + 1, error: e.to_string() };
                            break;
                        }
                    };
                    let norms = LevelNorms::of(&g);
                    levels.push(TraceLevel { level: k + 1, giet: g, x, partition: part, norms });
                }
                Err(e) => {
                    let e = offset_step(e, k * lp.steps().len());
                    status = TraceStatus::Exited { level: k + 1, error: e.to_string() };
                    break;
                }
            }
        }
        Ok(RenormTrace { levels, status })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn infinitely_renormalisable_to(&self, n: usize) -> bool {
        self.depth() >= n
    }

    /// JSON lines, one level per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for l in &self.levels {
            serde_json::to_writer(&mut w, l)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(s: &str) -> Result<Vec<TraceLevel>> {
        s.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(Error::from)).collect()
    }

    /// CSV rows `n, x_n, delta_n, c1_i..., c2_i...`.
    pub fn csv_rows(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let d = self.levels[0].giet.d();
        let mut header = vec!["n".to_string(), "x_n".to_string(), "delta_n".to_string()];
        header.extend((0..d).map(|i| format!("c1_{i}")));
        header.extend((0..d).map(|i| format!("c2_{i}")));
        let rows = self
            .levels
            .iter()
            .map(|l| {
                let mut r = vec![l.level as f64, l.x, l.partition.as_ref().map(|p| p.delta).unwrap_or(f64::NAN)];
                r.extend(&l.norms.branch_c1);
                r.extend(&l.norms.branch_c2);
                r
            })
            .collect();
        (header, rows)
    }
}
