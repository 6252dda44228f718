//! Level-by-level convergence of `RⁿT`: partition size, distance to Moebius maps,
//! to AIETs and to `T₀`.

use super::moebius::moebius_fit;
use crate::error::Result;
use crate::fit::{rate_fit, RateFit};
use crate::giet::Giet;
use crate::renorm::{partition_delta, renormalize_n};
use crate::systems::System;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticLevel {
    pub level: usize,
    /// `Δₙ`, when the partition was computed.
    pub delta: Option<f64>,
    /// `max_i ‖φᵢ − m_{kᵢ}‖_{C¹}` against the `∫η`-matched Moebius maps.
    pub moebius_c1: f64,
    /// `max_i ‖φᵢ − id‖_{C¹}`.
    pub aiet_c1: f64,
    /// `d_{C¹}(RⁿT, T₀)`.
    pub t0_c1: f64,
    pub total_nonlinearity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceDiagnostics {
    pub levels: Vec<DiagnosticLevel>,
    pub delta_fit: Option<RateFit>,
    pub moebius_fit: Option<RateFit>,
    pub aiet_fit: Option<RateFit>,
    pub t0_fit: Option<RateFit>,
    /// `max |∫η(RⁿT) − ∫η(T)|`.
    pub nonlinearity_drift: f64,
    /// `max Δₙ₊₁ / Δₙ`.
    pub max_delta_ratio: Option<f64>,
}

impl ConvergenceDiagnostics {
    /// Series as `(name, values)` for CSV export.
    pub fn columns(&self) -> Vec<(&'static str, Vec<f64>)> {
        vec![
            ("level", self.levels.iter().map(|l| l.level as f64).collect()),
            ("delta", self.levels.iter().map(|l| l.delta.unwrap_or(f64::NAN)).collect()),
            ("moebius_c1", self.levels.iter().map(|l| l.moebius_c1).collect()),
            ("aiet_c1", self.levels.iter().map(|l| l.aiet_c1).collect()),
            ("t0_c1", self.levels.iter().map(|l| l.t0_c1).collect()),
            ("total_nonlinearity", self.levels.iter().map(|l| l.total_nonlinearity).collect()),
        ]
    }
}

fn fit_from(levels: &[DiagnosticLevel], from: usize, f: impl Fn(&DiagnosticLevel) -> Option<f64>) -> Option<RateFit> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        levels.iter().filter(|l| l.level >= from).filter_map(|l| f(l).map(|v| (l.level as f64, v))).unzip();
    rate_fit(&x, &y)
}

/// Diagnostics for `RⁿT`, `n ≤ n_max`; `Δₙ` for `n ≤ partition_levels` within `atom_budget`.
pub fn convergence_diagnostics(
    sys: &System,
    t: &Giet,
    n_max: usize,
    partition_levels: usize,
    atom_budget: u128,
    fit_from_level: usize,
) -> Result<ConvergenceDiagnostics> {
    let (gs, _) = renormalize_n(t, &sys.lp, n_max)?;
    let base_eta = t.total_nonlinearity();
    let mut levels = Vec::with_capacity(n_max + 1);
    for (k, g) in gs.iter().enumerate() {
        let delta = if k <= partition_levels { Some(partition_delta(t, &sys.lp, k, atom_budget)?.0) } else { None };
        let moebius_c1 = g.profiles().iter().map(|p| moebius_fit(p).c1_residual).fold(0.0, f64::max);
        levels.push(DiagnosticLevel {
            level: k,
            delta,
            moebius_c1,
            aiet_c1: g.cr_norm(1),
            t0_c1: g.cr_distance(&sys.t0, 1)?,
            total_nonlinearity: g.total_nonlinearity(),
        });
    }
    let nonlinearity_drift = levels.iter().map(|l| (l.total_nonlinearity - base_eta).abs()).fold(0.0, f64::max);
    let deltas: Vec<f64> = levels.iter().filter_map(|l| l.delta).collect();
    let max_delta_ratio = deltas.windows(2).map(|w| w[1] / w[0]).reduce(f64::max);
    Ok(ConvergenceDiagnostics {
        delta_fit: fit_from(&levels, fit_from_level, |l| l.delta),
        moebius_fit: fit_from(&levels, fit_from_level, |l| Some(l.moebius_c1)),
        aiet_fit: fit_from(&levels, fit_from_level, |l| Some(l.aiet_c1)),
        t0_fit: fit_from(&levels, fit_from_level, |l| Some(l.t0_c1)),
        levels,
        nonlinearity_drift,
        max_delta_ratio,
    })
}
