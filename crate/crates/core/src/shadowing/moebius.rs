//! The Moebius representative of a profile.
//!
//! Moebius maps of `[0,1]` fixing both ends form the family `m_k(x) = x / (k + (1−k)x)`
//! with `∫₀¹ η_{m_k} = 2 log k`; the fit picks the member with the same `∫η` as `f`.

use crate::giet::map::sample_points;
use crate::giet::{moebius_jet, MonotoneMap};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoebiusFit {
    /// Parameter `k > 0`; `k = 1` is the identity.
    pub k: f64,
    pub integral_eta: f64,
    /// `‖f − m_k‖_{C¹}` over nodes and cell midpoints.
    pub c1_residual: f64,
}

/// `k` with `∫η_{m_k} = integral`.
pub fn moebius_parameter(integral: f64) -> f64 {
    (0.5 * integral).exp()
}

pub fn moebius_fit(f: &MonotoneMap) -> MoebiusFit {
    let integral_eta = f.total_eta_exact();
    let k = moebius_parameter(integral_eta);
    let c1_residual = if f.is_identity() {
        0.0
    } else {
        sample_points(f.grid())
            .into_iter()
            .map(|x| {
                let a = f.jet(x);
                let b = moebius_jet(k, x);
                (a.v - b.v).abs().max((a.d1 - b.d1).abs())
            })
            .fold(0.0, f64::max)
    };
    MoebiusFit { k, integral_eta, c1_residual }
}
