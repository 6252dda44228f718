//! Unstable cones `{‖s‖ ≤ δ‖u‖, d_η ≤ δ‖u‖}` around a base map.

use super::{affine_coordinates, unstable_linear_model};
use crate::error::Result;
use crate::giet::Giet;
use crate::renorm::renormalize;
use crate::systems::System;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeReport {
    pub s_norm: f64,
    pub u_norm: f64,
    pub d_eta: f64,
    /// `max(‖s‖, d_η) / ‖u‖`.
    pub ratio: f64,
    pub in_cone: bool,
    /// The same quantities for `R(x)` relative to `R(base)`.
    pub image_ratio: f64,
    pub image_in_cone: bool,
    /// `‖u(Rx) − u(R base)‖ / ‖u(x) − u(base)‖`.
    pub expansion: f64,
    /// Smallest singular value of the linearised map on `𝒰`.
    pub lambda1: f64,
}

fn offsets(sys: &System, x: &Giet, base: &Giet) -> Result<(f64, f64, f64)> {
    let (sx, ux) = affine_coordinates(sys, x);
    let (sb, ub) = affine_coordinates(sys, base);
    Ok(((sx - sb).norm(), (ux - ub).norm(), x.eta_distance(base)?))
}

fn ratio(s: f64, u: f64, e: f64) -> f64 {
    if u > 0.0 {
        s.max(e) / u
    } else if s.max(e) > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Cone membership of `x` around `base` and of `R(x)` around `R(base)`.
pub fn cone_check(sys: &System, x: &Giet, base: &Giet, delta: f64) -> Result<ConeReport> {
    let (s_norm, u_norm, d_eta) = offsets(sys, x, base)?;
    let r0 = ratio(s_norm, u_norm, d_eta);
    let rx = renormalize(x, &sys.lp)?;
    let rb = renormalize(base, &sys.lp)?;
    let (s1, u1, e1) = offsets(sys, &rx, &rb)?;
    let r1 = ratio(s1, u1, e1);
    let lambda1 = unstable_linear_model(sys).singular_values().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConeReport {
        s_norm,
        u_norm,
        d_eta,
        ratio: r0,
        in_cone: u_norm > 0.0 && r0 <= delta,
        image_ratio: r1,
        image_in_cone: u1 > 0.0 && r1 <= delta,
        expansion: if u_norm > 0.0 { u1 / u_norm } else { 0.0 },
        lambda1,
    })
}
