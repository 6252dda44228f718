//! Pre-stable maps by shooting, invariant cones, and convergence diagnostics.
//!
//! A map near `T₀` is written `(s, u, h)`: `s` and `u` are the oblique coordinates of
//! its affine chart point in the stable/unstable splitting, `h` its branch profiles.

pub mod cone;
pub mod diagnostics;
pub mod moebius;
pub mod shoot;

pub use cone::{cone_check, ConeReport};
pub use diagnostics::{convergence_diagnostics, ConvergenceDiagnostics, DiagnosticLevel};
pub use moebius::{moebius_fit, MoebiusFit};
pub use shoot::{escape_depth, shoot, ShadowingResult, ShootConfig, Strategy};

use crate::affine;
use crate::error::{Error, Result};
use crate::giet::perturb::Bump;
use crate::giet::{Giet, MonotoneMap};
use crate::systems::System;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Default escape radius.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e-2;
/// Default cone aperture.
pub const DEFAULT_CONE_DELTA: f64 = 0.5;

/// Stable coordinates and profiles; the unstable coordinates are the unknown.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShadowingProblem {
    pub s: Vec<f64>,
    pub profiles: Vec<MonotoneMap>,
    pub n_max: usize,
    pub escape_radius: f64,
    /// `∫η = 0` for the assembled maps.
    pub slice: bool,
}

impl ShadowingProblem {
    pub fn new(sys: &System, s: Vec<f64>, profiles: Vec<MonotoneMap>, n_max: usize, escape_radius: f64) -> Result<Self> {
        if s.len() != sys.splitting.dim_stable() {
            return Err(Error::InvalidInput(format!(
                "expected {} stable coordinates, got {}",
                sys.splitting.dim_stable(),
                s.len()
            )));
        }
        if profiles.len() != sys.d() {
            return Err(Error::InvalidInput(format!("expected {} profiles, got {}", sys.d(), profiles.len())));
        }
        if !(escape_radius > 0.0) {
            return Err(Error::InvalidInput("escape radius must be positive".into()));
        }
        let total: f64 = profiles.iter().map(|p| p.total_eta_exact()).sum();
        Ok(ShadowingProblem { s, profiles, n_max, escape_radius, slice: total.abs() <= 1e-12 })
    }

    /// `s = 0`, identity profiles.
    pub fn zero(sys: &System, n_max: usize, escape_radius: f64) -> Self {
        let profiles = (0..sys.d()).map(|_| MonotoneMap::identity(&sys.grid)).collect();
        Self::new(sys, vec![0.0; sys.splitting.dim_stable()], profiles, n_max, escape_radius).expect("consistent dimensions")
    }

    /// Random `s ∈ [−r, r]^k` and random slice profiles with `sup|φ' − 1| ≤ r`.
    pub fn random_slice<R: Rng>(sys: &System, rng: &mut R, radius: f64, n_max: usize, escape_radius: f64) -> Result<Self> {
        let s = (0..sys.splitting.dim_stable()).map(|_| rng.gen_range(-radius..radius)).collect();
        let profiles =
            (0..sys.d()).map(|_| Bump::random_slice(rng, radius, 3).map(&sys.grid)).collect::<Result<Vec<_>>>()?;
        Self::new(sys, s, profiles, n_max, escape_radius)
    }

    /// Random AIET problem on the stable space: identity profiles.
    pub fn random_stable_aiet<R: Rng>(sys: &System, rng: &mut R, radius: f64, n_max: usize, escape_radius: f64) -> Result<Self> {
        let mut p = Self::zero(sys, n_max, escape_radius);
        p.s = (0..sys.splitting.dim_stable()).map(|_| rng.gen_range(-radius..radius)).collect();
        Ok(p)
    }

    /// The map with unstable coordinates `u`.
    pub fn map(&self, sys: &System, u: &DVector<f64>) -> Result<Giet> {
        let w = sys.splitting.vector(&DVector::from_column_slice(&self.s), u);
        let a = affine::chart_inverse(&w, &sys.lp, &sys.lambda0)?;
        Giet::assemble(a, self.profiles.clone())
    }
}

/// Oblique `(s, u)` coordinates of the affine part of `t`.
pub fn affine_coordinates(sys: &System, t: &Giet) -> (DVector<f64>, DVector<f64>) {
    sys.splitting.coordinates(&affine::chart(t.affine(), &sys.lambda0))
}

/// The linearised loop map on the unstable space, in `u`-coordinates.
pub fn unstable_linear_model(sys: &System) -> DMatrix<f64> {
    let ku = sys.splitting.dim_unstable();
    let e = sys.jacobian.tangent_matrix();
    let j = sys.jacobian.jacobian();
    let ub = sys.splitting.unstable_matrix();
    let mut m = DMatrix::zeros(ku, ku);
    for k in 0..ku {
        let w = ub.column(k).clone_owned();
        let w2 = &e * (&j * (e.transpose() * w));
        let (_, u) = sys.splitting.coordinates(&w2);
        m.set_column(k, &u);
    }
    m
}

/// Smallest modulus among the unstable eigenvalues of the Jacobian.
pub fn weakest_expansion(sys: &System) -> f64 {
    let k = sys.splitting.dim_unstable();
    let m = sys.jacobian_moduli();
    m[k - 1]
}
