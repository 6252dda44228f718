//! Reference systems: a loop, its fixed IET and the associated linear data.

use crate::affine::{self, FdJacobian, SpectrumReport, Splitting};
use crate::combinatorics::{genus_and_marked_points, Permutation, RauzyLoop, SurfaceData};
use crate::error::Result;
use crate::giet::{Giet, Grid};
use serde::Serialize;

/// Golden rotation: `(21)` with the loop `bt`.
pub const GOLDEN_PERMUTATION: [usize; 2] = [2, 1];
pub const GOLDEN_LOOP: &str = "bt";

/// Genus-two system: `(4321)` with the loop `ttbtbbtb`.
pub const D4_PERMUTATION: [usize; 4] = [4, 3, 2, 1];
pub const D4_LOOP: &str = "ttbtbbtb";

/// A loop with its fixed point and linear data.
#[derive(Clone, Debug, Serialize)]
pub struct System {
    pub name: String,
    pub lp: RauzyLoop,
    pub t0: Giet,
    pub lambda0: Vec<f64>,
    pub surface: SurfaceData,
    pub spectrum: SpectrumReport,
    pub jacobian: FdJacobian,
    pub splitting: Splitting,
    #[serde(skip)]
    pub grid: Grid,
}

impl System {
    pub fn new(name: &str, lp: RauzyLoop, grid_size: usize) -> Result<Self> {
        let grid = Grid::uniform(grid_size)?;
        let t0 = affine::fixed_aiet(&lp, &grid)?;
        let lambda0 = t0.affine().lambda().to_vec();
        let spectrum = affine::spectrum(lp.matrix());
        let jacobian = affine::fd_jacobian(&lp, &lambda0, &affine::DEFAULT_FD_STEPS)?;
        let splitting = affine::splitting_with_jacobian(lp.matrix(), &lambda0, &jacobian)?;
        let surface = genus_and_marked_points(lp.base());
        Ok(System { name: name.to_string(), lp, t0, lambda0, surface, spectrum, jacobian, splitting, grid })
    }

    pub fn from_literals(name: &str, perm: &[usize], lp: &str, grid_size: usize) -> Result<Self> {
        let base = Permutation::from_one_based(perm)?;
        Self::new(name, RauzyLoop::parse(base, lp)?, grid_size)
    }

    pub fn golden(grid_size: usize) -> Result<Self> {
        Self::from_literals("golden", &GOLDEN_PERMUTATION, GOLDEN_LOOP, grid_size)
    }

    pub fn genus_two(grid_size: usize) -> Result<Self> {
        Self::from_literals("d4", &D4_PERMUTATION, D4_LOOP, grid_size)
    }

    pub fn d(&self) -> usize {
        self.lp.d()
    }

    /// `(d − 1) + (g − 1)`.
    pub fn dim_unstable(&self) -> usize {
        self.d() - 1 + self.surface.genus.saturating_sub(1)
    }

    /// Moduli of the eigenvalues of the Jacobian of `R|𝒜`, decreasing.
    pub fn jacobian_moduli(&self) -> Vec<f64> {
        crate::linalg::eigenvalues(&self.jacobian.jacobian()).iter().map(|z| z.norm()).collect()
    }
}
