//! Finite-dimensional picture: spectrum of the loop matrix, the fixed IET, the
//! slope cocycle and the unstable/stable splitting of `R` restricted to AIETs.
//!
//! Tangent vectors to the AIET manifold at `T₀` are written `w = (δλ, δμ) ∈ ℝ^{2d}`
//! with `Σ δλᵢ = 0` and `Σ δμᵢ λ⁰ᵢ = 0`. The chart is
//! `ψ(T) = (λ − λ⁰, μ − (Σ μᵢλ⁰ᵢ) 𝟙)`.

use crate::combinatorics::{genus_and_marked_points, IntersectionMatrix, RauzyLoop};
use crate::error::{Error, Result};
use crate::giet::{Aiet, Giet, Grid};
use crate::linalg;
use crate::renorm;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Moduli within this distance of 1 are counted as indeterminate.
pub const UNIT_TOL: f64 = 1e-9;

/// Eigen-data of a loop matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// `(re, im)` sorted by decreasing modulus.
    pub eigenvalues: Vec<(f64, f64)>,
    pub moduli: Vec<f64>,
    pub perron_value: f64,
    /// Perron vector of `Aᵀ`, normalised to `Σ = 1`.
    pub perron_vector: Vec<f64>,
    pub expanding: usize,
    pub contracting: usize,
    pub indeterminate: usize,
    pub reciprocal_pairing_error: f64,
    /// `|θ₂| / θ₁`.
    pub gap_ratio: f64,
}

pub fn spectrum(a: &IntersectionMatrix) -> SpectrumReport {
    let m = a.to_f64();
    let ev = linalg::eigenvalues(&m);
    let moduli: Vec<f64> = ev.iter().map(|z| z.norm()).collect();
    let (pv, vec) = linalg::perron(&m.transpose(), 100_000, 1e-16);
    let mut expanding = 0;
    let mut contracting = 0;
    let mut indeterminate = 0;
    for &r in &moduli {
        if r > 1.0 + UNIT_TOL {
            expanding += 1;
        } else if r < 1.0 - UNIT_TOL {
            contracting += 1;
        } else {
            indeterminate += 1;
        }
    }
    let rec = ev
        .iter()
        .map(|z| {
            let inv = z.inv();
            ev.iter().map(|w| (w - inv).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let gap_ratio = if moduli.len() > 1 { moduli[1] / moduli[0] } else { 0.0 };
    SpectrumReport {
        eigenvalues: ev.iter().map(|z| (z.re, z.im)).collect(),
        moduli,
        perron_value: pv,
        perron_vector: vec.iter().copied().collect(),
        expanding,
        contracting,
        indeterminate,
        reciprocal_pairing_error: rec,
        gap_ratio,
    }
}

/// The IET fixed by the loop: lengths from the Perron vector of `Aᵀ`.
pub fn fixed_aiet(lp: &RauzyLoop, grid: &Grid) -> Result<Giet> {
    let s = spectrum(lp.matrix());
    if !(s.gap_ratio < 1.0 - UNIT_TOL) {
        return Err(Error::InvalidInput(format!("Perron value is not simple (|θ2|/θ1 = {})", s.gap_ratio)));
    }
    if s.perron_vector.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("Perron vector is not positive".into()));
    }
    let a = Aiet::iet(lp.base().clone(), s.perron_vector.clone())?;
    Ok(Giet::from_aiet(a, grid))
}

/// `A μ`.
pub fn slope_cocycle(a: &IntersectionMatrix, mu: &[f64]) -> Vec<f64> {
    let m = a.to_f64();
    let v = DVector::from_column_slice(mu);
    (m * v).iter().copied().collect()
}

/// Measured `‖μ(RT) − A μ(T)‖_∞`.
pub fn slope_cocycle_error(t: &Aiet, lp: &RauzyLoop, grid: &Grid) -> Result<f64> {
    let g = Giet::from_aiet(t.clone(), grid);
    let r = renorm::renormalize(&g, lp)?;
    let pred = slope_cocycle(lp.matrix(), &t.mu());
    let got = r.affine().mu();
    Ok(got.iter().zip(&pred).map(|(g, p)| (g - p).abs()).fold(0.0, f64::max))
}

/// Geometric counts at level 1 as a matrix, cross-checked against the loop matrix.
pub fn intersection_matrix_from_partition(t0: &Giet, lp: &RauzyLoop) -> Result<IntersectionMatrix> {
    intersection_matrix_at_level(t0, lp, 1)
}

/// Level-`n` counts, cross-checked against `Aⁿ`.
pub fn intersection_matrix_at_level(t0: &Giet, lp: &RauzyLoop, n: usize) -> Result<IntersectionMatrix> {
    let counts = renorm::geometric_counts(t0, lp, n)?;
    let rows = counts.into_iter().map(|r| r.into_iter().map(|x| x as i64).collect()).collect();
    let m = IntersectionMatrix::from_rows(rows)?;
    let expected = lp.matrix().pow(n as u32);
    if m != expected {
        return Err(Error::Consistency(format!("geometric counts {m:?} differ from loop matrix power {expected:?}")));
    }
    Ok(m)
}

/// Chart `ψ(T) = (λ − λ⁰, μ − (Σμλ⁰)𝟙)` in `ℝ^{2d}`.
pub fn chart(a: &Aiet, lambda0: &[f64]) -> DVector<f64> {
    let d = a.d();
    let mu = a.mu();
    let m: f64 = mu.iter().zip(lambda0).map(|(x, l)| x * l).sum();
    DVector::from_fn(2 * d, |k, _| if k < d { a.lambda()[k] - lambda0[k] } else { mu[k - d] - m })
}

/// Inverse chart; fails when a length becomes non-positive.
pub fn chart_inverse(w: &DVector<f64>, lp: &RauzyLoop, lambda0: &[f64]) -> Result<Aiet> {
    let d = lambda0.len();
    let lambda: Vec<f64> = (0..d).map(|k| lambda0[k] + w[k]).collect();
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotInDomain { step: 0, reason: "chart point has a non-positive length".into() });
    }
    let mu: Vec<f64> = (0..d).map(|k| w[d + k]).collect();
    Aiet::from_log_slopes(lp.base().clone(), lambda, &mu)
}

/// Finite-difference Jacobian of `R|𝒜` at `T₀` in tangent coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FdJacobian {
    /// Orthonormal tangent basis `E` (`2d × (2d−2)`), λ-block first.
    pub tangent: Vec<Vec<f64>>,
    /// Jacobian in the coordinates of `E`.
    pub matrix: Vec<Vec<f64>>,
    pub step_sweep: Vec<f64>,
    /// Max-entry change between consecutive steps of the sweep.
    pub sweep_changes: Vec<f64>,
    pub chosen_step: f64,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), r[0].len(), |i, j| r[i][j])
}

impl FdJacobian {
    pub fn tangent_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.tangent)
    }

    pub fn jacobian(&self) -> DMatrix<f64> {
        from_rows(&self.matrix)
    }
}

/// Orthonormal basis of the AIET tangent space at `λ⁰`, λ-block first.
pub fn tangent_basis(lambda0: &[f64]) -> DMatrix<f64> {
    let d = lambda0.len();
    let bl = linalg::orthogonal_complement(&DVector::from_element(d, 1.0));
    let bm = linalg::orthogonal_complement(&DVector::from_column_slice(lambda0));
    let mut e = DMatrix::zeros(2 * d, 2 * d - 2);
    e.view_mut((0, 0), (d, d - 1)).copy_from(&bl);
    e.view_mut((d, d - 1), (d, d - 1)).copy_from(&bm);
    e
}

/// `z ↦ Eᵀ ψ(R(ψ⁻¹(E z)))`.
fn renorm_in_coords(z: &DVector<f64>, e: &DMatrix<f64>, lp: &RauzyLoop, lambda0: &[f64], grid: &Grid) -> Result<DVector<f64>> {
    let w = e * z;
    let a = chart_inverse(&w, lp, lambda0)?;
    let g = Giet::from_aiet(a, grid);
    let r = renorm::renormalize(&g, lp)?;
    Ok(e.transpose() * chart(r.affine(), lambda0))
}

/// Central-difference Jacobian with a step sweep; the accepted step minimises the change to its neighbour.
pub fn fd_jacobian(lp: &RauzyLoop, lambda0: &[f64], steps: &[f64]) -> Result<FdJacobian> {
    let d = lambda0.len();
    let n = 2 * d - 2;
    let e = tangent_basis(lambda0);
    let grid = Grid::uniform(2)?;
    let mut mats = Vec::new();
    for &h in steps {
        let mut j = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut zp = DVector::zeros(n);
            zp[k] = h;
            let zm = -zp.clone();
            let fp = renorm_in_coords(&zp, &e, lp, lambda0, &grid)?;
            let fm = renorm_in_coords(&zm, &e, lp, lambda0, &grid)?;
            j.set_column(k, &((fp - fm) / (2.0 * h)));
        }
        mats.push(j);
    }
    let changes: Vec<f64> = mats.windows(2).map(|w| (&w[1] - &w[0]).amax()).collect();
    let best = if changes.is_empty() {
        0
    } else {
        let k = changes.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|x| x.0).unwrap_or(0);
        k + 1
    };
    Ok(FdJacobian {
        tangent: to_rows(&e),
        matrix: to_rows(&mats[best]),
        step_sweep: steps.to_vec(),
        sweep_changes: changes,
        chosen_step: steps[best],
    })
}

pub const DEFAULT_FD_STEPS: [f64; 4] = [1e-4, 1e-5, 1e-6, 1e-7];

/// Block statements for the Jacobian at `T₀`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockReport {
    /// `‖D_λ R_μ‖` (max entry).
    pub lambda_to_mu_norm: f64,
    /// Smallest eigenvalue modulus of `D_λ R_λ` (the measured expansion constant).
    pub lambda_block_min_modulus: f64,
    pub lambda_block_moduli: Vec<f64>,
    pub mu_block_moduli: Vec<f64>,
    pub mu_block_expanding: usize,
    pub jacobian_moduli: Vec<f64>,
    pub predicted_moduli: Vec<f64>,
    pub prediction_error: f64,
    pub expanding: usize,
    pub contracting: usize,
    pub expected_unstable: usize,
    pub step_sweep: Vec<f64>,
    pub sweep_changes: Vec<f64>,
    pub pass: bool,
}

pub fn derivative_block_check(lp: &RauzyLoop, lambda0: &[f64], fd: &FdJacobian, tol_block: f64) -> BlockReport {
    let d = lambda0.len();
    let j = fd.jacobian();
    let jll = j.view((0, 0), (d - 1, d - 1)).clone_owned();
    let jml = j.view((d - 1, 0), (d - 1, d - 1)).clone_owned();
    let jmm = j.view((d - 1, d - 1), (d - 1, d - 1)).clone_owned();
    let ml: Vec<f64> = linalg::eigenvalues(&jll).iter().map(|z| z.norm()).collect();
    let mm: Vec<f64> = linalg::eigenvalues(&jmm).iter().map(|z| z.norm()).collect();
    let all: Vec<f64> = linalg::eigenvalues(&j).iter().map(|z| z.norm()).collect();
    let s = spectrum(lp.matrix());
    let mut pred: Vec<f64> = s.moduli[1..].iter().map(|&m| s.perron_value / m).chain(s.moduli[1..].iter().copied()).collect();
    pred.sort_by(|a, b| b.total_cmp(a));
    let prediction_error = all.iter().zip(&pred).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
    let expanding = all.iter().filter(|&&m| m > 1.0 + 1e-3).count();
    let contracting = all.iter().filter(|&&m| m < 1.0 - 1e-3).count();
    let surf = genus_and_marked_points(lp.base());
    let expected_unstable = (d - 1) + surf.genus.saturating_sub(1);
    let lambda_block_min_modulus = ml.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_block_expanding = mm.iter().filter(|&&m| m > 1.0 + 1e-3).count();
    let lambda_to_mu_norm = jml.amax();
    let pass = lambda_to_mu_norm <= tol_block
        && lambda_block_min_modulus > 1.0
        && mu_block_expanding == surf.genus.saturating_sub(1)
        && expanding == expected_unstable
        && contracting == 2 * d - 2 - expected_unstable;
    BlockReport {
        lambda_to_mu_norm,
        lambda_block_min_modulus,
        lambda_block_moduli: ml,
        mu_block_moduli: mm,
        mu_block_expanding,
        jacobian_moduli: all,
        predicted_moduli: pred,
        prediction_error,
        expanding,
        contracting,
        expected_unstable,
        step_sweep: fd.step_sweep.clone(),
        sweep_changes: fd.sweep_changes.clone(),
        pass,
    }
}

/// Unstable/stable splitting of the AIET tangent space at `T₀`, in ambient `ℝ^{2d}` coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Splitting {
    pub lambda0: Vec<f64>,
    /// Orthonormal basis of the unstable space.
    pub unstable: Vec<Vec<f64>>,
    /// Orthonormal basis of the stable space.
    pub stable: Vec<Vec<f64>>,
    /// Orthonormal basis of `{Σ μᵢλ⁰ᵢ = 0}` (`d × (d−1)`).
    pub constraint: Vec<Vec<f64>>,
    /// Whether the stable space comes from the Jacobian (true) or from `A` alone.
    pub stable_from_jacobian: bool,
}

impl Splitting {
    pub fn unstable_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.unstable)
    }

    pub fn stable_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.stable)
    }

    pub fn constraint_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.constraint)
    }

    pub fn dim_unstable(&self) -> usize {
        self.unstable[0].len()
    }

    pub fn dim_stable(&self) -> usize {
        self.stable[0].len()
    }

    /// Oblique coordinates `(s, u)` of a tangent vector `w`.
    pub fn coordinates(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let u = self.unstable_matrix();
        let s = self.stable_matrix();
        let ku = u.ncols();
        let ks = s.ncols();
        let mut b = DMatrix::zeros(w.len(), ku + ks);
        b.view_mut((0, 0), (w.len(), ks)).copy_from(&s);
        b.view_mut((0, ks), (w.len(), ku)).copy_from(&u);
        let c = linalg::lstsq(&b, w);
        (c.rows(0, ks).clone_owned(), c.rows(ks, ku).clone_owned())
    }

    /// Tangent vector `S s + U u`.
    pub fn vector(&self, s: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.stable_matrix() * s + self.unstable_matrix() * u
    }

    /// Max deviation of `BᵀB` from the identity over both bases.
    pub fn orthonormality_error(&self) -> f64 {
        let f = |m: DMatrix<f64>| (m.transpose() * &m - DMatrix::identity(m.ncols(), m.ncols())).amax();
        f(self.unstable_matrix()).max(f(self.stable_matrix())).max(f(self.constraint_matrix()))
    }
}

/// `‖(I − P) A P‖` for the projector onto `{Σμᵢλ⁰ᵢ = 0}`.
pub fn constraint_invariance_error(a: &IntersectionMatrix, lambda0: &[f64]) -> f64 {
    let b = linalg::orthogonal_complement(&DVector::from_column_slice(lambda0));
    let p = &b * b.transpose();
    let d = lambda0.len();
    let m = a.to_f64();
    ((DMatrix::identity(d, d) - &p) * m * p).amax()
}

/// Splitting from `A` alone: `U = λ-tangent ⊕ A-unstable`, `S = A-stable` (μ-directions).
pub fn splitting(a: &IntersectionMatrix, lambda0: &[f64]) -> Result<Splitting> {
    let d = lambda0.len();
    let b = linalg::orthogonal_complement(&DVector::from_column_slice(lambda0));
    let ac = b.transpose() * a.to_f64() * &b;
    let moduli: Vec<f64> = linalg::eigenvalues(&ac).iter().map(|z| z.norm()).collect();
    let ku = moduli.iter().filter(|&&m| m > 1.0 + UNIT_TOL).count();
    let ks = moduli.iter().filter(|&&m| m < 1.0 - UNIT_TOL).count();
    if ku + ks != d - 1 {
        return Err(Error::InvalidInput("restricted matrix has eigenvalues of modulus 1".into()));
    }
    let inv = ac.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular restricted matrix".into()))?;
    let qu = if ku > 0 { &b * linalg::dominant_subspace(&ac, ku, 2000) } else { DMatrix::zeros(d, 0) };
    let qs = if ks > 0 { &b * linalg::dominant_subspace(&inv, ks, 2000) } else { DMatrix::zeros(d, 0) };
    let bl = linalg::orthogonal_complement(&DVector::from_element(d, 1.0));
    let mut u = DMatrix::zeros(2 * d, d - 1 + ku);
    u.view_mut((0, 0), (d, d - 1)).copy_from(&bl);
    if ku > 0 {
        u.view_mut((d, d - 1), (d, ku)).copy_from(&qu);
    }
    let mut s = DMatrix::zeros(2 * d, ks);
    if ks > 0 {
        s.view_mut((d, 0), (d, ks)).copy_from(&qs);
    }
    Ok(Splitting {
        lambda0: lambda0.to_vec(),
        unstable: to_rows(&linalg::orthonormalize(&u)),
        stable: to_rows(&linalg::orthonormalize(&s)),
        constraint: to_rows(&b),
        stable_from_jacobian: false,
    })
}

/// Splitting with the stable space taken from the finite-difference Jacobian.
pub fn splitting_with_jacobian(a: &IntersectionMatrix, lambda0: &[f64], fd: &FdJacobian) -> Result<Splitting> {
    let mut sp = splitting(a, lambda0)?;
    let ks = sp.dim_stable();
    if ks == 0 {
        return Ok(sp);
    }
    let j = fd.jacobian();
    let e = fd.tangent_matrix();
    let inv = j.try_inverse().ok_or_else(|| Error::InvalidInput("singular Jacobian".into()))?;
    let qs = linalg::dominant_subspace(&inv, ks, 4000);
    sp.stable = to_rows(&linalg::orthonormalize(&(e * qs)));
    sp.stable_from_jacobian = true;
    Ok(sp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::Permutation;

    #[test]
    fn golden_spectrum() {
        let lp = RauzyLoop::parse(Permutation::from_one_based(&[2, 1]).unwrap(), "bt").unwrap();
        let s = spectrum(lp.matrix());
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        assert!((s.perron_value - phi * phi).abs() < 1e-12);
        assert!((s.moduli[1] - 1.0 / (phi * phi)).abs() < 1e-12);
        assert!((s.perron_vector[0] - 1.0 / phi).abs() < 1e-14);
        assert!(s.reciprocal_pairing_error < 1e-12);
    }
}
