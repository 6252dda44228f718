//! Rauzy machine on permutations.
//!
//! Conventions fixed here and used everywhere else:
//!
//! * Labels are top positions `0..d`. `sigma[i]` is the bottom position of the
//!   interval sitting at top position `i`. After every step the labels are
//!   renamed by their new top positions, so permutations stay in reduced form.
//! * Right-end induction. `Top` means the last top interval is longer than the
//!   last bottom interval (top wins); `Bottom` is the opposite case.
//! * The elementary matrix `E` has `E[i][j]` = number of visits of the new
//!   interval `i` to the old interval `j` before its first return. Loop
//!   matrices are ordered products `A = E_n ⋯ E_1`, so row `i` of `A` counts the
//!   floors of the level-1 tower over interval `i` inside each level-0 interval.
//!   Lengths transform as `λ_old = Aᵀ λ_new`, heights as `h_new = A h_old` and
//!   log-slopes as `μ_new = A μ_old`.

use crate::error::{Error, Result};
use crate::linalg;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Irreducible permutation in reduced form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    sigma: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from zero-based bottom positions of top positions.
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let d = sigma.len();
        if d < 2 {
            return Err(Error::InvalidInput(format!("permutation needs d >= 2, got {d}")));
        }
        let mut seen = vec![false; d];
        for &s in &sigma {
            if s >= d || seen[s] {
                return Err(Error::InvalidInput(format!("not a bijection: {sigma:?}")));
            }
            seen[s] = true;
        }
        if !is_irreducible(&sigma) {
            return Err(Error::Reducible(sigma.iter().map(|s| s + 1).collect()));
        }
        Ok(Permutation { sigma })
    }

    /// Builds a permutation from the one-based literal `[σ(1), …, σ(d)]`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.iter().any(|&x| x == 0) {
            return Err(Error::InvalidInput(format!("one-based literal contains 0: {images:?}")));
        }
        Self::new(images.iter().map(|x| x - 1).collect())
    }

    /// The rotation class representative `(d d-1 … 1)`.
    pub fn rotation(d: usize) -> Result<Self> {
        Self::new((0..d).rev().collect())
    }

    pub fn d(&self) -> usize {
        self.sigma.len()
    }

    /// Zero-based bottom position of top position `i`.
    pub fn sigma(&self, i: usize) -> usize {
        self.sigma[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.sigma
    }

    /// Inverse map: top position of the interval at bottom position `p`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.d()];
        for (i, &p) in self.sigma.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.sigma.iter().map(|s| s + 1).collect()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        let sep = if self.d() > 9 { " " } else { "" };
        for (k, s) in self.sigma.iter().enumerate() {
            if k > 0 {
                write!(f, "{sep}")?;
            }
            write!(f, "{}", s + 1)?;
        }
        write!(f, ")")
    }
}

impl Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

fn is_irreducible(sigma: &[usize]) -> bool {
    let d = sigma.len();
    let mut max_seen = 0;
    for (k, &s) in sigma.iter().enumerate().take(d - 1) {
        max_seen = max_seen.max(s);
        if max_seen == k {
            return false;
        }
    }
    true
}

/// Elementary step kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StepKind {
    /// Last top interval longer than last bottom interval.
    Top,
    /// Last bottom interval longer than last top interval.
    Bottom,
}

impl StepKind {
    pub fn letter(self) -> char {
        match self {
            StepKind::Top => 't',
            StepKind::Bottom => 'b',
        }
    }
}

/// Parses a loop literal over `{t, b}`.
pub fn parse_steps(s: &str) -> Result<Vec<StepKind>> {
    s.chars()
        .map(|c| match c {
            't' | 'T' => Ok(StepKind::Top),
            'b' | 'B' => Ok(StepKind::Bottom),
            _ => Err(Error::InvalidInput(format!("bad step letter {c:?} in {s:?}"))),
        })
        .collect()
}

pub fn steps_literal(steps: &[StepKind]) -> String {
    steps.iter().map(|s| s.letter()).collect()
}

/// Square matrix of non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionMatrix {
    entries: Vec<Vec<BigInt>>,
}

impl IntersectionMatrix {
    pub fn identity(d: usize) -> Self {
        let entries = (0..d)
            .map(|i| (0..d).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        IntersectionMatrix { entries }
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        if rows.iter().flatten().any(|&x| x < 0) {
            return Err(Error::InvalidInput("matrix has negative entries".into()));
        }
        Ok(IntersectionMatrix {
            entries: rows.into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect(),
        })
    }

    pub fn d(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i][j]
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.d();
        let mut out = vec![vec![BigInt::zero(); d]; d];
        for (i, row) in out.iter_mut().enumerate() {
            for k in 0..d {
                let a = &self.entries[i][k];
                if a.is_zero() {
                    continue;
                }
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell += a * &other.entries[k][j];
                }
            }
        }
        IntersectionMatrix { entries: out }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::identity(self.d());
        for _ in 0..n {
            acc = self.mul(&acc);
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        let d = self.d();
        let entries = (0..d).map(|i| (0..d).map(|j| self.entries[j][i].clone()).collect()).collect();
        IntersectionMatrix { entries }
    }

    pub fn trace(&self) -> BigInt {
        (0..self.d()).map(|i| self.entries[i][i].clone()).sum()
    }

    /// Exact determinant by fraction-free Gaussian elimination.
    pub fn determinant(&self) -> BigInt {
        let d = self.d();
        let mut m = self.entries.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..d {
            if m[k][k].is_zero() {
                match (k + 1..d).find(|&r| !m[r][k].is_zero()) {
                    Some(r) => {
                        m.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..d {
                for j in k + 1..d {
                    let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                    m[i][j] = v;
                }
            }
            prev = m[k][k].clone();
        }
        sign * &m[d - 1][d - 1]
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().flatten().all(|x| x.is_positive())
    }

    /// Row sums, i.e. `A·𝟙`.
    pub fn row_sums(&self) -> Vec<BigInt> {
        self.entries.iter().map(|r| r.iter().sum()).collect()
    }

    /// Column sums, i.e. `Aᵀ·𝟙`.
    pub fn column_sums(&self) -> Vec<BigInt> {
        self.transpose().row_sums()
    }

    /// `A·v` over the integers.
    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.entries.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Largest row sum.
    pub fn max_row_sum(&self) -> BigInt {
        self.row_sums().into_iter().max().unwrap_or_default()
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        let d = self.d();
        nalgebra::DMatrix::from_fn(d, d, |i, j| self.entries[i][j].to_f64().unwrap_or(f64::INFINITY))
    }

    pub fn to_u64_rows(&self) -> Option<Vec<Vec<u64>>> {
        self.entries.iter().map(|r| r.iter().map(|x| x.to_u64()).collect()).collect()
    }
}

/// One elementary step: the induced permutation and the elementary matrix.
pub fn rauzy_step(pi: &Permutation, kind: StepKind) -> (Permutation, IntersectionMatrix) {
    let d = pi.d();
    let inv = pi.inverse();
    let a_t = d - 1;
    let a_b = inv[d - 1];
    let mut e = IntersectionMatrix::identity(d);
    match kind {
        StepKind::Top => {
            // bottom order: move a_b to right after a_t
            let mut bottom: Vec<usize> = inv.iter().copied().filter(|&l| l != a_b).collect();
            let pos = bottom.iter().position(|&l| l == a_t).expect("label present");
            bottom.insert(pos + 1, a_b);
            let mut sigma = vec![0; d];
            for (p, &l) in bottom.iter().enumerate() {
                sigma[l] = p;
            }
            e.entries[a_b][a_t] += 1;
            (Permutation { sigma }, e)
        }
        StepKind::Bottom => {
            // top order: move a_t to right after a_b, then relabel by top position
            let newpos = |l: usize| -> usize {
                if l <= a_b {
                    l
                } else if l == a_t {
                    a_b + 1
                } else {
                    l + 1
                }
            };
            let mut sigma = vec![0; d];
            let mut m = vec![vec![BigInt::zero(); d]; d];
            for l in 0..d {
                sigma[newpos(l)] = pi.sigma[l];
                m[newpos(l)][l] = BigInt::one();
            }
            m[newpos(a_t)][a_b] += 1;
            (Permutation { sigma }, IntersectionMatrix { entries: m })
        }
    }
}

/// Applies a step sequence, returning the final permutation and `E_n ⋯ E_1`.
pub fn apply_steps(pi: &Permutation, steps: &[StepKind]) -> (Permutation, IntersectionMatrix) {
    let mut p = pi.clone();
    let mut a = IntersectionMatrix::identity(pi.d());
    for &s in steps {
        let (q, e) = rauzy_step(&p, s);
        a = e.mul(&a);
        p = q;
    }
    (p, a)
}

/// Closed path in the Rauzy diagram with its matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RauzyLoop {
    base: Permutation,
    steps: Vec<StepKind>,
    matrix: IntersectionMatrix,
}

impl RauzyLoop {
    pub fn new(base: Permutation, steps: Vec<StepKind>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidInput("empty loop".into()));
        }
        let (end, matrix) = apply_steps(&base, &steps);
        if end != base {
            return Err(Error::InvalidInput(format!(
                "steps {} do not return {} to itself (end {})",
                steps_literal(&steps),
                base,
                end
            )));
        }
        Ok(RauzyLoop { base, steps, matrix })
    }

    pub fn parse(base: Permutation, literal: &str) -> Result<Self> {
        Self::new(base, parse_steps(literal)?)
    }

    pub fn base(&self) -> &Permutation {
        &self.base
    }

    pub fn steps(&self) -> &[StepKind] {
        &self.steps
    }

    pub fn matrix(&self) -> &IntersectionMatrix {
        &self.matrix
    }

    pub fn d(&self) -> usize {
        self.base.d()
    }

    pub fn literal(&self) -> String {
        steps_literal(&self.steps)
    }

    /// Loop running `self` first, then `other`.
    pub fn concat(&self, other: &RauzyLoop) -> Result<Self> {
        if self.base != other.base {
            return Err(Error::InvalidInput("loops have different base permutations".into()));
        }
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Ok(RauzyLoop { base: self.base.clone(), steps, matrix: other.matrix.mul(&self.matrix) })
    }

    /// The loop traversed `k` times.
    pub fn power(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("loop power must be >= 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.concat(self)?;
        }
        Ok(acc)
    }
}

/// All loops at `pi` of length `1..=max_len`, in lexicographic order of step sequences.
pub fn enumerate_loops(pi: &Permutation, max_len: usize) -> Result<Vec<RauzyLoop>> {
    if max_len == 0 {
        return Err(Error::InvalidInput("max_len must be >= 1".into()));
    }
    let mut out = Vec::new();
    let mut path = Vec::new();
    let id = IntersectionMatrix::identity(pi.d());
    dfs(pi, pi, &id, &mut path, max_len, &mut out);
    out.sort_by(|a, b| a.steps.cmp(&b.steps));
    Ok(out)
}

fn dfs(
    base: &Permutation,
    cur: &Permutation,
    mat: &IntersectionMatrix,
    path: &mut Vec<StepKind>,
    max_len: usize,
    out: &mut Vec<RauzyLoop>,
) {
    if path.len() == max_len {
        return;
    }
    for kind in [StepKind::Top, StepKind::Bottom] {
        let (next, e) = rauzy_step(cur, kind);
        let m = e.mul(mat);
        path.push(kind);
        if &next == base {
            out.push(RauzyLoop { base: base.clone(), steps: path.clone(), matrix: m.clone() });
        }
        dfs(base, &next, &m, path, max_len, out);
        path.pop();
    }
}

/// Genus and number of marked points of the suspension surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceData {
    pub genus: usize,
    pub marked_points: usize,
}

/// Genus and singularity count from the cycle structure of the auxiliary
/// permutation `j ↦ π⁻¹(π(j) + 1) − 1` on `{0, …, d}`.
pub fn genus_and_marked_points(pi: &Permutation) -> SurfaceData {
    let d = pi.d();
    // one-based extension: p(0) = 0, p(d+1) = d+1
    let mut p = vec![0usize; d + 2];
    for i in 0..d {
        p[i + 1] = pi.sigma[i] + 1;
    }
    p[d + 1] = d + 1;
    let mut pinv = vec![0usize; d + 2];
    for (i, &v) in p.iter().enumerate() {
        pinv[v] = i;
    }
    let aux: Vec<usize> = (0..=d).map(|j| pinv[p[j] + 1] - 1).collect();
    let mut seen = vec![false; d + 1];
    let mut cycles = 0;
    for start in 0..=d {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = aux[j];
        }
    }
    SurfaceData { genus: (d + 1 - cycles) / 2, marked_points: cycles }
}

/// Hyperbolicity verdict with an indeterminate band around modulus 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hyperbolicity {
    Hyperbolic,
    NonHyperbolic,
    Indeterminate,
}

/// Admissibility report for a loop as periodic data of a fixed point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub positivity_power: Option<u32>,
    pub hyperbolicity: Hyperbolicity,
    pub surface: SurfaceData,
    pub genus_assumption: bool,
    pub accepted: bool,
    pub notes: Vec<String>,
}

pub const HYPERBOLICITY_TOL: f64 = 1e-9;

pub fn is_admissible_fixed_point(lp: &RauzyLoop) -> AdmissibilityReport {
    let d = lp.d();
    let a = lp.matrix();
    let mut positivity_power = None;
    let mut pw = a.clone();
    for p in 1..=(d * d) as u32 {
        if pw.is_positive() {
            positivity_power = Some(p);
            break;
        }
        pw = a.mul(&pw);
    }
    let eig = linalg::eigenvalues(&a.to_f64());
    let hyperbolicity = if eig.iter().any(|z| (z.norm() - 1.0).abs() <= HYPERBOLICITY_TOL) {
        Hyperbolicity::Indeterminate
    } else {
        Hyperbolicity::Hyperbolic
    };
    let surface = genus_and_marked_points(lp.base());
    let genus_assumption = surface.genus >= 2 && surface.marked_points == 1;
    let mut notes = Vec::new();
    if positivity_power.is_none() {
        notes.push("no positive power up to d^2".to_string());
    }
    if hyperbolicity != Hyperbolicity::Hyperbolic {
        notes.push("eigenvalue of modulus 1 within tolerance".to_string());
    }
    if !genus_assumption {
        notes.push("below genus assumption".to_string());
    }
    let accepted = positivity_power.is_some() && hyperbolicity == Hyperbolicity::Hyperbolic && genus_assumption;
    AdmissibilityReport { positivity_power, hyperbolicity, surface, genus_assumption, accepted, notes }
}

/// All irreducible permutations of size `d`.
pub fn irreducible_permutations(d: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..d).collect();
    permute(&mut cur, 0, &mut out);
    out.sort();
    out
}

fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Permutation>) {
    if k == v.len() {
        if let Ok(p) = Permutation::new(v.clone()) {
            out.push(p);
        }
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}
