//! Elementary Rauzy–Veech steps on GIETs.

use super::chain::Chain;
use crate::combinatorics::{Permutation, RauzyLoop, StepKind};
use crate::error::{Error, Result};
use crate::giet::{Aiet, Giet, Grid, Jet, MonotoneMap};

/// Below this relative gap between the two last intervals a step is refused.
pub const CONNECTION_TOL: f64 = 1e-12;

/// Step sequence state: unnormalised lengths over `[0, X]` plus lazy profiles.
pub(crate) struct LazyGiet<'a> {
    base: &'a [MonotoneMap],
    perm: Permutation,
    top: Vec<f64>,
    image: Vec<f64>,
    chains: Vec<Chain>,
    total: f64,
    steps_done: usize,
}

impl<'a> LazyGiet<'a> {
    pub fn new(t: &'a Giet) -> Self {
        let d = t.d();
        LazyGiet {
            base: t.profiles(),
            perm: t.permutation().clone(),
            top: t.affine().lambda().to_vec(),
            image: t.affine().image_lengths(),
            chains: (0..d).map(|i| Chain::base(t.profiles(), i)).collect(),
            total: 1.0,
            steps_done: 0,
        }
    }

    /// Length of the current induction interval relative to the start.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Which step the current lengths call for.
    pub fn winner(&self) -> Result<StepKind> {
        let d = self.perm.d();
        let inv = self.perm.inverse();
        let lt = self.top[d - 1];
        let lb = self.image[inv[d - 1]];
        let gap = (lt - lb).abs() / self.total;
        if gap < CONNECTION_TOL {
            return Err(Error::Connection { step: self.steps_done, gap });
        }
        Ok(if lt > lb { StepKind::Top } else { StepKind::Bottom })
    }

    pub fn step(&mut self, kind: StepKind) -> Result<()> {
        let actual = self.winner()?;
        if actual != kind {
            return Err(Error::NotInDomain {
                step: self.steps_done,
                reason: format!("expected a {kind:?} step, lengths call for {actual:?}"),
            });
        }
        let d = self.perm.d();
        let inv = self.perm.inverse();
        let alpha = d - 1;
        let beta = inv[d - 1];
        let lt = self.top[alpha];
        let lb = self.image[beta];
        match kind {
            StepKind::Top => {
                let s = (lt - lb) / lt;
                let ca = &self.chains[alpha];
                let frac = ca.value(self.base, s);
                if !(frac > 0.0 && frac < 1.0) {
                    return Err(Error::NotInDomain { step: self.steps_done, reason: "degenerate split".into() });
                }
                let new_alpha = ca.restrict(self.base, 0.0, s);
                let tail = ca.restrict(self.base, s, 1.0);
                let new_beta = std::mem::take(&mut self.chains[beta]).then(tail);
                let ja = self.image[alpha];
                self.top[alpha] = lt - lb;
                self.image[alpha] = ja * frac;
                self.image[beta] = ja * (1.0 - frac);
                self.chains[alpha] = new_alpha;
                self.chains[beta] = new_beta;
                self.total -= lb;
            }
            StepKind::Bottom => {
                let cb = &self.chains[beta];
                let r = (lb - lt) / lb;
                let q = cb.inverse(self.base, r);
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::NotInDomain { step: self.steps_done, reason: "degenerate split".into() });
                }
                let new_beta = cb.restrict(self.base, 0.0, q);
                let head = cb.restrict(self.base, q, 1.0);
                let new_alpha = head.then(std::mem::take(&mut self.chains[alpha]));
                let lbeta = self.top[beta];
                let ialpha = self.image[alpha];
                // relabel: alpha moves to position beta + 1
                let newpos = |l: usize| -> usize {
                    if l <= beta {
                        l
                    } else if l == alpha {
                        beta + 1
                    } else {
                        l + 1
                    }
                };
                let mut top = vec![0.0; d];
                let mut image = vec![0.0; d];
                let mut chains: Vec<Chain> = vec![Chain::default(); d];
                let mut old_chains = std::mem::take(&mut self.chains);
                for l in 0..d {
                    let p = newpos(l);
                    if l == beta {
                        top[p] = lbeta * q;
                        image[p] = lb - lt;
                        chains[p] = new_beta.clone();
                    } else if l == alpha {
                        top[p] = lbeta * (1.0 - q);
                        image[p] = ialpha;
                        chains[p] = new_alpha.clone();
                    } else {
                        top[p] = self.top[l];
                        image[p] = self.image[l];
                        chains[p] = std::mem::take(&mut old_chains[l]);
                    }
                }
                self.top = top;
                self.image = image;
                self.chains = chains;
                self.total -= lt;
            }
        }
        let (p, _) = crate::combinatorics::rauzy_step(&self.perm, kind);
        self.perm = p;
        self.steps_done += 1;
        Ok(())
    }

    /// Rescales to `[0,1]` and samples every profile on `grid`.
    pub fn materialize(&self, grid: &Grid) -> Result<Giet> {
        let affine = Aiet::from_lengths(self.perm.clone(), self.top.clone(), self.image.clone())?;
        let mut profiles = Vec::with_capacity(self.chains.len());
        for c in &self.chains {
            if c.is_identity() {
                profiles.push(MonotoneMap::identity(grid));
            } else {
                let m = MonotoneMap::from_fn(grid, |t| {
                    let j = c.jet(self.base, t);
                    if t == 0.0 {
                        Jet { v: 0.0, ..j }
                    } else if t == 1.0 {
                        Jet { v: 1.0, ..j }
                    } else {
                        j
                    }
                })
                .map_err(|e| Error::NotInDomain { step: self.steps_done, reason: format!("resampling failed: {e}") })?;
                profiles.push(m);
            }
        }
        Giet::assemble(affine, profiles)
    }

    /// Top starts of the current state scaled to `[0,1]`.
    pub fn normalized_top_starts(&self) -> Vec<f64> {
        let s: f64 = self.top.iter().sum();
        let mut out = Vec::with_capacity(self.top.len() + 1);
        let mut acc = 0.0;
        for l in &self.top {
            out.push(acc / s);
            acc += l;
        }
        out.push(1.0);
        out
    }
}

/// Grid used for resampling the profiles of `t`.
pub fn grid_of(t: &Giet) -> Grid {
    t.profile(0).grid().clone()
}

/// One elementary step with resampling onto the grid of `t`.
pub fn rauzy_step_giet(t: &Giet, kind: StepKind) -> Result<Giet> {
    let mut s = LazyGiet::new(t);
    s.step(kind)?;
    s.materialize(&grid_of(t))
}

/// `R(T)` together with the scale `X(T)` of the first-return interval.
pub fn renormalize_with_scale(t: &Giet, lp: &RauzyLoop, grid: &Grid) -> Result<(Giet, f64)> {
    if t.permutation() != lp.base() {
        return Err(Error::InvalidInput(format!("map has permutation {}, loop base is {}", t.permutation(), lp.base())));
    }
    let mut s = LazyGiet::new(t);
    for &k in lp.steps() {
        s.step(k)?;
    }
    Ok((s.materialize(grid)?, s.total()))
}

/// `R(T)` along the loop, resampled onto the grid of `t`.
pub fn renormalize(t: &Giet, lp: &RauzyLoop) -> Result<Giet> {
    Ok(renormalize_with_scale(t, lp, &grid_of(t))?.0)
}

/// `Rⁿ(T)` with resampling after every level, and the cumulative scales `x_1..x_n`.
pub fn renormalize_n(t: &Giet, lp: &RauzyLoop, n: usize) -> Result<(Vec<Giet>, Vec<f64>)> {
    let grid = grid_of(t);
    let mut levels = vec![t.clone()];
    let mut xs = vec![1.0];
    for k in 0..n {
        let (next, x) = renormalize_with_scale(&levels[k], lp, &grid).map_err(|e| offset_step(e, k * lp.steps().len()))?;
        xs.push(xs[k] * x);
        levels.push(next);
    }
    Ok((levels, xs))
}

/// Level-`n` return data computed without any resampling: `(x_n, normalised top starts)`.
pub fn exact_level_data(t: &Giet, lp: &RauzyLoop, n: usize) -> Result<(f64, Vec<f64>)> {
    let mut s = LazyGiet::new(t);
    for _ in 0..n {
        for &k in lp.steps() {
            s.step(k)?;
        }
    }
    Ok((s.total(), s.normalized_top_starts()))
}

pub(crate) fn offset_step(e: Error, offset: usize) -> Error {
    match e {
        Error::Connection { step, gap } => Error::Connection { step: step + offset, gap },
        Error::NotInDomain { step, reason } => Error::NotInDomain { step: step + offset, reason },
        other => other,
    }
}
