//! Experiment configuration: a single JSON document, overridden by `key=value` flags.
//!
//! Precedence, lowest first: built-in defaults, the config file, `--set` overrides in
//! the order given. Keys are dotted paths into the document (`tolerances.residual`).

use crate::combinatorics::{is_admissible_fixed_point, Permutation, RauzyLoop};
use crate::error::{Error, Result};
use crate::systems::{System, D4_LOOP, D4_PERMUTATION, GOLDEN_LOOP, GOLDEN_PERMUTATION};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

/// The loop literal that asks for a search instead of a fixed loop.
pub const SEARCH: &str = "search";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// One-based images `σ(1), …, σ(d)`.
    pub permutation: Vec<usize>,
    /// Step literal over `{t, b}`, or `"search"`.
    #[serde(rename = "loop")]
    pub loop_literal: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub max_len: usize,
    /// Candidates recorded in the E1 tables.
    pub max_records: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { max_len: 8, max_records: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Levels {
    /// Renormalisation depth of the fixed-point trace and of the estimate battery.
    pub renorm: usize,
    /// Partition levels for the `Δₙ` series.
    pub partition: usize,
    /// Shooting depth.
    pub shoot: usize,
    /// Minimum depth a shoot must reach.
    pub shoot_min: usize,
    /// Levels of the fine-grid ratio test.
    pub finegrid: usize,
    /// First level entering the ratio-test fit.
    pub finegrid_fit_from: usize,
    /// Levels of the pushforward check.
    pub pushforward: usize,
    /// Levels of the backend cross-validation.
    pub crossval: usize,
}

impl Default for Levels {
    fn default() -> Self {
        Levels {
            renorm: 8,
            partition: 10,
            shoot: 14,
            shoot_min: 8,
            finegrid: 12,
            finegrid_fit_from: 4,
            pushforward: 6,
            crossval: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub fixed_point_c0: f64,
    pub fixed_point_c1: f64,
    pub perron: f64,
    pub reciprocal: f64,
    /// Eigenvalues within this of modulus 1 are not counted as hyperbolic.
    pub unit_gap: f64,
    pub cocycle: f64,
    /// Amplitudes of the `Dη` ramp span this many decades.
    pub ramp_decades: usize,
    /// `(radius, max ratio)` pairs for the `η`-Lipschitz estimate.
    pub lipschitz: Vec<(f64, f64)>,
    pub lipschitz_pairs: usize,
    pub correction_ratio: f64,
    pub fit_r_squared: f64,
    /// Relative agreement of the `Δₙ` rate with `1/θ₁`.
    pub delta_rate: f64,
    pub growth: f64,
    pub residual: f64,
    pub conjugacy: f64,
    pub pushforward: f64,
    pub ratio_r_squared: f64,
    pub crossval_safety: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            fixed_point_c0: 1e-10,
            fixed_point_c1: 1e-8,
            perron: 1e-10,
            reciprocal: 1e-8,
            unit_gap: 1e-3,
            cocycle: 1e-9,
            ramp_decades: 4,
            lipschitz: vec![(1e-2, 1.1), (1e-3, 1.02)],
            lipschitz_pairs: 50,
            correction_ratio: 0.9,
            fit_r_squared: 0.95,
            delta_rate: 0.05,
            growth: 1.05,
            residual: 1e-5,
            conjugacy: 1e-5,
            pushforward: 1e-4,
            ratio_r_squared: 0.9,
            crossval_safety: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohomologySettings {
    pub orbit_length: usize,
    pub grid_size: usize,
}

impl Default for CohomologySettings {
    fn default() -> Self {
        CohomologySettings { orbit_length: 100_000, grid_size: 1_048_577 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Output subdirectory name.
    pub label: String,
    pub system: SystemConfig,
    /// Neighbourhood radius of random perturbations.
    pub radius: f64,
    /// Nodes of the uniform profile grid.
    pub grid_size: usize,
    pub levels: Levels,
    pub tolerances: Tolerances,
    /// Random draws for the multi-trial experiments.
    pub trials: usize,
    /// Random AIETs for the slope cocycle.
    pub cocycle_samples: usize,
    pub seed: u64,
    /// Worker threads; `0` for the default pool.
    pub threads: usize,
    pub output_dir: String,
    pub search: SearchConfig,
    pub cohomology: CohomologySettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::golden()
    }
}

impl ExperimentConfig {
    pub fn golden() -> Self {
        ExperimentConfig {
            label: "golden".into(),
            system: SystemConfig { permutation: GOLDEN_PERMUTATION.to_vec(), loop_literal: GOLDEN_LOOP.into() },
            radius: 1e-3,
            grid_size: 257,
            levels: Levels::default(),
            tolerances: Tolerances::default(),
            trials: 10,
            cocycle_samples: 100,
            seed: 0,
            threads: 0,
            output_dir: "out".into(),
            search: SearchConfig::default(),
            cohomology: CohomologySettings::default(),
        }
    }

    pub fn genus_two() -> Self {
        ExperimentConfig {
            label: "d4".into(),
            system: SystemConfig { permutation: D4_PERMUTATION.to_vec(), loop_literal: D4_LOOP.into() },
            levels: Levels { shoot: 10, finegrid: 6, finegrid_fit_from: 2, ..Levels::default() },
            ..Self::golden()
        }
    }

    /// Named presets: `golden`, `d4`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "golden" => Ok(Self::golden()),
            "d4" | "genus_two" => Ok(Self::genus_two()),
            _ => Err(Error::Config(format!("unknown preset {name:?}"))),
        }
    }

    /// Parses a JSON document on top of the defaults and applies the overrides.
    pub fn from_json(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut doc = serde_json::to_value(Self::default()).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(text) = text {
            let user: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not JSON: {e}")))?;
            if let Some(Value::String(p)) = user.get("preset") {
                doc = serde_json::to_value(Self::preset(p)?).map_err(|e| Error::Config(e.to_string()))?;
            }
            let mut user = user;
            if let Value::Object(m) = &mut user {
                m.remove("preset");
            }
            merge(&mut doc, user);
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: Self = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
            None => None,
        };
        Self::from_json(text.as_deref(), overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.label.is_empty() || self.label.contains(['/', '\\']) || self.label.starts_with('.') {
            return bad(format!("invalid label {:?}", self.label));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive".into());
        }
        if self.grid_size < 5 {
            return bad("grid_size must be at least 5".into());
        }
        if self.trials == 0 || self.cocycle_samples == 0 {
            return bad("trials and cocycle_samples must be positive".into());
        }
        let t = &self.tolerances;
        let positive = [
            t.fixed_point_c0,
            t.fixed_point_c1,
            t.perron,
            t.reciprocal,
            t.unit_gap,
            t.cocycle,
            t.correction_ratio,
            t.fit_r_squared,
            t.delta_rate,
            t.growth,
            t.residual,
            t.conjugacy,
            t.pushforward,
            t.ratio_r_squared,
            t.crossval_safety,
        ];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) || t.lipschitz.iter().any(|(r, m)| !(*r > 0.0 && *m > 0.0)) {
            return bad("all tolerances must be positive".into());
        }
        if t.ramp_decades == 0 || t.lipschitz_pairs == 0 {
            return bad("ramp_decades and lipschitz_pairs must be positive".into());
        }
        let l = &self.levels;
        if l.shoot_min > l.shoot || l.finegrid_fit_from >= l.finegrid || l.crossval == 0 {
            return bad("inconsistent levels".into());
        }
        if self.cohomology.orbit_length < 8 || self.cohomology.grid_size < 3 {
            return bad("cohomology orbit and grid too small".into());
        }
        let base = self.permutation()?;
        if self.system.loop_literal != SEARCH {
            RauzyLoop::parse(base, &self.system.loop_literal).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn permutation(&self) -> Result<Permutation> {
        Permutation::from_one_based(&self.system.permutation).map_err(|e| Error::Config(e.to_string()))
    }

    /// The configured loop, or the shortest accepted one when searching.
    pub fn rauzy_loop(&self) -> Result<RauzyLoop> {
        let base = self.permutation()?;
        if self.system.loop_literal != SEARCH {
            return RauzyLoop::parse(base, &self.system.loop_literal).map_err(|e| Error::Config(e.to_string()));
        }
        crate::combinatorics::enumerate_loops(&base, self.search.max_len)?
            .into_iter()
            .find(|lp| is_admissible_fixed_point(lp).accepted)
            .ok_or_else(|| Error::Config(format!("no admissible loop of length ≤ {}", self.search.max_len)))
    }

    pub fn build_system(&self) -> Result<System> {
        let lp = self.rauzy_loop()?;
        System::new(&self.label, lp, self.grid_size).map_err(|e| match e {
            Error::InvalidInput(m) => Error::Config(m),
            e => e,
        })
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Applies `a.b.c=value`; the value is read as JSON, else as a string.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| Error::Config(format!("{key}: {p} is not inside an object")))?;
        if !obj.contains_key(*p) {
            return Err(Error::Config(format!("unknown key {key}")));
        }
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), value);
            return Ok(());
        }
        cur = obj.get_mut(*p).expect("checked");
    }
    Err(Error::Config(format!("empty key in {spec:?}")))
}
