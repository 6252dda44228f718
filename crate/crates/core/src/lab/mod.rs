//! Experiment runner: configuration, the eight pipelines and artifact output.
//!
//! Each run writes `summary.json`, `config.json` and its tables and records into
//! `<output_dir>/<experiment>/<label>/`. Artifacts carry no timestamps, so two runs
//! with the same configuration produce identical files.

pub mod config;
pub mod experiments;
pub mod report;

use crate::error::{Error, Result};
use config::{ExperimentConfig, SEARCH};
use report::{ErrorRecord, ExperimentOutput, Summary, SystemRecord};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::E1,
        Experiment::E2,
        Experiment::E3,
        Experiment::E4,
        Experiment::E5,
        Experiment::E6,
        Experiment::E7,
        Experiment::E8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::E1 => "E1",
            Experiment::E2 => "E2",
            Experiment::E3 => "E3",
            Experiment::E4 => "E4",
            Experiment::E5 => "E5",
            Experiment::E6 => "E6",
            Experiment::E7 => "E7",
            Experiment::E8 => "E8",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}, expected E1..E8")))
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: Summary,
    /// Artifact directory; `None` when the configuration was rejected.
    pub dir: Option<PathBuf>,
    pub exit_code: i32,
}

/// Runs the pipeline without writing anything.
pub fn execute(exp: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if exp == Experiment::E1 {
        return experiments::e1(cfg);
    }
    let sys = cfg.build_system()?;
    match exp {
        Experiment::E1 => unreachable!(),
        Experiment::E2 => experiments::e2(cfg, &sys),
        Experiment::E3 => experiments::e3(cfg, &sys),
        Experiment::E4 => experiments::e4(cfg, &sys),
        Experiment::E5 => experiments::e5(cfg, &sys),
        Experiment::E6 => experiments::e6(cfg, &sys),
        Experiment::E7 => experiments::e7(cfg, &sys),
        Experiment::E8 => experiments::e8(cfg, &sys),
    }
}

fn system_record(cfg: &ExperimentConfig) -> Option<SystemRecord> {
    let pi = cfg.permutation().ok()?;
    let (loop_literal, surface) = if cfg.system.loop_literal == SEARCH {
        (SEARCH.to_string(), crate::combinatorics::genus_and_marked_points(&pi))
    } else {
        let lp = cfg.rauzy_loop().ok()?;
        (lp.literal(), crate::combinatorics::genus_and_marked_points(lp.base()))
    };
    Some(SystemRecord {
        permutation: cfg.system.permutation.clone(),
        loop_literal,
        d: pi.d(),
        genus: surface.genus,
        marked_points: surface.marked_points,
    })
}

fn rejected(exp: Experiment, cfg: &ExperimentConfig, e: &Error) -> RunOutcome {
    let rec = ErrorRecord::from(e);
    let summary = Summary {
        experiment: exp.to_string(),
        label: cfg.label.clone(),
        system: None,
        pass: false,
        exit_code: rec.exit_code,
        checks: vec![],
        metrics: Default::default(),
        error: Some(rec),
        artifacts: vec![],
    };
    RunOutcome { exit_code: summary.exit_code, summary, dir: None }
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(format!("{}: {e}", path.display()))
}

/// Validates, runs and writes artifacts. A rejected configuration produces no files.
pub fn run(exp: Experiment, cfg: &ExperimentConfig) -> RunOutcome {
    if let Err(e) = cfg.validate().and_then(|_| cfg.permutation().map(|_| ())) {
        return rejected(exp, cfg, &e);
    }
    if cfg.system.loop_literal != SEARCH {
        if let Err(e) = cfg.rauzy_loop() {
            return rejected(exp, cfg, &e);
        }
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => return rejected(exp, cfg, &Error::Config(e.to_string())),
    };
    let result = pool.install(|| execute(exp, cfg));
    let (output, error) = match result {
        Ok(o) => (o, None),
        Err(e) if matches!(e, Error::Config(_) | Error::InvalidInput(_)) => return rejected(exp, cfg, &e),
        Err(e) => (ExperimentOutput::default(), Some(ErrorRecord::from(&e))),
    };
    let exit_code = match &error {
        Some(rec) => rec.exit_code,
        None if output.pass() => 0,
        None => 1,
    };
    let mut summary = Summary {
        experiment: exp.to_string(),
        label: cfg.label.clone(),
        system: system_record(cfg),
        pass: error.is_none() && output.pass(),
        exit_code,
        checks: output.checks.clone(),
        metrics: output.metrics.clone(),
        error,
        artifacts: vec![],
    };
    match write_artifacts(exp, cfg, &output, &mut summary) {
        Ok(dir) => RunOutcome { exit_code, summary, dir: Some(dir) },
        Err(e) => {
            summary.exit_code = e.exit_code();
            summary.error = Some(ErrorRecord::from(&e));
            RunOutcome { exit_code: summary.exit_code, summary, dir: None }
        }
    }
}

fn write_artifacts(exp: Experiment, cfg: &ExperimentConfig, out: &ExperimentOutput, summary: &mut Summary) -> Result<PathBuf> {
    let parent = Path::new(&cfg.output_dir).join(exp.name());
    fs::create_dir_all(&parent).map_err(io(&parent))?;
    let dir = parent.join(&cfg.label);
    let staging = parent.join(format!(".{}.partial", cfg.label));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io(&staging))?;
    }
    fs::create_dir_all(&staging).map_err(io(&staging))?;
    let mut artifacts = vec!["config.json".to_string()];
    write_json(&staging.join("config.json"), cfg)?;
    for t in &out.tables {
        let name = format!("{}.csv", t.name);
        t.write_csv(&staging.join(&name))?;
        artifacts.push(name);
    }
    for r in &out.records {
        let name = format!("{}.jsonl", r.name);
        r.write(&staging.join(&name))?;
        artifacts.push(name);
    }
    artifacts.push("summary.json".to_string());
    artifacts.sort();
    summary.artifacts = artifacts;
    write_json(&staging.join("summary.json"), summary)?;
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(io(&dir))?;
    }
    fs::rename(&staging, &dir).map_err(io(&dir))?;
    Ok(dir)
}
