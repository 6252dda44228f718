use clap::{Parser, Subcommand};
use gietlab::combinatorics::{enumerate_loops, genus_and_marked_points, is_admissible_fixed_point, Permutation};
use gietlab::lab::config::ExperimentConfig;
use gietlab::lab::report::{ErrorRecord, Summary};
use gietlab::lab::{run, Experiment};
use gietlab::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gietlab", version, about = "Renormalisation experiments for generalised interval exchange maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        /// E1 to E8.
        experiment: String,
        /// JSON configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Start from a named preset (golden, d4).
        #[arg(long)]
        preset: Option<String>,
        /// Override a configuration value, e.g. `--set levels.shoot=12`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List Rauzy loops at a permutation with their admissibility.
    SearchLoops {
        /// One-based images, e.g. 4,3,2,1.
        #[arg(long, value_delimiter = ',')]
        permutation: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        /// Print only accepted loops.
        #[arg(long)]
        accepted: bool,
    },
    /// Print an artifact directory's summary or a single artifact file.
    Show { artifact: PathBuf },
}

fn load_config(config: Option<&Path>, preset: Option<&str>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut doc = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("config is not JSON: {e}")))?
        }
        None => serde_json::json!({}),
    };
    if let (Some(name), serde_json::Value::Object(m)) = (preset, &mut doc) {
        m.insert("preset".into(), name.into());
    }
    ExperimentConfig::from_json(Some(&doc.to_string()), overrides)
}

fn print_summary(s: &Summary, dir: Option<&Path>) {
    for c in &s.checks {
        println!("{} {:<36} {:>14.6e} {} {:.3e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.comparison, c.threshold);
    }
    if let Some(e) = &s.error {
        eprintln!("error [{}]: {}", e.kind, e.message);
    }
    if let Some(dir) = dir {
        println!("artifacts: {}", dir.display());
    }
    println!("{} {} {}", s.experiment, s.label, if s.pass { "passed" } else { "failed" });
}

fn fail(e: &Error) -> ExitCode {
    let rec = ErrorRecord::from(e);
    eprintln!("error [{}]: {}", rec.kind, rec.message);
    ExitCode::from(rec.exit_code as u8)
}

fn search(permutation: &[usize], max_len: usize, accepted_only: bool) -> Result<()> {
    let pi = Permutation::from_one_based(permutation)?;
    let s = genus_and_marked_points(&pi);
    println!("permutation {pi}: d = {}, genus {}, marked points {}", pi.d(), s.genus, s.marked_points);
    for lp in enumerate_loops(&pi, max_len)? {
        let rep = is_admissible_fixed_point(&lp);
        if accepted_only && !rep.accepted {
            continue;
        }
        println!(
            "{:<16} positive power {:<6} {:?} {}",
            lp.literal(),
            rep.positivity_power.map(|p| p.to_string()).unwrap_or_else(|| "none".into()),
            rep.hyperbolicity,
            if rep.accepted { "accepted" } else { "rejected" }
        );
    }
    Ok(())
}

fn show(path: &Path) -> Result<()> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| Error::Io(format!("{}: {e}", file.display())))?;
    if file.extension().is_some_and(|e| e == "json") && file.file_name().is_some_and(|n| n == "summary.json") {
        let s: Summary = serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", file.display())))?;
        print_summary(&s, None);
        for a in &s.artifacts {
            println!("  {a}");
        }
    } else {
        print!("{text}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { experiment, config, preset, overrides } => {
            let exp: Experiment = match experiment.parse() {
                Ok(e) => e,
                Err(e) => return fail(&e),
            };
            let cfg = match load_config(config.as_deref(), preset.as_deref(), &overrides) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let outcome = run(exp, &cfg);
            print_summary(&outcome.summary, outcome.dir.as_deref());
            ExitCode::from(outcome.exit_code as u8)
        }
        Command::SearchLoops { permutation, max_len, accepted } => match search(&permutation, max_len, accepted) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
        Command::Show { artifact } => match show(&artifact) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
    }
}
