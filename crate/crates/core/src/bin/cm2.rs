use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cm2::cli::{self, Mode, ModelSource, RunConfig, EXIT_PASS, EXIT_VERIFIER};
use cm2::presets::{Preset, PresetParams};
use cm2::Error;

#[derive(Debug, Parser)]
#[command(name = "cm2", version, about = "Continuously monitored collisional models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model's invariants and the measurement condition
    Validate(RunArgs),
    /// Monte-Carlo ledger averaged over many trajectories
    Ensemble(RunArgs),
    /// One trajectory with running averages, histograms and Bloch vectors
    SingleShot(RunArgs),
    /// Exact enumeration of all records with the inequality verifier
    Exact(RunArgs),
    /// Compare outcome statistics against the classical hidden Markov chain
    Classical(RunArgs),
    /// Re-run from a manifest.json written by an earlier run
    Replay {
        manifest: PathBuf,
        /// Output directory (the model is written here as model.json)
        #[arg(long)]
        out: PathBuf,
    },
    /// Preset models
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetsAction {
    List,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Model definition (JSON)
    #[arg(long, conflicts_with = "preset")]
    model: Option<PathBuf>,
    /// Preset name, see `presets list`
    #[arg(long)]
    preset: Option<String>,
    /// Ground-state population of the thermal unit
    #[arg(long)]
    f: Option<f64>,
    /// Coupling of the single-qubit preset
    #[arg(long)]
    g: Option<f64>,
    /// Coupling to the thermal unit (two-qubit presets)
    #[arg(long)]
    g1: Option<f64>,
    /// Coupling to the coherent unit (two-qubit presets)
    #[arg(long)]
    g2: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Number of trajectories
    #[arg(long)]
    traj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots
    #[arg(long)]
    svg: bool,
    /// Histogram bins
    #[arg(long)]
    bins: Option<usize>,
    /// Branch pruning threshold for exact enumeration
    #[arg(long)]
    prune: Option<f64>,
}

impl RunArgs {
    fn config(&self, mode: Mode) -> cm2::Result<RunConfig> {
        let preset_flags = [self.f, self.g, self.g1, self.g2];
        let source = match (&self.model, &self.preset) {
            (Some(path), None) => {
                if preset_flags.iter().any(Option::is_some) {
                    return Err(Error::InvalidArgument("--f/--g/--g1/--g2 only apply to presets".into()));
                }
                ModelSource::File(path.clone())
            }
            (None, Some(name)) => {
                let d = PresetParams::default();
                ModelSource::Preset {
                    preset: name.parse::<Preset>()?,
                    params: PresetParams {
                        f: self.f.unwrap_or(d.f),
                        g: self.g.unwrap_or(d.g),
                        g1: self.g1.unwrap_or(d.g1),
                        g2: self.g2.unwrap_or(d.g2),
                        epsilon_mix: d.epsilon_mix,
                    },
                }
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "exactly one of --model or --preset is required".into(),
                ))
            }
        };
        let mut cfg = RunConfig::new(source, mode);
        if mode == Mode::Exact || mode == Mode::Classical {
            cfg.steps = 5;
        }
        cfg.steps = self.steps.unwrap_or(cfg.steps);
        cfg.n_traj = self.traj.unwrap_or(cfg.n_traj);
        cfg.seed = self.seed;
        cfg.out = self.out.clone();
        cfg.svg = self.svg;
        cfg.bins = self.bins.unwrap_or(cfg.bins);
        cfg.prune = self.prune.unwrap_or(cfg.prune);
        cfg.check()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cmd: Command) -> cm2::Result<i32> {
    let threads = cli::threads_from_env()?;
    match cmd {
        Command::Presets {
            action: PresetsAction::List,
        } => {
            print!("{}", cli::presets_table());
            Ok(EXIT_PASS)
        }
        Command::Validate(a) => dispatch(a.config(Mode::Validate)?, threads),
        Command::Ensemble(a) => dispatch(a.config(Mode::Ensemble)?, threads),
        Command::SingleShot(a) => dispatch(a.config(Mode::SingleShot)?, threads),
        Command::Exact(a) => dispatch(a.config(Mode::Exact)?, threads),
        Command::Classical(a) => dispatch(a.config(Mode::Classical)?, threads),
        Command::Replay { manifest, out } => {
            let cfg = cli::Manifest::load(&manifest)?.replay_config(&out, Some(out.clone()))?;
            dispatch(cfg, threads)
        }
    }
}

fn dispatch(cfg: RunConfig, threads: Option<usize>) -> cm2::Result<i32> {
    match cfg.mode {
        Mode::Validate => {
            let report = cli::validate(&cfg)?;
            print_json(&report);
            Ok(if report.valid { EXIT_PASS } else { EXIT_VERIFIER })
        }
        Mode::Ensemble => {
            let out = cli::with_threads(threads, || cli::run_ensemble(&cfg))??;
            print_json(&out);
            Ok(EXIT_PASS)
        }
        Mode::SingleShot => {
            print_json(&cli::run_single_shot(&cfg)?);
            Ok(EXIT_PASS)
        }
        Mode::Exact => {
            let out = cli::run_exact(&cfg)?;
            for c in out.report.worst() {
                println!(
                    "{:<32} worst slack {:+.3e} at t={} ({})",
                    c.name,
                    c.slack,
                    c.t,
                    if c.passed { "ok" } else { "FAIL" }
                );
            }
            Ok(if out.report.passed { EXIT_PASS } else { EXIT_VERIFIER })
        }
        Mode::Classical => {
            let out = cli::run_classical_crosscheck(&cfg)?;
            print_json(&out);
            Ok(if out.passed { EXIT_PASS } else { EXIT_VERIFIER })
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
