//! `kljn`: run KLJN simulation experiments from TOML configs.
//!
//! Exit status: 0 on success, 1 for configuration or usage errors, 2 when the
//! experiment itself fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kljn_core::config::{load_config, ExperimentConfig, ExperimentKind};
use kljn_core::experiment::run_experiment;

#[derive(Parser)]
#[command(name = "kljn", version, about = "Kirchhoff-law-Johnson-noise key exchange simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Master seed, replacing the config's.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, replacing the config's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Periods (exchange and attack experiments) or trials (the others).
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the built-in defaults of an experiment as TOML.
    Defaults { experiment: String },
    #[command(name = "kljn-exchange")]
    KljnExchange(Alias),
    #[command(name = "attack-transient")]
    AttackTransient(Alias),
    #[command(name = "defend-rrrt")]
    DefendRrrt(Alias),
    Amplify(Alias),
    Continuity(Alias),
    #[command(name = "psd-check")]
    PsdCheck(Alias),
    #[command(name = "scaling-demo")]
    ScalingDemo(Alias),
}

/// Per-experiment shortcut: built-in defaults unless a config is given.
#[derive(Args)]
struct Alias {
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn load(path: Option<&PathBuf>, expected: Option<ExperimentKind>) -> Result<ExperimentConfig, Failure> {
    match (path, expected) {
        (Some(p), expected) => {
            let config = load_config(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            if let Some(kind) = expected {
                if config.experiment != kind {
                    return Err(Failure::Config(format!(
                        "{} configures {}, not {}",
                        p.display(),
                        config.experiment.name(),
                        kind.name()
                    )));
                }
            }
            Ok(config)
        }
        (None, Some(kind)) => Ok(ExperimentConfig::defaults(kind)),
        (None, None) => Err(Failure::Config("no config given".into())),
    }
}

fn apply(config: &mut ExperimentConfig, o: &Overrides) -> Result<(), Failure> {
    if let Some(seed) = o.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &o.out {
        config.output = out.display().to_string();
    }
    if let Some(n) = o.trials {
        match config.experiment {
            ExperimentKind::KljnExchange | ExperimentKind::AttackTransient | ExperimentKind::DefendRrrt => {
                config.n_periods = n
            }
            _ => config.n_trials = n,
        }
    }
    config.validate().map_err(|e| Failure::Config(e.to_string()))
}

fn execute(config: ExperimentConfig) -> Result<(), Failure> {
    let report = run_experiment(&config).map_err(|e| Failure::Runtime(e.to_string()))?;
    print!("{}", report.summary_text());
    let paths = report
        .write_to(&PathBuf::from(&config.output))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    for p in paths {
        println!("wrote: {}", p.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let (path, kind, overrides) = match cli.command {
        Command::Run { config, overrides } => (Some(config), None, overrides),
        Command::Defaults { experiment } => {
            let kind = ExperimentKind::from_name(&experiment).map_err(|e| Failure::Config(e.to_string()))?;
            let text = ExperimentConfig::defaults(kind)
                .to_toml()
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            print!("{text}");
            return Ok(());
        }
        Command::KljnExchange(a) => (a.config, Some(ExperimentKind::KljnExchange), a.overrides),
        Command::AttackTransient(a) => (a.config, Some(ExperimentKind::AttackTransient), a.overrides),
        Command::DefendRrrt(a) => (a.config, Some(ExperimentKind::DefendRrrt), a.overrides),
        Command::Amplify(a) => (a.config, Some(ExperimentKind::Amplify), a.overrides),
        Command::Continuity(a) => (a.config, Some(ExperimentKind::Continuity), a.overrides),
        Command::PsdCheck(a) => (a.config, Some(ExperimentKind::PsdCheck), a.overrides),
        Command::ScalingDemo(a) => (a.config, Some(ExperimentKind::ScalingDemo), a.overrides),
    };
    let mut config = load(path.as_ref(), kind)?;
    apply(&mut config, &overrides)?;
    execute(config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
