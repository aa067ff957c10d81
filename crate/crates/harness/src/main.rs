use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use pass_core::{DesignMode, PassError, Result, SystemConfig};
use pass_harness::sweeps::{self, SweepOutput};
use pass_harness::{fileconfig, modes, validate};

#[derive(Parser)]
#[command(
    name = "pass-sim",
    about = "Simulate and optimize waveguide-fed pinching-antenna arrays",
    version
)]
struct Cli {
    /// TOML config file layered over the profile
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Scenario seed (overrides profile and config file)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated design-mode labels, e.g. dynamic-ee-tunable
    #[arg(long, global = true)]
    modes: Option<String>,

    /// Write the CSV here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Base parameter profile
    #[arg(long, global = true, default_value = "ci", value_parser = ["paper-v", "ci"])]
    profile: String,

    /// Fixed-step gradient updates (no backtracking line search)
    #[arg(long, global = true)]
    plain_gradient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every requested mode once at the configured operating point
    SingleRun,
    /// Emit the objective trace per outer iteration
    Convergence {
        /// Element counts, comma separated (default: the profile's N)
        #[arg(long)]
        elements: Option<String>,
    },
    /// Sweep the per-slot power budget
    SweepPower {
        /// Budgets in dBm, comma separated
        #[arg(long)]
        powers_dbm: Option<String>,
    },
    /// Sweep the element count
    SweepElements {
        #[arg(long)]
        elements: Option<String>,
    },
    /// Sweep the region length (the waveguide tracks it)
    SweepRegion {
        /// Region lengths in meters, comma separated
        #[arg(long)]
        lengths: Option<String>,
    },
    /// Run the internal invariant suite
    Validate,
}

fn parse_numbers<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| PassError::Config(format!("bad {what} entry '{s}'")))
        })
        .collect()
}

fn build_config(cli: &Cli) -> Result<SystemConfig> {
    let mut config = match cli.profile.as_str() {
        "paper-v" => SystemConfig::paper_v(),
        _ => SystemConfig::ci(),
    };
    if let Some(path) = &cli.config {
        fileconfig::load(path)?.apply(&mut config)?;
    }
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }
    if cli.plain_gradient {
        config.plain_gradient = true;
    }
    config.validate()?;
    Ok(config)
}

fn requested_modes(
    cli: &Cli,
    default: Vec<(String, DesignMode)>,
) -> Result<Vec<(String, DesignMode)>> {
    match &cli.modes {
        Some(spec) => {
            let parsed = modes::parse_list(spec)?;
            if parsed.is_empty() {
                return Err(PassError::Config("empty --modes list".into()));
            }
            Ok(parsed)
        }
        None => Ok(default),
    }
}

fn emit(cli: &Cli, output: &SweepOutput) -> Result<()> {
    let text = output.result.to_csv();
    match &cli.out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| PassError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let config = build_config(cli)?;
    let output = match &cli.command {
        Command::SingleRun => {
            let modes = requested_modes(cli, modes::default_modes())?;
            sweeps::run_single(&config, &modes)?
        }
        Command::Convergence { elements } => {
            let modes = requested_modes(cli, sweeps::default_convergence_modes())?;
            let counts = match elements {
                Some(s) => parse_numbers::<usize>(s, "--elements")?,
                None => vec![config.num_elements],
            };
            sweeps::run_convergence(&config, &counts, &modes)?
        }
        Command::SweepPower { powers_dbm } => {
            let modes = requested_modes(cli, modes::default_modes())?;
            let powers = match powers_dbm {
                Some(s) => parse_numbers::<f64>(s, "--powers-dbm")?,
                None => sweeps::DEFAULT_POWERS_DBM.to_vec(),
            };
            sweeps::run_power_sweep(&config, &powers, &modes)?
        }
        Command::SweepElements { elements } => {
            let modes = requested_modes(cli, sweeps::default_element_modes())?;
            let counts = match elements {
                Some(s) => parse_numbers::<usize>(s, "--elements")?,
                None => sweeps::DEFAULT_ELEMENTS.to_vec(),
            };
            sweeps::run_element_sweep(&config, &counts, &modes)?
        }
        Command::SweepRegion { lengths } => {
            let modes = requested_modes(cli, sweeps::default_region_modes())?;
            let values = match lengths {
                Some(s) => parse_numbers::<f64>(s, "--lengths")?,
                None => sweeps::DEFAULT_LENGTHS.to_vec(),
            };
            sweeps::run_region_sweep(&config, &values, &modes)?
        }
        Command::Validate => {
            return Ok(validate::run_all());
        }
    };
    emit(cli, &output)?;
    Ok(output.all_converged)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: not every run converged (or a check failed)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
