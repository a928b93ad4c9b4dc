use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use idl_core::criteria::Theorem;
use idl_lab::commands::{self, CommandOutcome, Options, SweepSpec};
use idl_lab::presets::{preset, PRESET_NAMES};
use idl_lab::report::Status;
use idl_lab::scenario::Scenario;
use idl_lab::{LabError, LabResult};

/// Simulate intermittently damped evolution equations and check their
/// stability criteria.
#[derive(Debug, Parser)]
#[command(name = "idl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario and write the energy trace CSV.
    Simulate(Common),
    /// Evaluate the stability theorems and write the report JSON.
    Check(Common),
    /// Simulate, compare every interval with its estimate, write both.
    Verify(Common),
    /// Verify the scenario over a grid of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `<param>=<start>:<stop>:<steps>`, param a dotted path into the scenario.
        #[arg(long)]
        sweep: SweepSpec,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, env = "IDL_OUT_DIR")]
    out: Option<PathBuf>,
    /// Theorem to check (repeatable).
    #[arg(long)]
    theorem: Vec<Theorem>,
    /// Master seed for randomized estimates.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn scenario(&self) -> LabResult<Scenario> {
        let mut scenario = match (&self.scenario, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
                Scenario::from_json(&text, path)?
            }
            (None, Some(name)) => preset(name).ok_or_else(|| {
                LabError::Usage(format!(
                    "unknown preset `{name}` (expected one of {})",
                    PRESET_NAMES.join(", ")
                ))
            })?,
            (None, None) => return Err(LabError::Usage("give --scenario or --preset".into())),
        };
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        Ok(scenario)
    }

    fn options(&self) -> Options {
        Options {
            out_dir: self.out.clone(),
            theorems: self.theorem.clone(),
        }
    }
}

fn execute(cli: Cli) -> LabResult<CommandOutcome> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&c.scenario()?.resolve()?, &c.options()),
        Command::Check(c) => commands::check(&c.scenario()?.resolve()?, &c.options()),
        Command::Verify(c) => commands::verify(&c.scenario()?.resolve()?, &c.options()),
        Command::Sweep { common, sweep } => {
            let scenario = common.scenario()?;
            scenario.resolve()?;
            commands::sweep(&scenario, &sweep, &common.options())
        }
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(CommandOutcome {
                status: Status::Success,
                files: Vec::new(),
                report: None,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let status = if e.use_stderr() {
                Status::Failure
            } else {
                Status::Success
            };
            return ExitCode::from(status.code() as u8);
        }
    };
    let status = match execute(cli) {
        Ok(outcome) => {
            for file in &outcome.files {
                println!("{}", file.display());
            }
            if let Some(report) = &outcome.report {
                eprintln!("verdict: {:?}", report.summary.verdict);
                for v in &report.violations {
                    eprintln!("violation on interval {}: {} at t = {}", v.interval, v.inequality, v.t);
                }
            }
            outcome.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            Status::Failure
        }
    };
    ExitCode::from(status.code() as u8)
}
