use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seqauction_cli::config::load_scenario;
use seqauction_cli::manifest::{Command, RunManifest};
use seqauction_cli::run::run_experiment;
use seqauction_cli::Failure;

/// Sequential first-price auctions: simulation, equilibrium checks and price-of-anarchy
/// estimates. Every run writes a manifest and CSV outputs into the output directory.
#[derive(Parser)]
#[command(name = "seqauction", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Built-in scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario's sample count.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
}

#[derive(Subcommand)]
enum Sub {
    /// Play the auction and write one trace per run.
    Simulate(Common),
    /// Estimate the ratio of optimal to realised expected welfare.
    Poa(Common),
    /// Look for profitable unilateral deviations from the scenario's strategies.
    Verify(Common),
    /// Measure the grab-bid deviation of one player against its utility bound.
    Deviate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        player: usize,
        /// The deviator's value.
        #[arg(long, default_value_t = 0.5)]
        value: f64,
    },
    /// Tabulate the two-item equilibrium bid functions.
    EmitBidfn {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Discretise the scenario, evaluate its strategies exactly and optionally run best replies.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 101)]
        types: usize,
        #[arg(long, default_value_t = 101)]
        bids: usize,
        #[arg(long, default_value_t = 0)]
        sweeps: usize,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn prepare(common: &Common, command: Command) -> Result<(RunManifest, PathBuf), Failure> {
    let mut file = load_scenario(&common.scenario)?.file;
    if let Some(seed) = common.seed {
        file.seed = seed;
    }
    if let Some(samples) = common.samples {
        file.samples = samples;
    }
    if !(common.tol.is_finite() && common.tol >= 0.0) {
        return Err(Failure::Schema(format!("tolerance {} must be finite and non-negative", common.tol)));
    }
    let (seed, samples) = (file.seed, file.samples);
    let manifest = RunManifest::new(command, Some(common.scenario.clone()), Some(file), seed, samples, common.tol);
    Ok((manifest, common.out.clone()))
}

fn dispatch(cli: Cli) -> Result<String, Failure> {
    let (manifest, out) = match cli.command {
        Sub::Simulate(c) => prepare(&c, Command::Simulate)?,
        Sub::Poa(c) => prepare(&c, Command::Poa)?,
        Sub::Verify(c) => prepare(&c, Command::Verify)?,
        Sub::Deviate { common, player, value } => prepare(&common, Command::Deviate { player, value })?,
        Sub::Solve { common, types, bids, sweeps } => prepare(&common, Command::Solve { types, bids, sweeps })?,
        Sub::EmitBidfn { out, points } => (RunManifest::new(Command::EmitBidfn { points }, None, None, 0, 0, 0.0), out),
        Sub::Rerun { manifest, out } => {
            let old = RunManifest::load(&manifest)?;
            let fresh = RunManifest::new(old.command, old.scenario_source, old.scenario, old.seed, old.samples, old.tol);
            (fresh, out)
        }
    };
    run_experiment(&manifest, &out)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
