use std::path::PathBuf;
use std::process::ExitCode;

use chemstack::commands::{self, AnalyzeOptions, Format, ReplayOptions, RunOptions};
use chemstack::{Error, ENV_OUT, ENV_SEED};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Chemical rate control and evolved protocol stacks.
#[derive(Parser)]
#[command(name = "chemstack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve protocol stacks for a scenario.
    Run {
        /// Scenario TOML file, or a preset name (e1, e1-cross, e2, e3).
        scenario: PathBuf,
        #[arg(long, env = ENV_SEED, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = ENV_OUT, default_value = "out")]
        out: PathBuf,
        /// Overrides the scenario's generation count.
        #[arg(long)]
        generations: Option<usize>,
        /// Independent runs with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        runs: usize,
    },
    /// Flow analysis of a reaction file, plus the saturation curve CSV.
    Analyze {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, env = ENV_OUT, default_value = "out")]
        out: PathBuf,
        /// Smallest clamped queue level of the saturation curve.
        #[arg(long, default_value_t = 0.01)]
        curve_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        curve_max: f64,
        #[arg(long, default_value_t = 51)]
        curve_points: usize,
    },
    /// One trial of a fixed blueprint; writes rates.csv.
    Replay {
        /// Scenario TOML file, or a preset name.
        scenario: PathBuf,
        /// Blueprint text file, `-` for stdin.
        blueprint: PathBuf,
        #[arg(long, env = ENV_SEED, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = ENV_OUT, default_value = "out")]
        out: PathBuf,
    },
    /// Print the stoichiometric matrix, ODEs, conserved sums and steady state.
    DeriveOdes {
        #[command(flatten)]
        net: NetArgs,
    },
}

#[derive(Args)]
struct NetArgs {
    /// Reaction grammar file.
    file: PathBuf,
    /// Rate of the `v_src` inflow (or of the only inflow).
    #[arg(long)]
    vsrc: Option<f64>,
    /// Inflow rate as name=value; repeatable.
    #[arg(long = "inflow", value_parser = commands::parse_inflow)]
    inflows: Vec<(String, f64)>,
    /// Relative distance from steady state that ends the settle time.
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

impl NetArgs {
    fn options(self, out: Option<PathBuf>, curve: (f64, f64, usize)) -> AnalyzeOptions {
        let mut inflows = self.inflows;
        if let Some(v) = self.vsrc {
            inflows.push(("v_src".into(), v));
        }
        AnalyzeOptions {
            file: self.file,
            inflows,
            tolerance: self.tolerance,
            format: match self.format {
                OutputFormat::Text => Format::Text,
                OutputFormat::Json => Format::Json,
            },
            out,
            curve,
        }
    }
}

fn dispatch(cmd: Command) -> Result<Vec<String>, Error> {
    match cmd {
        Command::Run { scenario, seed, out, generations, runs } => {
            commands::run(&RunOptions { scenario, seed, out, generations, runs })
        }
        Command::Replay { scenario, blueprint, seed, out } => {
            commands::replay_blueprint(&ReplayOptions { scenario, blueprint, seed, out })
        }
        Command::Analyze { net, out, curve_min, curve_max, curve_points } => {
            commands::analyze_file(&net.options(Some(out), (curve_min, curve_max, curve_points))).map(|r| vec![r])
        }
        Command::DeriveOdes { net } => commands::analyze_file(&net.options(None, (1.0, 1.0, 1))).map(|r| vec![r]),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(lines) => {
            for l in lines {
                if l.ends_with('\n') {
                    print!("{l}");
                } else {
                    println!("{l}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
