use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpdim::dimension::exponent;
use lpdim_cli::{list_scenarios, run, verify, CliError, CliResult, Fault, RunConfig};

#[derive(Parser)]
#[command(name = "lpdim", version, about = "Windowed ℓ^p dimension estimates and property checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one scenario on a window × ε grid.
    Run(Common),
    /// Run the property suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Deliberately break a component (mazur-sign).
        #[arg(long, value_name = "FAULT")]
        inject_fault: Option<Fault>,
    },
    /// List the built-in scenarios.
    List {
        /// Print a JSON array.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: Option<String>,
    /// JSON run configuration; flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Exponent in [1, ∞]; `inf` for ∞.
    #[arg(long, value_parser = exponent::parse)]
    p: Option<f64>,
    /// Comma-separated window indices, ascending.
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<usize>>,
    /// Comma-separated ε values, descending.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Comma-separated check groups for `verify`.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    /// Worker threads; LPDIM_JOBS takes precedence.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(short, long)]
    verbose: bool,
}

impl Common {
    fn into_config(self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.scenario.is_some() {
            c.scenario = self.scenario;
            c.spec = None;
        }
        c.p = self.p.or(c.p);
        c.windows = self.windows.or(c.windows);
        c.eps = self.eps.or(c.eps);
        c.seed = self.seed.unwrap_or(c.seed);
        c.out = self.out.or(c.out);
        c.csv = self.csv.or(c.csv);
        if let Some(only) = self.only {
            c.only = only;
        }
        c.jobs = self.jobs.or(c.jobs);
        c.verbose |= self.verbose;
        Ok(c)
    }
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Run(common) => run(&common.into_config()?),
        Command::Verify { common, inject_fault } => verify(&common.into_config()?, inject_fault.unwrap_or_default()),
        Command::List { json } => {
            print!("{}", list_scenarios(json));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("see `lpdim --help`");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
