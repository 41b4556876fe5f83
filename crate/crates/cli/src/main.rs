use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mirrorport::protocol::Scheme;
use mirrorport_cli::{
    cmd_couplings, cmd_curve, cmd_readout, cmd_verify, CliError, Resolved, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "mirrorport",
    version,
    about = "Teleportation of light states onto a vibrating mirror"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Couplings, thermal occupation and regime checks.
    Couplings(Common),
    /// Fidelity curve over time plus a summary of maxima.
    Curve {
        #[command(flatten)]
        common: Common,
        /// Tabulate the fidelity with the anti-Stokes mode discarded.
        #[arg(long)]
        no_heterodyne: bool,
    },
    /// Runs every tolerance gate; exits with 2 if one fails.
    Verify(Common),
    /// Readout times, weights and decoherence windows.
    Readout(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points per period.
    #[arg(long)]
    grid: Option<usize>,
    /// Number of periods tabulated.
    #[arg(long)]
    periods: Option<u32>,
}

impl Common {
    fn load(&self) -> Result<(Resolved, PathBuf), CliError> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(g) = self.grid {
            config.sweep.grid_points = g;
        }
        if let Some(p) = self.periods {
            config.sweep.periods = p;
        }
        let out = self
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((config.resolve()?, out))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Couplings(c) => {
            let (r, out) = c.load()?;
            print!("{}", cmd_couplings(&r, &out)?.render());
        }
        Command::Curve {
            common,
            no_heterodyne,
        } => {
            let (r, out) = common.load()?;
            let scheme = if no_heterodyne {
                Scheme::TracedOut
            } else {
                Scheme::Heterodyne
            };
            print!("{}", cmd_curve(&r, &out, scheme)?.render());
            println!("wrote {}", out.join("curve.csv").display());
        }
        Command::Verify(c) => {
            let (r, out) = c.load()?;
            let report = cmd_verify(&r, &out)?;
            print!("{}", report.render());
            if !report.passed() {
                let failed: Vec<_> = report
                    .gates
                    .iter()
                    .filter(|g| !g.passed)
                    .map(|g| g.name.clone())
                    .collect();
                return Err(CliError::Gate(failed.join(", ")));
            }
        }
        Command::Readout(c) => {
            let (r, out) = c.load()?;
            print!("{}", cmd_readout(&r, &out)?.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
