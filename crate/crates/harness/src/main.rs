use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cvqkd_harness::cli;
use cvqkd_harness::sweep::Workers;
use cvqkd_harness::{HarnessError, KvConfig};
use cvqkd_link::Role;

/// Monte-Carlo campaigns and reconciliation sessions for CV-QKD.
#[derive(Debug, Parser)]
#[command(name = "cvqkd", version)]
struct Cli {
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoleArg {
    Alice,
    Bob,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// FER against reconciliation efficiency.
    FerSweep,
    /// Efficiency at 10% FER against the punctured rate.
    PunctureSweep,
    /// Virtual channel noise statistics and histograms.
    NoiseHist,
    /// Per-block key rates over a turbulent free-space link.
    FsoCampaign,
    /// Efficiency/FER table for the campaign.
    GenFerTable,
    /// One side of a reconciliation session over TCP.
    Serve {
        #[arg(long, value_enum)]
        role: RoleArg,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => KvConfig::load(p)?,
        None => KvConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string());
    }
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let workers = Workers::new(threads)?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::FerSweep => cli::fer_sweep_cmd(&cfg, &workers, out),
        Command::PunctureSweep => cli::puncture_sweep_cmd(&cfg, &workers, out),
        Command::NoiseHist => cli::noise_hist_cmd(&cfg, &workers, out),
        Command::FsoCampaign => cli::fso_campaign_cmd(&cfg, &workers, out),
        Command::GenFerTable => cli::gen_fer_table_cmd(&cfg, &workers, out),
        Command::Serve { role } => {
            let role = match role {
                RoleArg::Alice => Role::Alice,
                RoleArg::Bob => Role::Bob,
            };
            cli::serve_cmd(&cfg, role, out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvqkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
