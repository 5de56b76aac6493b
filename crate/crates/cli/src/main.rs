//! `kbpot`: train and evaluate Cα distance potentials from the command line.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "kbpot", version, about = "Knowledge-based Cα potentials trained by linear programming")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Where to write the run manifest (each command has a default).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic native/decoy dataset.
    Gen(GenArgs),
    /// Train a potential on a dataset.
    Train(TrainArgs),
    /// Rank natives among their decoys under a trained potential.
    Eval(EvalArgs),
    /// Print the energy of one structure.
    Score(ScoreArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub n_proteins: usize,
    #[arg(long, default_value_t = 150)]
    pub residues: usize,
    #[arg(long, default_value_t = 40)]
    pub decoys: usize,
    /// Comma-separated perturbation scales in Å.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0])]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Put the last N proteins under `test/` and the rest under `train/`.
    #[arg(long, default_value_t = 0)]
    pub test_proteins: usize,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Dataset directory (`<id>/native.pdb`, `<id>/decoys/*.pdb`) or manifest file.
    #[arg(long)]
    pub data: PathBuf,
    /// Skip residues with unknown names instead of failing.
    #[arg(long)]
    pub skip_unknown_residues: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output params file; report and manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML config file (`key = value`); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub x_bound: Option<f64>,
    #[arg(long)]
    pub decoys_per_protein: Option<usize>,
    #[arg(long)]
    pub min_separation: Option<usize>,
    /// `per-protein` or `per-decoy`.
    #[arg(long)]
    pub slack: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use `dF·X - S >= epsilon` for the margin rows.
    #[arg(long)]
    pub paper_literal_sign: bool,
    /// Recompute decoy RMSDs (`false` trusts values from a manifest).
    #[arg(long)]
    pub recompute_rmsd: Option<bool>,
    /// Also write the training LP in fixed MPS format.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// PDB file to score.
    pub structure: PathBuf,
    #[arg(long)]
    pub chain: Option<char>,
    #[arg(long)]
    pub skip_unknown_residues: bool,
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("KBPOT_LOG", "warn"))
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    let manifest = cli.manifest;
    match cli.command {
        Command::Gen(a) => commands::gen(&a, manifest),
        Command::Train(a) => commands::train(&a, manifest),
        Command::Eval(a) => commands::eval(&a, manifest),
        Command::Score(a) => commands::score(&a, manifest),
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
