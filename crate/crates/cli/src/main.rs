//! `dstft` command-line front end.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 I/O or file format error,
//! 4 numerically degenerate input (pairing, frame, complex frequency).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod manifest;
mod parse;

use manifest::CliError;

#[derive(Parser, Debug)]
#[command(name = "dstft", version, about = "Directional short-time Fourier transform toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Accumulate synthesis sums in a fixed order (default).
    #[arg(long, global = true, conflicts_with = "fast_reduce")]
    pub deterministic: bool,
    /// Parallel tree reduction; results may differ in the last bits between runs.
    #[arg(long, global = true)]
    pub fast_reduce: bool,
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a synthetic signal to an SFLD file.
    Gen(commands::GenArgs),
    /// Forward transform of an SFLD signal to a DSTC coefficient file.
    Dstft(commands::DstftArgs),
    /// Synthesis (and by default inversion) of a DSTC coefficient file.
    Synth(commands::SynthArgs),
    /// Forward transform followed by inversion, with error metrics.
    Roundtrip(commands::TransformArgs),
    /// Parseval identity check on the canonical frame.
    Parseval(commands::ParsevalArgs),
    /// Window-change identity check and convergence table.
    WindowCompare(commands::WindowCompareArgs),
    /// Wave-front map from cone decay fits.
    Wavefront(commands::WavefrontArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dstft: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.global.out_dir).map_err(|e| {
        CliError::io(format!("cannot create output directory {}: {e}", cli.global.out_dir.display()))
    })?;
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => commands::gen(g, a),
        Command::Dstft(a) => commands::dstft(g, a),
        Command::Synth(a) => commands::synth(g, a),
        Command::Roundtrip(a) => commands::roundtrip(g, a),
        Command::Parseval(a) => commands::parseval(g, a),
        Command::WindowCompare(a) => commands::window_compare(g, a),
        Command::Wavefront(a) => commands::wavefront(g, a),
    }
}
