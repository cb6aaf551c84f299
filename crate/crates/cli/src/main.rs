use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use confgraph_cli::{run, CliError, ExperimentConfig, Mode, RunOptions};

/// Simulates hopcounts, components and branching-process limits of the
/// configuration model.
#[derive(Debug, Parser)]
#[command(name = "confgraph", version)]
struct Args {
    /// One of hopcount, components, bp-w, limit-law, coupling-diagnostics, fig1, fig2.
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Computes hopcounts by pairing all stubs and running BFS.
    #[arg(long)]
    oracle_bfs: bool,
}

fn execute(args: Args) -> Result<usize, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(m) = config.mode {
        if m != args.mode {
            return Err(CliError::Config(format!("config is for mode {m}, not {}", args.mode)));
        }
    }
    config.mode = Some(args.mode);
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.oracle_bfs |= args.oracle_bfs;
    if args.threads == Some(0) {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    let opts = RunOptions {
        out: args.out,
        threads: args.threads,
    };
    let manifest = run(&config, &opts)?;
    Ok(manifest.cap_breaches)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(args) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(breaches) => {
            eprintln!("{}", CliError::CapBreach(breaches));
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("confgraph: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
