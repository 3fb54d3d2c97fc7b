use clap::Parser;
use regsde_cli::runner::{execute, Context, RunError};
use std::path::PathBuf;

/// Config-driven runner for regularization-calculus experiments.
#[derive(Parser)]
#[command(name = "regsde", version, about)]
struct Args {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replication loops (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Suppress progress lines; errors still go to stderr.
    #[arg(long)]
    quiet: bool,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let args = Args::parse();
    if let Some(n) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: cannot size worker pool: {e}");
            return 2;
        }
    }
    let loaded = match regsde_cli::config::load(&args.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let seed = args.seed.unwrap_or(loaded.config.seed);
    let out_dir = args
        .out
        .or_else(|| loaded.config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context {
        config: &loaded.config,
        config_hash: &loaded.config_hash,
        seed,
        out_dir: &out_dir,
        quiet: args.quiet,
    };
    match execute(&ctx) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            match e {
                RunError::Config(_) => 2,
                RunError::Numeric(_) => 3,
                RunError::Acceptance(_) => 4,
            }
        }
    }
}
