use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nclab_cli::config::{ExperimentConfig, Mode};
use nclab_cli::{run, verify, Failure};

/// Multi-time correlation functions of non-colliding Brownian motions.
#[derive(Parser, Debug)]
#[command(name = "nclab", version)]
struct Cli {
    mode: Mode,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`, default `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to NCLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("NCLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Config(format!("NCLAB_THREADS='{v}' is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Some(k) = threads(cli.threads)? {
        if k == 0 {
            return Err(Failure::Config("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = cli.out {
        config.output = Some(o);
    }
    let config = config.resolve(cli.mode)?;
    let dir = config.output.clone().unwrap_or_else(|| PathBuf::from("."));
    let tables = run::run(&config)?;
    for t in &tables {
        let path = t.write(&dir, &config)?;
        eprintln!("wrote {}", path.display());
    }
    if cli.mode == Mode::Verify {
        let failed = verify::failed_in(&tables[0]);
        if !failed.is_empty() {
            return Err(Failure::Numerical(format!("failed checks: {}", failed.join("; "))));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
