//! `sphere-euler`: run a configured computation and write its artifacts.

mod config;
mod run;

use clap::Parser;
use config::{CommandKind, RunConfig};
use run::{Context, Failure};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "sphere-euler", version, about = "Exact solutions of the Euler equation on a rotating sphere")]
struct Cli {
    /// Command to run; taken from the config when omitted.
    #[arg(value_enum)]
    command: Option<CommandKind>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for random sampling; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel scans.
    #[arg(long)]
    threads: Option<usize>,
    /// Print nothing but errors.
    #[arg(long)]
    quiet: bool,
}

fn load(cli: &Cli) -> Result<(CommandKind, RunConfig), Failure> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let (command, mut cfg) = cfg.resolve(cli.command).map_err(Failure::Config)?;
    cfg.seed = Some(cli.seed.or(cfg.seed).unwrap_or(sphere_euler::verify::DEFAULT_SEED));
    Ok((command, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|(command, cfg)| {
        if let Some(n) = cli.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
        }
        let ctx = Context { out: cli.out.clone(), seed: cfg.seed.expect("seed set in load"), quiet: cli.quiet };
        run::run(command, &cfg, &ctx)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sphere-euler: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
