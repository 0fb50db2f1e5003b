use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use wellcast::config::{load_config, Overrides, Stage};
use wellcast::pipeline::execute;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Synth,
    Condition,
    Reshape,
    Train,
    Forecast,
    Evaluate,
    Gridsearch,
    Decline,
    Plot,
    /// Every stage selected in `[pipeline]`, in workflow order.
    Pipeline,
}

/// Forecast oil, gas and water rates from injection history.
#[derive(Debug, Parser)]
#[command(name = "wellcast", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();
    let name = format!("{:?}", cli.command).to_lowercase();
    let stages = match cli.command {
        Command::Pipeline => vec![],
        _ => vec![Stage::parse(&name).expect("every subcommand names a stage")],
    };
    let ov = Overrides {
        out: cli.out,
        seed: cli.seed,
    };
    let result = load_config(&cli.config, &stages, &ov).and_then(|cfg| execute(cfg, &name));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wellcast: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
