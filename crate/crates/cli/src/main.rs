use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qisim::config::RunConfig;
use qisim::{run, CliError, Command};

/// Photon-pair, slow-light memory and stored-entanglement simulator.
#[derive(Parser)]
#[command(name = "qisim", version)]
struct Cli {
    command: Command,
    /// TOML file with (dotted) keys overriding the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override, applied after the config file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seed = std::env::var("QISIM_SEED").ok();
    let result = RunConfig::load(cli.config.as_deref(), &cli.sets, env_seed.as_deref()).and_then(|cfg| {
        let out = cli.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
        run(cli.command, &cfg, &out).map(|records| (out, records))
    });
    match result {
        Ok((out, records)) => {
            println!("{}: wrote {} files and manifest.json to {}", cli.command.name(), records.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qisim {}: {e}", cli.command.name());
            report_exit(&e)
        }
    }
}

fn report_exit(e: &CliError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
