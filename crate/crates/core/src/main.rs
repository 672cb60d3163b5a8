use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qnd_propagators::cli::{run, RunOptions};

#[derive(Parser)]
#[command(name = "qnd-prop", version, about = "Coherent-state propagators of a two-level system in a bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a TOML task file and write its result table.
    Run {
        config: PathBuf,
        /// Override the truncation tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Output directory (default: working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Run { config, tol, out } = cli.command;
    match run(&config, &RunOptions { tol, out }) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qnd-prop: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
