use std::path::PathBuf;
use std::process::ExitCode;

use achunify_cli::{bench_corpus, parse_problem, run_solve, RunOptions};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_INPUT: u8 = 3;
const EXIT_UNSOUND: u8 = 4;

#[derive(Parser)]
#[command(name = "achunify", version, about = "Bounded ACh unification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem in FILE.
    Solve {
        file: PathBuf,
        /// Bound on h-depth; overrides the file header.
        #[arg(long)]
        bound: Option<u32>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Verify each unifier before printing it.
        #[arg(long)]
        check: bool,
        /// Drop unifiers that are instances of others.
        #[arg(long)]
        minimize: bool,
        #[arg(long)]
        max_branches: Option<usize>,
        #[arg(long)]
        timeout_ms: Option<u64>,
    },
    /// Run every problem listed in DIR/manifest.json.
    Bench {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Solve {
            file,
            bound,
            format,
            check,
            minimize,
            max_branches,
            timeout_ms,
        } => {
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", file.display());
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            let problem = match parse_problem(&text) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {}: {e}", file.display());
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            let opts = RunOptions {
                bound,
                check,
                minimize,
                max_branches,
                timeout_ms,
            };
            match run_solve(&problem, &opts) {
                Ok(report) => {
                    match format {
                        Format::Text => print!("{}", report.to_text()),
                        Format::Json => println!("{}", report.to_json()),
                    }
                    ExitCode::from(report.status.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_UNSOUND)
                }
            }
        }
        Command::Bench { dir, format } => match bench_corpus(&dir) {
            Ok(report) => {
                match format {
                    Format::Text => print!("{}", report.to_text()),
                    Format::Json => println!("{}", report.to_json()),
                }
                if report.all_match() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_INPUT)
            }
        },
    }
}
