//! `dsw` — disparity sliding window proposals from the command line.
//!
//! Subcommands: `theory`, `generate`, `evaluate`, `synth`, `serve`.
//! Configuration precedence: flag > config file (`--config` or the
//! `DSW_CONFIG` environment variable) > built-in default. With `--server`
//! (or `DSW_SERVER`) the work is delegated to a running `dsw serve`
//! instance; outputs are identical either way.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

mod cfgfile;
mod evaluate_cmd;
mod generate_cmd;
mod parse;
mod synth_cmd;
mod theory_cmd;

use std::fmt::Display;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfgfile::FileCfg;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration: exit 1.
    Usage(String),
    /// Valid request that failed while running: exit 2.
    Runtime(String),
}

impl CliError {
    pub fn usage(e: impl Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn runtime(e: impl Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<dsw_client::ClientError> for CliError {
    fn from(e: dsw_client::ClientError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "dsw",
    version,
    about = "Disparity sliding window object proposals",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    /// Flat key=value config file (fallback: DSW_CONFIG env var).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Delegate to a running service, e.g. http://127.0.0.1:8080
    /// (fallback: DSW_SERVER env var, then the 'server' config key).
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error tolerances and hypothesis counts of conventional sliding-window
    /// search; writes error_curves.csv and hypothesis_counts.csv.
    Theory(theory_cmd::TheoryArgs),
    /// Proposals for one disparity image; writes a proposal CSV and
    /// optionally the scanned-anchor mask.
    Generate(generate_cmd::GenerateArgs),
    /// Recall / proposals-per-image over a KITTI-style scene directory.
    Evaluate(evaluate_cmd::EvaluateArgs),
    /// Synthetic scenes with planted objects, KITTI-style layout.
    Synth(synth_cmd::SynthArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(clap::Args)]
struct ServeArgs {
    /// Address to bind (port 0 picks a free port).
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

fn resolve_server(flag: &Option<String>, cfg: &FileCfg) -> Option<String> {
    flag.clone()
        .or_else(|| std::env::var("DSW_SERVER").ok().filter(|s| !s.is_empty()))
        .or_else(|| cfg.raw("server").map(str::to_string))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = FileCfg::load(cli.config.as_deref())?;
    let server = resolve_server(&cli.server, &cfg);
    match cli.command {
        Command::Theory(args) => theory_cmd::run(&args, &cfg, server.as_deref()),
        Command::Generate(args) => generate_cmd::run(&args, &cfg, server.as_deref()),
        Command::Evaluate(args) => evaluate_cmd::run(&args, &cfg, server.as_deref()),
        Command::Synth(args) => synth_cmd::run(&args, &cfg, server.as_deref()),
        Command::Serve(args) => {
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
            runtime
                .block_on(dsw_service::run(args.addr))
                .map_err(CliError::runtime)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
