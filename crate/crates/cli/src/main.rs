use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mpx::batch::{self, BatchArgs};
use mpx::server::{self, AppState, ServiceConfig};

/// Explore the local minima of motion planning problems.
#[derive(Debug, Parser)]
#[command(name = "mpx", version)]
struct Cli {
    #[command(subcommand)]
    command: Mode,
}

#[derive(Debug, Subcommand)]
enum Mode {
    /// Expands a tree without interaction and prints its document.
    Batch(BatchArgs),
    /// Runs the session service.
    Serve {
        /// Port on 127.0.0.1; 0 picks a free one.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of extra scenario files.
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
        /// Appends session events here as JSON lines.
        #[arg(long)]
        event_log: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Mode::Batch(args) => match batch::run(&args) {
            Ok(text) => {
                if args.out.is_none() {
                    print!("{text}");
                }
                ExitCode::SUCCESS
            }
            Err(f) => {
                eprintln!("error: {f}");
                ExitCode::from(f.exit_code() as u8)
            }
        },
        Mode::Serve { port, host, scenario_dir, event_log } => {
            if let Some(dir) = &scenario_dir {
                if !dir.is_dir() {
                    eprintln!("error: scenario directory {} does not exist", dir.display());
                    return ExitCode::from(2);
                }
            }
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: cannot start runtime: {e}");
                    return ExitCode::FAILURE;
                }
            };
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::bind((host.as_str(), port)).await {
                    Ok(l) => l,
                    Err(e) => {
                        eprintln!("error: cannot listen on {host}:{port}: {e}");
                        return ExitCode::from(2);
                    }
                };
                let state = match AppState::new(ServiceConfig { scenario_dir, event_log }) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("error: cannot open event log: {e}");
                        return ExitCode::from(2);
                    }
                };
                if let Ok(addr) = listener.local_addr() {
                    println!("listening on http://{addr}");
                    let _ = std::io::stdout().flush();
                }
                match server::serve(listener, state).await {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::FAILURE
                    }
                }
            })
        }
    }
}
