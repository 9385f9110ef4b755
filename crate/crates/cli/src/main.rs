use std::net::{IpAddr, SocketAddr};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use qmonty_cli::api;
use qmonty_cli::simulate::{simulate, SimulateArgs};

#[derive(Debug, Parser)]
#[command(name = "qmonty", version, about = "Quantum Monty Hall simulator and game service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a batch experiment and print a report.
    Simulate(SimulateArgs),
    /// Serve the JSON session API.
    Serve {
        /// Port to listen on; QMONTY_PORT takes precedence.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Seconds of inactivity before a session is dropped.
        #[arg(long, default_value_t = api::DEFAULT_IDLE_TIMEOUT.as_secs())]
        idle_timeout: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    match cli.command {
        Command::Simulate(args) => match simulate(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("qmonty: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Serve {
            port,
            bind,
            idle_timeout,
        } => {
            let port = match std::env::var("QMONTY_PORT") {
                Ok(value) => match value.parse() {
                    Ok(p) => p,
                    Err(_) => {
                        eprintln!("qmonty: QMONTY_PORT={value:?} is not a port number");
                        return ExitCode::from(1);
                    }
                },
                Err(_) => port,
            };
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("qmonty: cannot start runtime: {e}");
                    return ExitCode::from(1);
                }
            };
            let addr = SocketAddr::new(bind, port);
            match runtime.block_on(api::serve(addr, Duration::from_secs(idle_timeout))) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("qmonty: cannot serve on {addr}: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
