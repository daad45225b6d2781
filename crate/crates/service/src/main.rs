use std::net::SocketAddr;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use risim_service::{router, AppState, Limits};

#[derive(Parser)]
#[command(
    name = "risim-service",
    version,
    about = "HTTP service for the RIS channel simulator"
)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Seconds a finished heatmap job stays available.
    #[arg(long, default_value_t = 600)]
    job_ttl_secs: u64,
    #[arg(long, default_value_t = 10_000)]
    max_realizations: u64,
    #[arg(long, default_value_t = 64)]
    max_grid_side: usize,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let limits = Limits {
        max_realizations: args.max_realizations,
        max_grid_side: args.max_grid_side,
        job_ttl: Duration::from_secs(args.job_ttl_secs),
        ..Limits::default()
    };
    let listener = match tokio::net::TcpListener::bind(args.listen).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on {}: {e}", args.listen);
            return ExitCode::from(4);
        }
    };
    eprintln!("listening on {}", args.listen);
    match axum::serve(listener, router(AppState::new(limits))).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
