//! Command line front end and HTTP session service for fairpia.

pub mod commands;
pub mod io;
pub mod service;

/// Logs to standard error, filtered by `FAIRPIA_LOG` (default `warn`).
pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("FAIRPIA_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}
