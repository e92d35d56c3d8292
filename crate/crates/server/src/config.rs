//! Command line. Every setting has an environment fallback; an explicit flag
//! always wins.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Clone, Parser)]
#[command(name = "psn", version, about = "Portfolio social network server")]
pub struct Cli {
    /// Directory holding the snapshot and journal.
    #[arg(
        long,
        env = "PSN_STORAGE_PATH",
        default_value = "psn-data",
        global = true
    )]
    pub storage_path: PathBuf,

    /// Session lifetime in seconds.
    #[arg(long, env = "PSN_SESSION_TTL", default_value_t = 86_400, global = true)]
    pub session_ttl: u32,

    /// Page size used when a request does not ask for one.
    #[arg(long, env = "PSN_PAGE_SIZE", default_value_t = 10, global = true,
          value_parser = clap::value_parser!(u32).range(1..))]
    pub page_size: u32,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run the HTTP server.
    Serve {
        #[arg(long, env = "PSN_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "PSN_HOST", default_value = "127.0.0.1")]
        host: String,
    },
    /// Load a fixture file through the API.
    Seed { fixture: PathBuf },
    /// Print the canonical JSON export of the store.
    Dump,
}
