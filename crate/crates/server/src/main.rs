use std::error::Error;
use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration as StdDuration;

use chrono::Duration;
use clap::Parser;
use psn_core::store::{DiskStore, Store};
use psn_server::config::{Cli, Command};
use psn_server::fixture::Fixture;
use psn_server::{transport, Api, Parts};
use tokio::net::TcpListener;
use tracing_subscriber::EnvFilter;

const PURGE_EVERY: StdDuration = StdDuration::from_secs(600);

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("PSN_LOG").unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("psn: {e}");
            ExitCode::FAILURE
        }
    }
}

fn open_api(cli: &Cli) -> Result<Arc<Api>, Box<dyn Error>> {
    let store: Arc<dyn Store> = Arc::new(DiskStore::open(&cli.storage_path)?);
    let ttl = Duration::seconds(i64::from(cli.session_ttl));
    Ok(Arc::new(Api::new(Parts::production(
        store,
        ttl,
        cli.page_size,
    ))))
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match &cli.command {
        Command::Serve { port, host } => {
            let api = open_api(&cli)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = TcpListener::bind((host.as_str(), *port)).await?;
                // tests and scripts read the bound address from here
                println!("listening on http://{}", listener.local_addr()?);
                std::io::stdout().flush()?;

                let purger = api.clone();
                tokio::spawn(async move {
                    let mut tick = tokio::time::interval(PURGE_EVERY);
                    loop {
                        tick.tick().await;
                        let api = purger.clone();
                        let purged = tokio::task::spawn_blocking(move || {
                            api.accounts().purge_expired_sessions()
                        })
                        .await;
                        if let Ok(Err(e)) = purged {
                            tracing::warn!(error = %e, "session purge failed");
                        }
                    }
                });
                transport::serve(listener, api, shutdown_signal()).await
            })?;
            drop(runtime);
            tracing::info!("stopped");
        }
        Command::Seed { fixture } => {
            let fixture = Fixture::from_path(fixture)?;
            let api = open_api(&cli)?;
            let report = fixture.load(&mut &*api)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Dump => {
            let store = DiskStore::open(&cli.storage_path)?;
            let mut out = std::io::stdout().lock();
            out.write_all(store.dump().to_canonical_json().as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

async fn shutdown_signal() {
    let interrupt = tokio::signal::ctrl_c();
    #[cfg(unix)]
    {
        let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())
            .expect("install SIGTERM handler");
        tokio::select! {
            _ = interrupt => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    let _ = interrupt.await;
    tracing::info!("shutting down");
}
