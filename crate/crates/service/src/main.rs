use anyhow::Context;
use clap::Parser;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime};
use yardtwin_core::events::read_log_path;
use yardtwin_core::YardLayout;
use yardtwin_service::{router, AppState};

/// Serves the yard twin over HTTP.
#[derive(Debug, Parser)]
#[command(name = "yardtwin-server", version)]
struct Args {
    /// Yard layout JSON.
    #[arg(long, env = "YARDTWIN_LAYOUT")]
    layout: PathBuf,
    /// Event log: a JSONL file, or a directory of them read in name order.
    #[arg(long, env = "YARDTWIN_LOG")]
    log: PathBuf,
    #[arg(long, env = "YARDTWIN_LISTEN", default_value = "127.0.0.1:8080")]
    listen: String,
    /// Simulation jobs run at most this many at a time.
    #[arg(long, env = "YARDTWIN_WORKERS", default_value_t = 2)]
    workers: usize,
    /// How often the log is checked for new events, in milliseconds; 0 disables.
    #[arg(long, env = "YARDTWIN_POLL_MS", default_value_t = 2000)]
    poll_ms: u64,
}

// latest modification time under `path`
fn stamp(path: &Path) -> Option<SystemTime> {
    if path.is_dir() {
        std::fs::read_dir(path)
            .ok()?
            .filter_map(|e| e.ok()?.metadata().ok()?.modified().ok())
            .max()
    } else {
        std::fs::metadata(path).ok()?.modified().ok()
    }
}

async fn follow(state: AppState, path: PathBuf, every: Duration) {
    let mut seen = stamp(&path);
    let mut tick = tokio::time::interval(every);
    loop {
        tick.tick().await;
        let now = stamp(&path);
        if now == seen {
            continue;
        }
        seen = now;
        let p = path.clone();
        match tokio::task::spawn_blocking(move || read_log_path(&p)).await {
            Ok(Ok(log)) => {
                tracing::info!(events = log.len(), "log reloaded");
                state.ingest(log);
            }
            Ok(Err(e)) => tracing::warn!(error = %e, "log reload failed; keeping previous events"),
            Err(e) => tracing::warn!(error = %e, "log reload task failed"),
        }
    }
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let args = Args::parse();

    let text = std::fs::read_to_string(&args.layout).with_context(|| format!("reading {}", args.layout.display()))?;
    let layout = YardLayout::from_json(&text).with_context(|| format!("parsing {}", args.layout.display()))?;
    let log = read_log_path(&args.log).with_context(|| format!("reading {}", args.log.display()))?;
    tracing::info!(blocks = layout.blocks().len(), events = log.len(), "mirror loaded");

    let state = AppState::new(layout, log, args.workers);
    if args.poll_ms > 0 {
        tokio::spawn(follow(state.clone(), args.log.clone(), Duration::from_millis(args.poll_ms)));
    }

    let listener = tokio::net::TcpListener::bind(&args.listen)
        .await
        .with_context(|| format!("binding {}", args.listen))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await?;
    Ok(())
}
