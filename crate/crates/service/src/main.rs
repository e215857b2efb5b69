use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use epistemic_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "epistemic-serve", version, about = "Serve an epistemic engine over HTTP")]
struct Args {
    /// TOML service config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured bind address.
    #[arg(long)]
    bind: Option<SocketAddr>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ServiceConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ServiceConfig::default(),
    };
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    epistemic_service::serve(&config, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
