//! HTTP control service for the epistemic engine.
//!
//! One writer task owns the [`Engine`] and applies commands from a bounded
//! queue in arrival order; after every command it publishes a snapshot that
//! read endpoints serve from. A full queue answers 429.

mod api;
pub mod config;

use std::future::Future;
use std::sync::Arc;

use axum::Router;
use epistemic_core::Engine;
use tokio::sync::{mpsc, oneshot, watch};
use tokio::time::{interval_at, Instant, Interval, MissedTickBehavior};

pub use api::ApiError;
pub use config::{ServiceConfig, SourceConfig, TickMode};

/// Runs inside the writer; the returned closure delivers the reply once the
/// post-command snapshot has been published.
type Job = Box<dyn FnOnce(&mut Engine) -> Box<dyn FnOnce() + Send> + Send>;

/// Cloneable handle shared by request handlers.
#[derive(Clone)]
pub struct Service {
    commands: mpsc::Sender<Job>,
    snapshots: watch::Receiver<Arc<Engine>>,
}

impl Service {
    /// Spawns the writer task on the current tokio runtime.
    pub fn start(engine: Engine, queue_capacity: usize, tick_mode: TickMode) -> Self {
        let (commands, rx) = mpsc::channel(queue_capacity.max(1));
        let (publish, snapshots) = watch::channel(Arc::new(engine.clone()));
        tokio::spawn(writer(engine, rx, publish, tick_mode));
        Self { commands, snapshots }
    }

    pub fn from_config(config: &ServiceConfig) -> epistemic_core::Result<Self> {
        Ok(Self::start(
            config.build_engine()?,
            config.queue_capacity,
            config.tick_mode,
        ))
    }

    /// The most recently published engine snapshot.
    pub fn snapshot(&self) -> Arc<Engine> {
        self.snapshots.borrow().clone()
    }

    /// Queues `f` for the writer and waits for its result.
    pub async fn exec<R, F>(&self, f: F) -> Result<R, ApiError>
    where
        R: Send + 'static,
        F: FnOnce(&mut Engine) -> R + Send + 'static,
    {
        let (tx, rx) = oneshot::channel();
        let job: Job = Box::new(move |engine| {
            let result = f(engine);
            Box::new(move || {
                let _ = tx.send(result);
            })
        });
        self.commands.try_send(job).map_err(|e| match e {
            mpsc::error::TrySendError::Full(_) => ApiError::queue_full(),
            mpsc::error::TrySendError::Closed(_) => ApiError::unavailable(),
        })?;
        rx.await.map_err(|_| ApiError::unavailable())
    }

    /// Receiver that observes every published snapshot.
    pub(crate) fn subscribe(&self) -> watch::Receiver<Arc<Engine>> {
        self.snapshots.clone()
    }

    pub fn router(&self) -> Router {
        api::router(self.clone())
    }
}

async fn next_tick(ticker: &mut Option<Interval>) {
    match ticker {
        Some(t) => {
            t.tick().await;
        }
        None => std::future::pending().await,
    }
}

async fn writer(
    mut engine: Engine,
    mut rx: mpsc::Receiver<Job>,
    publish: watch::Sender<Arc<Engine>>,
    tick_mode: TickMode,
) {
    let mut ticker = tick_mode.period().map(|p| {
        let mut t = interval_at(Instant::now() + p, p);
        t.set_missed_tick_behavior(MissedTickBehavior::Delay);
        t
    });
    loop {
        let deliver = tokio::select! {
            job = rx.recv() => match job {
                Some(job) => Some(job(&mut engine)),
                None => break,
            },
            () = next_tick(&mut ticker) => {
                engine.tick();
                None
            }
        };
        publish.send_replace(Arc::new(engine.clone()));
        if let Some(deliver) = deliver {
            deliver();
        }
    }
}

/// Binds `config.bind` and serves until `shutdown` resolves.
pub async fn serve(config: &ServiceConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> anyhow::Result<()> {
    let service = Service::from_config(config)?;
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, service.router())
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}
