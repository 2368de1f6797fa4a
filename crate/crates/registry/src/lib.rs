//! Central registry where vendors publish self-audit reports, auditors
//! record findings and anyone can query metrics, badges and the ledger.

mod api;
pub mod auth;
pub mod badge;
pub mod clock;
pub mod config;
pub mod error;
pub mod store;

use std::future::Future;
use std::sync::{Arc, Mutex};

use axum::Router;
use tokio::net::TcpListener;

pub use api::sample_services;
pub use auth::Role;
pub use badge::{BadgeState, BadgeStatus};
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::{ConfigError, RegistryConfig};
pub use error::RegistryError;

#[derive(Clone)]
pub struct Registry {
    state: Arc<api::AppState>,
}

impl Registry {
    pub fn open(config: RegistryConfig, clock: Arc<dyn Clock>) -> Result<Self, RegistryError> {
        let store = store::Store::open(&config.data_dir)?;
        Ok(Self {
            state: Arc::new(api::AppState {
                config,
                clock,
                store: Mutex::new(store),
            }),
        })
    }

    pub fn router(&self) -> Router {
        api::router(self.state.clone())
    }

    pub fn config(&self) -> &RegistryConfig {
        &self.state.config
    }
}

/// Serves `registry` on an already-bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    registry: Registry,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, registry.router()).with_graceful_shutdown(shutdown).await
}

/// Binds the configured address and serves until Ctrl-C.
pub async fn serve(registry: Registry) -> std::io::Result<()> {
    let listener = TcpListener::bind(&registry.config().listen).await?;
    tracing::info!("registry listening on {}", listener.local_addr()?);
    serve_on(listener, registry, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
