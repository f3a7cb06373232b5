//! HTTP feedback service: upload a track, get its report, open a scored
//! feedback session and chat about it. State lives in a [`FileStore`].

mod app;
pub mod backend;
pub mod config;
pub mod store;

use thiserror::Error;

pub use app::{backend_from_config, router, ApiError, AppState, BackendKind};
pub use backend::HttpBackend;
pub use config::{ConfigError, ServiceConfig};
pub use store::{FileStore, RefinementInfo, SessionRecord, TrackRecord};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("loading mock backend: {0}")]
    Mock(String),
}

/// Serves `state` on `listener` until ctrl-c.
pub async fn serve_on(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Binds `host:port` from `config` and serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let addr = format!("{}:{}", config.host, config.port);
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    serve_on(listener, state).await?;
    Ok(())
}
