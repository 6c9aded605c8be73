//! HTTP and websocket front end for a single live workspace.
//!
//! All requests are funnelled through one [`Worker`] thread, which owns the
//! workspace and applies commands in arrival order.

pub mod error;
pub mod routes;
pub mod stream;
pub mod worker;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::routing::{get, post};
use axum::Router;
use evoarch::workspace::Workspace;

pub use error::ApiError;
pub use worker::{Envelope, Notice, Worker};

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Idle time after which a subscriber receives a heartbeat.
    pub heartbeat: Duration,
    /// Events kept for late subscribers; older cursors get a resync marker.
    pub journal_capacity: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { heartbeat: Duration::from_secs(5), journal_capacity: 65_536 }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub worker: Worker,
    pub config: Arc<GatewayConfig>,
    tokens: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(seed: u64) -> Self {
        Self::with(GatewayConfig::default(), move || Workspace::new(seed))
    }

    pub fn with(config: GatewayConfig, make: impl FnOnce() -> Workspace + Send + 'static) -> Self {
        let worker = Worker::spawn(make, config.journal_capacity);
        AppState { worker, config: Arc::new(config), tokens: Arc::new(AtomicU64::new(1)) }
    }

    fn next_token(&self) -> u64 {
        self.tokens.fetch_add(1, Ordering::Relaxed)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/bindings", get(routes::bindings))
        .route("/v1/behaviours", get(routes::behaviours))
        .route("/v1/eval", post(routes::eval))
        .route("/v1/behaviours/:handle/decompose", post(routes::decompose))
        .route("/v1/values/:id/reify", get(routes::reify))
        .route("/v1/values/:id/execute", post(routes::execute))
        .route("/v1/reflect", post(routes::reflect))
        .route("/v1/compose", post(routes::compose))
        .route("/v1/styles/:name/check", get(routes::check_style))
        .route("/v1/trace", get(routes::trace))
        .route("/v1/events", get(stream::events))
        .with_state(state)
}

/// Serve until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
