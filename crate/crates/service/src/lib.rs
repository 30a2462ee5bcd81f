//! HTTP/JSON API over feature models, whole-model analyses and live
//! configuration sessions. The wire format is described in `docs/api.md`.
//!
//! ```no_run
//! # async fn run() -> std::io::Result<()> {
//! use featline_service::{serve, AppState, Config};
//!
//! let listener = tokio::net::TcpListener::bind("127.0.0.1:8080").await?;
//! serve(listener, AppState::new(Config::default())).await
//! # }
//! ```

mod api;
mod error;
mod state;
mod summary;

use std::path::PathBuf;
use std::time::Duration;

use axum::handler::HandlerWithoutStateExt;
use axum::http::{header, HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use state::{AppState, ModelEntry};
pub use summary::ModelSummary;

/// Server settings. [`Config::from_env`] reads the `FEATLINE_*` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Wall-clock budget for any single solver call.
    pub time_budget: Duration,
    /// Sessions idle for longer than this are dropped.
    pub session_ttl: Duration,
    /// Directory of static UI assets served for paths outside the API.
    pub static_dir: Option<PathBuf>,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
    /// Cap on the remaining-configuration count in session views.
    pub view_cap: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            time_budget: Duration::from_secs(10),
            session_ttl: Duration::from_secs(3600),
            static_dir: None,
            cors_origin: None,
            view_cap: featline_core::session::DEFAULT_VIEW_CAP,
        }
    }
}

impl Config {
    /// Defaults overridden by `FEATLINE_TIME_BUDGET_MS`,
    /// `FEATLINE_SESSION_TTL_SECS`, `FEATLINE_STATIC_DIR`,
    /// `FEATLINE_CORS_ORIGIN` and `FEATLINE_VIEW_CAP`.
    pub fn from_env() -> Result<Config, String> {
        Config::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Config, String> {
        let num = |k: &str| -> Result<Option<u64>, String> {
            get(k)
                .map(|v| v.trim().parse::<u64>().map_err(|e| format!("{k}={v}: {e}")))
                .transpose()
        };
        let mut c = Config::default();
        if let Some(ms) = num("FEATLINE_TIME_BUDGET_MS")? {
            c.time_budget = Duration::from_millis(ms);
        }
        if let Some(s) = num("FEATLINE_SESSION_TTL_SECS")? {
            c.session_ttl = Duration::from_secs(s);
        }
        if let Some(cap) = num("FEATLINE_VIEW_CAP")? {
            c.view_cap = cap.max(1);
        }
        c.static_dir = get("FEATLINE_STATIC_DIR").filter(|s| !s.is_empty()).map(PathBuf::from);
        c.cors_origin = get("FEATLINE_CORS_ORIGIN").filter(|s| !s.is_empty());
        Ok(c)
    }
}

/// All API routes, CORS, and static assets when configured.
pub fn router(state: AppState) -> Router {
    let cors = match state.config().cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(origin)) => CorsLayer::new().allow_origin(origin),
        _ => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods([Method::GET, Method::POST, Method::DELETE])
    .allow_headers([header::CONTENT_TYPE]);

    let static_dir = state.config().static_dir.clone();
    let api = Router::new()
        .route("/health", get(api::health))
        .route("/models", post(api::create_model))
        .route("/models/{id}", get(api::get_model))
        .route("/models/{id}/analyses", post(api::run_analysis))
        .route("/sessions", post(api::create_session))
        .route("/sessions/{id}", get(api::get_session).delete(api::delete_session))
        .route("/sessions/{id}/log", get(api::get_log))
        .route("/sessions/{id}/decisions", post(api::decide))
        .route("/sessions/{id}/constraints", post(api::add_constraint))
        .route("/sessions/{id}/undo", post(api::undo))
        .route("/sessions/{id}/solutions/next", post(api::next_solution))
        .route("/sessions/{id}/optimize", post(api::optimize))
        .method_not_allowed_fallback(api::method_not_allowed)
        .with_state(state);
    let api = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).not_found_service(api::not_found.into_service())),
        None => api.fallback(api::not_found),
    };
    api.layer(cors)
}

/// Serves the API on `listener` until Ctrl-C, evicting idle sessions in the
/// background.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    let every = (state.config().session_ttl / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    let sweeper = state.clone();
    let sweep = tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            sweeper.evict_idle();
        }
    });
    let r = axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweep.abort();
    r
}
