//! Frame server: holds one loaded asset and renders PNG frames for clients
//! steering pose, camera and options over a WebSocket at `/session`.

pub mod protocol;
mod session;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::ws::WebSocketUpgrade;
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use nvol::Asset;
use serde::Serialize;
use tower_http::services::ServeDir;

pub use session::{default_orbit, orbit_camera, run_session, skeleton_message, SessionState, DEFAULT_FOV_Y, DEFAULT_SIZE};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Asset(#[from] nvol::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl ServiceError {
    pub fn category(&self) -> nvol::ErrorCategory {
        match self {
            ServiceError::Asset(e) => e.category(),
            ServiceError::Io(_) | ServiceError::Pool(_) => nvol::ErrorCategory::Io,
        }
    }
}

/// Shared by every session: the asset and one render pool.
pub struct AppState {
    pub asset: Arc<Asset>,
    pub asset_id: String,
    pub pool: rayon::ThreadPool,
}

impl AppState {
    /// `threads = None` sizes the pool to the available parallelism.
    pub fn new(asset: Asset, asset_id: impl Into<String>, threads: Option<usize>) -> Result<Self, ServiceError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .thread_name(|i| format!("render-{i}"))
            .build()
            .map_err(|e| ServiceError::Pool(e.to_string()))?;
        Ok(Self {
            asset: Arc::new(asset),
            asset_id: asset_id.into(),
            pool,
        })
    }

    /// Loads an `.nvo` asset; its file stem becomes the asset id.
    pub fn load(path: &Path, threads: Option<usize>) -> Result<Self, ServiceError> {
        let asset = nvol::assetio::read_asset(path).map_err(nvol::Error::from)?;
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("asset").to_string();
        Self::new(asset, id, threads)
    }
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    asset_id: String,
    voxels: usize,
    joints: usize,
}

async fn healthz(State(app): State<Arc<AppState>>) -> impl IntoResponse {
    Json(Health {
        status: "ok",
        asset_id: app.asset_id.clone(),
        voxels: app.asset.len(),
        joints: app.asset.joint_count(),
    })
}

async fn session(ws: WebSocketUpgrade, State(app): State<Arc<AppState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| run_session(socket, app))
}

/// Routes `/session`, `/healthz` and, with `ui_dir`, static files at `/`.
pub fn router(app: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let r = Router::new()
        .route("/session", get(session))
        .route("/healthz", get(healthz))
        .with_state(app);
    match ui_dir {
        Some(dir) => r.fallback_service(ServeDir::new(dir)),
        None => r,
    }
}

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    app: Arc<AppState>,
    ui_dir: Option<PathBuf>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    axum::serve(listener, router(app, ui_dir))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(app: Arc<AppState>, addr: SocketAddr, ui_dir: Option<PathBuf>) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!(
        "serving asset {} ({} voxels) on {}",
        app.asset_id,
        app.asset.len(),
        listener.local_addr()?
    );
    serve_on(listener, app, ui_dir, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
