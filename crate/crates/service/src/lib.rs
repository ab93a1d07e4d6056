//! REST service: projects with revisioned catalogs, a per-project FIFO
//! solve queue, paged results and assembly artifacts.

pub mod api;
pub mod app;
pub mod error;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use app::{App, Config};
pub use error::ServiceError;
pub use store::{DocumentStore, FileStore, MemoryStore};

/// Environment variable naming the storage root.
pub const STORAGE_ENV: &str = "MODSYNTH_STORAGE";
/// Environment variable naming a directory to serve at `/`.
pub const UI_ENV: &str = "MODSYNTH_UI";

/// `explicit`, else `$MODSYNTH_STORAGE`, else `./modsynth-data`.
pub fn storage_root(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(STORAGE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("modsynth-data"))
}

/// Serves on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr, storage: PathBuf, mut config: Config) -> Result<(), ServiceError> {
    if config.ui_dir.is_none() {
        config.ui_dir = std::env::var_os(UI_ENV).map(PathBuf::from);
    }
    let app = App::open(Arc::new(FileStore::new(&storage)), config)?;
    let listener =
        tokio::net::TcpListener::bind(addr).await.map_err(|e| ServiceError::Internal(format!("bind {addr}: {e}")))?;
    eprintln!("modsynth service listening on http://{} (storage {})", addr, storage.display());
    axum::serve(listener, api::router(app)).await.map_err(|e| ServiceError::Internal(e.to_string()))
}
