//! Transports for the session service: a WebSocket channel and a plain
//! HTTP endpoint, plus optional static files for a browser client.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use aspic::service::SessionRegistry;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub type Registry = Arc<SessionRegistry>;

/// Routes: `/ws` carries newline-delimited JSON requests, one response line
/// per request; `/rpc` takes a single request as the POST body.
pub fn router(registry: Registry, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(ws_upgrade)).route("/rpc", post(rpc)).with_state(registry);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

async fn handle(registry: &Registry, line: String) -> String {
    let registry = registry.clone();
    tokio::task::spawn_blocking(move || registry.handle_line(&line))
        .await
        .unwrap_or_else(|e| format!(r#"{{"id":"","status":"error","error":"internal failure: {e}"}}"#))
}

async fn rpc(State(registry): State<Registry>, body: String) -> Response {
    let reply = handle(&registry, body).await;
    ([(axum::http::header::CONTENT_TYPE, "application/json")], reply).into_response()
}

async fn ws_upgrade(State(registry): State<Registry>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| ws_session(socket, registry))
}

async fn ws_session(mut socket: WebSocket, registry: Registry) {
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => break,
            _ => continue,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let reply = handle(&registry, line.to_string()).await;
            if socket.send(Message::Text(reply.into())).await.is_err() {
                return;
            }
        }
    }
}

/// Binds `addr` and returns the listener with its bound address.
pub async fn bind(addr: SocketAddr) -> std::io::Result<(TcpListener, SocketAddr)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}

pub async fn serve(listener: TcpListener, registry: Registry, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(registry, static_dir)).await
}
