//! Read-only HTTP server for artifacts and a static viewer bundle.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;

use crate::{CliError, CliResult, ServeArgs};

#[derive(Debug)]
struct Roots {
    artifacts: PathBuf,
    viewer: Option<PathBuf>,
}

const INDEX: &str = "<!doctype html>\n<title>specmap</title>\n<p>No viewer bundle configured. Artifacts are served under <code>/artifacts/&lt;name&gt;.json</code>.</p>\n";

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => "application/json",
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

/// Joins a URL path under `root`, refusing anything but plain components.
fn resolve(root: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    if rel.components().all(|c| matches!(c, Component::Normal(_))) {
        Some(root.join(rel))
    } else {
        None
    }
}

fn not_found() -> Response {
    (StatusCode::NOT_FOUND, "not found\n").into_response()
}

async fn file_response(path: PathBuf) -> Response {
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], Body::from(bytes)).into_response(),
        Err(_) => not_found(),
    }
}

async fn artifact(State(roots): State<Arc<Roots>>, UrlPath(name): UrlPath<String>) -> Response {
    if !name.ends_with(".json") {
        return not_found();
    }
    match resolve(&roots.artifacts, &name) {
        Some(p) => file_response(p).await,
        None => not_found(),
    }
}

async fn viewer_file(State(roots): State<Arc<Roots>>, UrlPath(rel): UrlPath<String>) -> Response {
    match roots.viewer.as_deref().and_then(|v| resolve(v, &rel)) {
        Some(p) => file_response(p).await,
        None => not_found(),
    }
}

async fn index(State(roots): State<Arc<Roots>>) -> Response {
    match &roots.viewer {
        Some(v) => file_response(v.join("index.html")).await,
        None => ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], INDEX).into_response(),
    }
}

fn local_origin(origin: &HeaderValue) -> bool {
    let Ok(o) = origin.to_str() else { return false };
    let host = o.strip_prefix("http://").or_else(|| o.strip_prefix("https://")).unwrap_or("");
    let host = host.rsplit_once(':').map_or(host, |(h, port)| if port.chars().all(|c| c.is_ascii_digit()) { h } else { host });
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

async fn cors(req: Request, next: Next) -> Response {
    let origin = req.headers().get(header::ORIGIN).filter(|o| local_origin(o)).cloned();
    let mut resp = if req.method() == Method::OPTIONS { StatusCode::NO_CONTENT.into_response() } else { next.run(req).await };
    if let Some(o) = origin {
        let h = resp.headers_mut();
        h.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, o);
        h.insert(header::ACCESS_CONTROL_ALLOW_METHODS, HeaderValue::from_static("GET, HEAD, OPTIONS"));
        h.insert(header::VARY, HeaderValue::from_static("Origin"));
    }
    resp
}

pub fn router(artifacts: PathBuf, viewer: Option<PathBuf>) -> Router {
    let roots = Arc::new(Roots { artifacts, viewer });
    Router::new()
        .route("/", get(index))
        .route("/artifacts/{name}", get(artifact))
        .route("/{*path}", get(viewer_file))
        .layer(middleware::from_fn(cors))
        .with_state(roots)
}

pub fn serve(a: &ServeArgs) -> CliResult<()> {
    for dir in std::iter::once(&a.dir).chain(a.viewer.as_ref()) {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("{} is not a directory", dir.display())));
        }
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad listen address {}:{}: {e}", a.host, a.port)))?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|source| CliError::Io { context: "starting the runtime".into(), source })?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| match source.kind() {
            std::io::ErrorKind::AddrInUse => CliError::PortInUse { port: a.port },
            _ => CliError::Io { context: format!("binding {addr}"), source },
        })?;
        let local = listener.local_addr().map_err(|source| CliError::Io { context: "reading the bound address".into(), source })?;
        println!("serving {} on http://{local}", a.dir.display());
        log::info!("viewer root: {:?}", a.viewer);
        axum::serve(listener, router(a.dir.clone(), a.viewer.clone()))
            .await
            .map_err(|source| CliError::Io { context: "serving".into(), source })
    })
}
