//! JSON HTTP API over the extraction and optimization pipeline.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use soskit_core::bvh::parse_bvh_with;
use soskit_core::quantizer::symbol_table;
use soskit_core::script::SosScript;
use soskit_core::svg::{render_staff_svg, SvgOptions};
use soskit_core::{Error, Motion};

use crate::config::Config;
use crate::ops::{self, ExtractParams};

const BODY_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
    path: Option<String>,
}

impl ApiError {
    fn validation(message: impl Into<String>, path: Option<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            kind: "validation",
            message: message.into(),
            path,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, kind) = match e {
            Error::Shape(_) => (StatusCode::UNPROCESSABLE_ENTITY, "frame_range"),
            Error::NonFinite(_) => (StatusCode::UNPROCESSABLE_ENTITY, "non_finite"),
            _ => (StatusCode::BAD_REQUEST, "validation"),
        };
        Self {
            status,
            kind,
            message: e.to_string(),
            path: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "error": {
                "status": self.status.as_u16(),
                "kind": self.kind,
                "message": self.message,
                "path": self.path,
            }
        });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn join_path(prefix: &str, inner: &serde_path_to_error::Path) -> String {
    let inner = inner.to_string();
    if inner == "." {
        prefix.to_string()
    } else if prefix.is_empty() {
        inner
    } else if inner.starts_with('[') {
        format!("{prefix}{inner}")
    } else {
        format!("{prefix}.{inner}")
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    let mut de = serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = join_path("", e.path());
        ApiError::validation(e.inner().to_string(), Some(path).filter(|p| p != "."))
    })
}

fn parse_value<T: DeserializeOwned>(v: Value, prefix: &str) -> ApiResult<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = join_path(prefix, e.path());
        ApiError::validation(e.inner().to_string(), Some(path))
    })
}

#[derive(Clone)]
pub struct AppState {
    pub config: Arc<Config>,
}

impl AppState {
    pub fn new(config: Config) -> Self {
        Self { config: Arc::new(config) }
    }

    /// Inline motion JSON, `{"path": ...}` under the data directory, or
    /// `{"bvh": ..., "scale"?: ...}`.
    fn resolve_motion(&self, v: Value) -> ApiResult<Motion> {
        let cfg = &self.config;
        let m = match &v {
            Value::Object(map) if map.contains_key("path") => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct FileRef {
                    path: PathBuf,
                }
                let r: FileRef = parse_value(v, "motion")?;
                let file = self.allowed_file(&r.path)?;
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| ApiError::validation(format!("cannot read motion file: {e}"), Some("motion.path".into())))?;
                ops::parse_motion_file(&file, &text, cfg)
                    .map_err(|e| ApiError::validation(format!("{e:#}"), Some("motion.path".into())))?
            }
            Value::Object(map) if map.contains_key("bvh") => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Inline {
                    bvh: String,
                    scale: Option<f64>,
                }
                let r: Inline = parse_value(v, "motion")?;
                let mut opts = cfg.bvh_options().map_err(|e| ApiError::validation(e.to_string(), None))?;
                if let Some(s) = r.scale {
                    opts.scale = s;
                }
                parse_bvh_with(&r.bvh, &opts).map_err(|e| ApiError::validation(e.to_string(), Some("motion.bvh".into())))?
            }
            _ => parse_value(v, "motion")?,
        };
        if m.num_frames() > cfg.max_frames {
            return Err(ApiError {
                status: StatusCode::PAYLOAD_TOO_LARGE,
                kind: "too_long",
                message: format!("motion has {} frames; the limit is {}", m.num_frames(), cfg.max_frames),
                path: Some("motion".into()),
            });
        }
        Ok(m)
    }

    fn allowed_file(&self, rel: &std::path::Path) -> ApiResult<PathBuf> {
        let at = Some("motion.path".to_string());
        let Some(root) = &self.config.data_dir else {
            return Err(ApiError::validation("file references are disabled: no data_dir configured", at));
        };
        let root = root
            .canonicalize()
            .map_err(|e| ApiError::validation(format!("data_dir unavailable: {e}"), at.clone()))?;
        let file = root
            .join(rel)
            .canonicalize()
            .map_err(|e| ApiError::validation(format!("cannot open motion file: {e}"), at.clone()))?;
        if !file.starts_with(&root) {
            return Err(ApiError::validation("motion path escapes the data directory", at));
        }
        Ok(file)
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        kind: "internal",
        message: e.to_string(),
        path: None,
    })?
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractRequest {
    motion: Value,
    theta: Option<f64>,
    percentiles: Option<[f64; 6]>,
    parts: Option<Vec<soskit_core::Part>>,
    #[serde(default)]
    include_first_frame: bool,
    text: Option<String>,
}

async fn extract_handler(State(st): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let started = Instant::now();
    let req: ExtractRequest = parse_body(&body)?;
    let params = ExtractParams {
        theta: req.theta,
        percentiles: req.percentiles,
        parts: req.parts,
        include_first_frame: req.include_first_frame,
        text: req.text,
    };
    blocking(move || {
        let m = st.resolve_motion(req.motion)?;
        let out = ops::run_extract(&m, &params, &st.config).map_err(|e| with_path(e, field_of(&params)))?;
        Ok(Json(json!({
            "sos": out.script,
            "saliency": ops::saliency_json(&out.saliency),
            "global_max": out.saliency.global_max,
            "dense_symbols": out.dense_symbols,
            "params": out.echo,
            "timing_ms": elapsed_ms(started),
            "warnings": [],
        })))
    })
    .await
}

fn field_of(p: &ExtractParams) -> &'static str {
    if p.percentiles.is_some() && p.theta.is_none() {
        "percentiles"
    } else {
        "theta"
    }
}

fn with_path(e: Error, path: &str) -> ApiError {
    let is_param = matches!(e, Error::Parameter(_));
    let mut api = ApiError::from(e);
    if is_param {
        api.path = Some(path.into());
    }
    api
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderRequest {
    sos: SosScript,
    #[serde(default)]
    options: RenderOptions,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RenderOptions {
    pixels_per_frame: Option<f64>,
    column_width: Option<f64>,
}

async fn render_handler(body: Bytes) -> ApiResult<Response> {
    let req: RenderRequest = parse_body(&body)?;
    let mut opts = SvgOptions::default();
    for (name, given, slot) in [
        ("options.pixels_per_frame", req.options.pixels_per_frame, &mut opts.pixels_per_frame),
        ("options.column_width", req.options.column_width, &mut opts.column_width),
    ] {
        if let Some(v) = given {
            if !(v.is_finite() && v > 0.0) {
                return Err(ApiError::validation(format!("must be positive, got {v}"), Some(name.into())));
            }
            *slot = v;
        }
    }
    let svg = render_staff_svg(&req.sos, &opts);
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeRequest {
    motion: Value,
    sos: SosScript,
    options: Option<Value>,
}

async fn optimize_handler(State(st): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let started = Instant::now();
    let req: OptimizeRequest = parse_body(&body)?;
    let mut settings = ops::optimizer_settings(&st.config, req.options.as_ref())
        .map_err(|e| ApiError::validation(e.inner().to_string(), Some(join_path("options", e.path()))))?;
    settings
        .validate()
        .map_err(|e| ApiError::validation(e.to_string(), Some("options".into())))?;
    let mut warnings = Vec::new();
    if settings.max_iters > st.config.max_iters_cap {
        warnings.push(format!(
            "max_iters {} lowered to the server cap {}",
            settings.max_iters, st.config.max_iters_cap
        ));
        settings.max_iters = st.config.max_iters_cap;
    }
    blocking(move || {
        let m = st.resolve_motion(req.motion)?;
        let echo = settings.clone();
        let r = ops::run_optimize(m, req.sos, settings)?;
        Ok(Json(json!({
            "motion": r.motion,
            "sos_acc": r.sos_acc,
            "l2_rot6d": r.l2_rot6d,
            "loss_trace": r.loss_trace,
            "converged": r.converged,
            "iterations": r.iterations,
            "params": echo,
            "timing_ms": elapsed_ms(started),
            "warnings": warnings,
        })))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantizeRequest {
    motion: Value,
    beta: Option<f64>,
}

async fn quantize_handler(State(st): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let started = Instant::now();
    let req: QuantizeRequest = parse_body(&body)?;
    if let Some(b) = req.beta {
        if !(b.is_finite() && b > 0.0) {
            return Err(ApiError::validation(format!("beta must be positive, got {b}"), Some("beta".into())));
        }
    }
    blocking(move || {
        let m = st.resolve_motion(req.motion)?;
        let mut out = ops::run_quantize(&m, req.beta)?;
        out["params"] = json!({ "beta": req.beta });
        out["timing_ms"] = json!(elapsed_ms(started));
        Ok(Json(out))
    })
    .await
}

async fn symbols_handler() -> Json<Value> {
    Json(json!(symbol_table()))
}

async fn health_handler() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        kind: "not_found",
        message: "no such endpoint".into(),
        path: None,
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/extract", post(extract_handler))
        .route("/v1/render", post(render_handler))
        .route("/v1/optimize", post(optimize_handler))
        .route("/v1/quantize", post(quantize_handler))
        .route("/v1/symbols", get(symbols_handler))
        .route("/v1/health", get(health_handler))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: Config) -> anyhow::Result<()> {
    let addr = std::net::SocketAddr::new(config.bind, config.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
