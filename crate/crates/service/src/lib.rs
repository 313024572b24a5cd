//! HTTP/JSON service over the DSW library.
//!
//! Stateless endpoints cover the theory closed forms, evaluation, and
//! synthetic scene generation; sessions hold a calibration + size lookup
//! table server-side so repeated proposal requests skip the rebuild.
//!
//! Routes (all bodies are `dsw-api` JSON):
//! - `GET  /health`
//! - `POST /v1/theory/error-curves`
//! - `POST /v1/theory/counts`
//! - `POST /v1/sessions`              create calibration+LUT session
//! - `GET  /v1/sessions/{id}/lut`
//! - `POST /v1/sessions/{id}/proposals`
//! - `DELETE /v1/sessions/{id}`
//! - `POST /v1/evaluate`              scene set on the server filesystem
//! - `POST /v1/synth`
//!
//! Errors return `{ "error": ..., "kind": ... }` with 404 for unknown
//! sessions/paths, 422 for domain validation failures, 400 for undecodable
//! payloads, 500 for internal faults.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path as FsPath;
use std::sync::{Arc, RwLock};

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use uuid::Uuid;

use dsw_api as api;
use dsw_core::dataset::{list_scene_ids, load_scene, synth_scene, write_scene, DispFormat};
use dsw_core::metrics::{
    evaluate, DenseGenerator, DswGenerator, EvalConfig, EvalResult, ProposalGenerator,
};
use dsw_core::proposer::generate_full;
use dsw_core::theory::{count_total, error_curves, positioning_error, TheoryParams};
use dsw_core::{build_lut, CameraIntrinsics, DswConfig, DswError, ObjectModel, SizeLut};

/// One calibration + prebuilt LUT, shared read-only across requests.
pub struct SessionEntry {
    pub intrinsics: CameraIntrinsics,
    pub lut: SizeLut,
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<Uuid, Arc<SessionEntry>>>,
}

/// The service router with a fresh state.
pub fn app() -> Router {
    router_with_state(Arc::new(AppState::default()))
}

pub fn router_with_state(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/theory/error-curves", post(theory_error_curves))
        .route("/v1/theory/counts", post(theory_counts))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/lut", get(session_lut))
        .route("/v1/sessions/{id}/proposals", post(session_proposals))
        .route("/v1/sessions/{id}", delete(delete_session))
        .route("/v1/evaluate", post(run_evaluate))
        .route("/v1/synth", post(run_synth))
        // A full-resolution disparity upload (f32 per pixel, base64) easily
        // exceeds the 2 MiB default; allow images up to roughly 4K.
        .layer(DefaultBodyLimit::max(64 * 1024 * 1024))
        .with_state(state)
}

/// Serves the default app on an already-bound listener (lets callers bind
/// port 0 and learn the address first).
pub async fn serve_listener(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, app()).await
}

/// Binds `addr`, prints `listening on <actual-addr>` (port 0 resolves to
/// the assigned port), and serves until the process ends.
pub async fn run(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on {}", listener.local_addr()?);
    serve_listener(listener).await
}

// ---------------------------------------------------------------------------
// Error envelope
// ---------------------------------------------------------------------------

pub struct ServiceError {
    status: StatusCode,
    body: api::ApiError,
}

impl ServiceError {
    fn not_found(what: impl Into<String>) -> Self {
        ServiceError {
            status: StatusCode::NOT_FOUND,
            body: api::ApiError {
                error: what.into(),
                kind: "not_found".into(),
            },
        }
    }

    fn internal(what: impl Into<String>) -> Self {
        ServiceError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: api::ApiError {
                error: what.into(),
                kind: "internal".into(),
            },
        }
    }
}

fn error_kind(e: &DswError) -> &'static str {
    match e {
        DswError::NonPositiveDisparity(_) => "NonPositiveDisparity",
        DswError::InvalidConfig(_) => "InvalidConfig",
        DswError::InvalidTheta(_) => "InvalidTheta",
        DswError::OutOfRange { .. } => "OutOfRange",
        DswError::ObjectLargerThanImage { .. } => "ObjectLargerThanImage",
        DswError::LutRangeMismatch { .. } => "LutRangeMismatch",
        DswError::EmptyImage => "EmptyImage",
        DswError::MalformedCalib(_) => "MalformedCalib",
        DswError::NonPositiveBaseline(_) => "NonPositiveBaseline",
        DswError::UnsupportedFormat(_) => "UnsupportedFormat",
        DswError::DimensionMismatch { .. } => "DimensionMismatch",
        DswError::PlantOutOfBounds { .. } => "PlantOutOfBounds",
        DswError::DegenerateBox => "DegenerateBox",
        DswError::Io(_) => "Io",
        DswError::Image(_) => "Image",
    }
}

impl From<DswError> for ServiceError {
    fn from(e: DswError) -> Self {
        let status = match &e {
            DswError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => StatusCode::NOT_FOUND,
            DswError::Io(_) | DswError::Image(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ServiceError {
            status,
            body: api::ApiError {
                error: e.to_string(),
                kind: error_kind(&e).into(),
            },
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type HandlerResult<T> = Result<Json<T>, ServiceError>;

async fn in_blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::internal(format!("worker panicked: {}", e)))?
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

async fn health() -> Json<api::HealthResponse> {
    Json(api::HealthResponse {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn theory_error_curves(
    Json(req): Json<api::ErrorCurvesRequest>,
) -> HandlerResult<api::ErrorCurvesResponse> {
    let rows = error_curves(&req.theta_grid)?;
    Ok(Json(api::ErrorCurvesResponse {
        rows: rows
            .iter()
            .map(|r| api::ErrorCurveRowDto {
                theta: r.theta,
                eps_k: r.eps_k,
                eps_delta: r.eps_delta,
            })
            .collect(),
    }))
}

async fn theory_counts(Json(req): Json<api::CountsRequest>) -> HandlerResult<api::CountsResponse> {
    let mut rows = Vec::with_capacity(req.theta_grid.len());
    for &theta in &req.theta_grid {
        let params = TheoryParams::new(
            req.image_width,
            req.image_height,
            req.obj_width_min,
            req.obj_width_max,
            req.aspect,
            theta,
        )?
        .with_width_step(req.width_step.into())?;
        let delta = 2.0 * positioning_error(theta)?;
        rows.push(api::CountRowDto {
            theta,
            n_hypotheses: count_total(&params, delta)?,
        });
    }
    Ok(Json(api::CountsResponse { rows }))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<api::CreateSessionRequest>,
) -> HandlerResult<api::CreateSessionResponse> {
    let intrinsics: CameraIntrinsics = (&req.intrinsics).try_into()?;
    let model: ObjectModel = (&req.model).try_into()?;
    let lut = build_lut(&intrinsics, &model, req.lut.into())?;
    let id = Uuid::new_v4();
    let entries = lut.entries().len();
    state
        .sessions
        .write()
        .unwrap()
        .insert(id, Arc::new(SessionEntry { intrinsics, lut }));
    Ok(Json(api::CreateSessionResponse {
        session_id: id.to_string(),
        lut_entries: entries,
    }))
}

fn lookup_session(state: &AppState, id: &str) -> Result<Arc<SessionEntry>, ServiceError> {
    let uuid =
        Uuid::parse_str(id).map_err(|_| ServiceError::not_found(format!("no session {}", id)))?;
    state
        .sessions
        .read()
        .unwrap()
        .get(&uuid)
        .cloned()
        .ok_or_else(|| ServiceError::not_found(format!("no session {}", id)))
}

async fn session_lut(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> HandlerResult<api::LutResponse> {
    let session = lookup_session(&state, &id)?;
    let cfg = *session.lut.config();
    let entries = session
        .lut
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| api::LutEntryDto {
            disparity: session.lut.disparity_at(i),
            width_px: e.width_px,
            height_px: e.height_px,
        })
        .collect();
    Ok(Json(api::LutResponse {
        config: api::LutConfigDto {
            d_min: cfg.d_min,
            d_max: cfg.d_max,
            delta_d: cfg.delta_d,
        },
        entries,
    }))
}

async fn session_proposals(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<api::ProposalsRequest>,
) -> HandlerResult<api::ProposalsResponse> {
    let session = lookup_session(&state, &id)?;
    let image = req.image.decode()?;
    let config: DswConfig = (&req.config).try_into()?;
    let record_mask = req.record_mask;
    let out = in_blocking(move || {
        Ok(generate_full(
            &image,
            &session.intrinsics,
            &session.lut,
            &config,
            record_mask,
        )?)
    })
    .await?;
    Ok(Json(api::ProposalsResponse {
        proposals: out.proposals.iter().map(api::ProposalDto::from).collect(),
        stats: (&out.stats).into(),
        mask_b64: out.visited_mask.as_deref().map(api::encode_mask),
    }))
}

async fn delete_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<StatusCode, ServiceError> {
    let uuid =
        Uuid::parse_str(&id).map_err(|_| ServiceError::not_found(format!("no session {}", id)))?;
    match state.sessions.write().unwrap().remove(&uuid) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ServiceError::not_found(format!("no session {}", id))),
    }
}

/// Builds the generator named by the request.
pub fn generator_from_dto(
    dto: &api::GeneratorDto,
) -> Result<Box<dyn ProposalGenerator + Send + Sync>, DswError> {
    match dto {
        api::GeneratorDto::Dsw { model, lut, config } => Ok(Box::new(DswGenerator {
            config: config.try_into()?,
            lut: (*lut).into(),
            model: model.try_into()?,
        })),
        api::GeneratorDto::Dense {
            obj_width_min,
            obj_width_max,
            width_step,
            aspect,
            theta_iou,
        } => Ok(Box::new(DenseGenerator {
            obj_width_min_px: *obj_width_min,
            obj_width_max_px: *obj_width_max,
            width_step: (*width_step).into(),
            aspect: *aspect,
            theta_iou: *theta_iou,
        })),
    }
}

/// Shared by the HTTP handler and the CLI's in-process path.
pub fn eval_result_to_response(result: &EvalResult) -> api::EvaluateResponse {
    api::EvaluateResponse {
        recall_curve: result
            .recall_curve
            .iter()
            .map(|&(theta, r)| api::RecallPointDto {
                theta,
                recall: r.is_finite().then_some(r),
            })
            .collect(),
        outcomes: result
            .outcomes
            .iter()
            .map(|o| api::GtOutcomeDto {
                image_id: o.image_id.clone(),
                occlusion: o.occlusion.label().to_string(),
                best_iou: o.best_iou,
            })
            .collect(),
        failures: result
            .failures
            .iter()
            .map(|f| api::SceneFailureDto {
                image_id: f.image_id.clone(),
                error: f.error.clone(),
            })
            .collect(),
        ppi: result.ppi,
        mean_ms: result.mean_ms,
        prep_ms: result.prep_ms,
        scenes_evaluated: result.scenes_evaluated,
        total_gt: result.total_gt,
    }
}

/// Loads up to `limit` scenes (sorted id order) from a KITTI-style tree.
pub fn load_scene_set(
    root: &FsPath,
    class_filter: &str,
    limit: Option<usize>,
) -> Result<Vec<dsw_core::dataset::Scene>, DswError> {
    let mut ids = list_scene_ids(root)?;
    if let Some(n) = limit {
        ids.truncate(n);
    }
    let mut scenes = Vec::with_capacity(ids.len());
    for id in &ids {
        let (scene, _malformed) = load_scene(root, id, class_filter)?;
        scenes.push(scene);
    }
    Ok(scenes)
}

async fn run_evaluate(
    Json(req): Json<api::EvaluateRequest>,
) -> HandlerResult<api::EvaluateResponse> {
    let response = in_blocking(move || {
        let generator = generator_from_dto(&req.generator)?;
        let scenes = load_scene_set(FsPath::new(&req.scenes_dir), &req.class_filter, req.limit)?;
        let mut cfg = EvalConfig {
            parallel: req.parallel,
            ..EvalConfig::default()
        };
        if !req.theta_grid.is_empty() {
            cfg.theta_grid = req.theta_grid.clone();
        }
        let result = evaluate(&scenes, generator.as_ref(), &cfg)?;
        Ok(eval_result_to_response(&result))
    })
    .await?;
    Ok(Json(response))
}

async fn run_synth(Json(req): Json<api::SynthRequest>) -> HandlerResult<api::SynthResponse> {
    let response = in_blocking(move || {
        let spec: dsw_core::dataset::SynthSceneSpec = (&req.spec).try_into()?;
        let scene = synth_scene(&spec)?;
        let written_to = match &req.out_dir {
            Some(dir) => {
                let format = match req.format {
                    api::DispFormatDto::Png16 => DispFormat::Png16,
                    api::DispFormatDto::Pfm => DispFormat::Pfm,
                };
                write_scene(&scene, FsPath::new(dir), format)?;
                Some(dir.clone())
            }
            None => None,
        };
        Ok(api::SynthResponse {
            image_id: scene.image_id.clone(),
            width: scene.disparity.width(),
            height: scene.disparity.height(),
            ground_truth: scene
                .ground_truth
                .iter()
                .map(|g| api::GroundTruthDto {
                    class_name: g.class_name.clone(),
                    x: g.x,
                    y: g.y,
                    w: g.w,
                    h: g.h,
                    occlusion: g.occlusion.label().to_string(),
                    truncation: g.truncation,
                })
                .collect(),
            written_to,
        })
    })
    .await?;
    Ok(Json(response))
}
