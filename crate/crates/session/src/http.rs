//! JSON HTTP API over a [`SessionManager`].
//!
//! Request bodies are parsed here rather than through axum's extractor so
//! malformed JSON gets the same `{code, message, detail}` error body as every
//! other validation failure.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use rulelab_core::{
    ingest_dataset, rank_objects_for_dropdown, Dataset, ImageRecord, RuleEdit, RuleSet, StatusKind,
    Strictness,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::SessionError;
use crate::export::ExportDocument;
use crate::manager::SessionManager;
use crate::state::{LabelState, SessionConfig};

pub type AppState = Arc<SessionManager>;

pub struct ApiError(pub SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0.to_body())).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, SessionError> {
    serde_json::from_slice(body)
        .map_err(|e| SessionError::Validation(format!("bad request body: {e}")))
}

fn parse_optional_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, SessionError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        parse_body(body)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}/images", get(list_images))
        .route(
            "/sessions/{id}/labels/{image_id}",
            put(set_label).delete(clear_label),
        )
        .route("/sessions/{id}/autolabel", post(autolabel))
        .route("/sessions/{id}/rules", get(get_rules))
        .route("/sessions/{id}/rules/edit", put(edit_rules))
        .route("/sessions/{id}/rules/preview", post(preview_rules))
        .route("/sessions/{id}/suggestions", get(suggestions))
        .route("/sessions/{id}/stats", get(stats))
        .route("/sessions/{id}/importance", get(importance))
        .route("/sessions/{id}/export", post(export))
        .fallback(|| async {
            ApiError(SessionError::Validation("no such endpoint".into()))
                .into_response_with(StatusCode::NOT_FOUND)
        })
        .with_state(state)
}

impl ApiError {
    fn into_response_with(self, status: StatusCode) -> Response {
        let mut body = self.0.to_body();
        body["code"] = json!("not_found");
        (status, Json(body)).into_response()
    }
}

/// Starts serving on `listener` until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    path: Option<PathBuf>,
    dataset: Option<Value>,
    #[serde(default)]
    strict: bool,
    #[serde(default)]
    config: SessionConfig,
}

#[derive(Serialize)]
struct CreateResponse {
    session_id: String,
    warnings: Vec<String>,
}

async fn create_session(State(mgr): State<AppState>, body: Bytes) -> ApiResult<CreateResponse> {
    let req: CreateRequest = parse_body(&body)?;
    let strictness = if req.strict {
        Strictness::Strict
    } else {
        Strictness::Lenient
    };
    let (dataset, warnings) = match (req.path, req.dataset) {
        (Some(p), None) => ingest_dataset(&p, strictness).map_err(SessionError::from)?,
        (None, Some(v)) => {
            Dataset::from_json_str(&v.to_string(), strictness).map_err(SessionError::from)?
        }
        _ => {
            return Err(
                SessionError::Validation("give exactly one of `path` or `dataset`".into()).into(),
            )
        }
    };
    let mgr2 = mgr.clone();
    let session_id = tokio::task::spawn_blocking(move || mgr2.create(dataset, req.config))
        .await
        .map_err(|e| SessionError::Storage(e.to_string()))??;
    Ok(Json(CreateResponse {
        session_id,
        warnings,
    }))
}

async fn list_sessions(State(mgr): State<AppState>) -> Json<Value> {
    Json(json!({ "sessions": mgr.ids() }))
}

#[derive(Deserialize)]
struct ImageQuery {
    status: Option<StatusKind>,
    label: Option<String>,
    #[serde(default)]
    page: usize,
    page_size: Option<usize>,
    #[serde(default)]
    sort: ImageSort,
}

#[derive(Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum ImageSort {
    #[default]
    Id,
    /// Suggested images first, then by id.
    Suggested,
}

#[derive(Serialize)]
struct ImageItem<'a> {
    image: &'a ImageRecord,
    label_state: &'a LabelState,
    suggested: bool,
}

const DEFAULT_PAGE_SIZE: usize = 50;
const MAX_PAGE_SIZE: usize = 500;

async fn list_images(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<ImageQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let Query(q) = query.map_err(|e| SessionError::Validation(e.body_text()))?;
    let s = mgr.get(&id)?;
    let page_size = q.page_size.unwrap_or(DEFAULT_PAGE_SIZE);
    if page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(
            SessionError::Validation(format!("page_size must be in 1..={MAX_PAGE_SIZE}")).into(),
        );
    }
    let mut items: Vec<ImageItem> = s
        .dataset
        .pool
        .iter()
        .map(|img| ImageItem {
            image: img,
            label_state: &s.labels[&img.image_id],
            suggested: s.suggestions.contains(&img.image_id),
        })
        .filter(|it| q.status.is_none_or(|k| it.label_state.status.kind() == k))
        .filter(|it| {
            q.label
                .as_deref()
                .is_none_or(|l| it.label_state.status.label() == Some(l))
        })
        .collect();
    items.sort_by(|a, b| {
        let key = |it: &ImageItem| {
            (
                q.sort == ImageSort::Suggested && !it.suggested,
                it.image.image_id.clone(),
            )
        };
        key(a).cmp(&key(b))
    });
    let total = items.len();
    let page: Vec<&ImageItem> = items
        .iter()
        .skip(q.page.saturating_mul(page_size))
        .take(page_size)
        .collect();
    Ok(Json(
        json!({ "page": q.page, "page_size": page_size, "total": total, "items": page }),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRequest {
    label: String,
}

async fn set_label(
    State(mgr): State<AppState>,
    Path((id, image_id)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<LabelState> {
    let req: LabelRequest = parse_body(&body)?;
    let ls = mgr
        .mutate(&id, move |s| s.set_label(&image_id, &req.label).cloned())
        .await?;
    Ok(Json(ls))
}

async fn clear_label(
    State(mgr): State<AppState>,
    Path((id, image_id)): Path<(String, String)>,
) -> ApiResult<LabelState> {
    let ls = mgr
        .mutate(&id, move |s| s.clear_label(&image_id).cloned())
        .await?;
    Ok(Json(ls))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AutolabelRequest {
    config: Option<SessionConfig>,
}

async fn autolabel(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<crate::state::AutoLabelOutcome> {
    let req: AutolabelRequest = parse_optional_body(&body)?;
    Ok(Json(
        mgr.mutate(&id, move |s| s.run_autolabel(req.config))
            .await?,
    ))
}

async fn get_rules(State(mgr): State<AppState>, Path(id): Path<String>) -> ApiResult<RuleSet> {
    Ok(Json(mgr.get(&id)?.ruleset.clone()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EditRequest {
    edit: RuleEdit,
}

async fn edit_rules(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: EditRequest = parse_body(&body)?;
    let out = mgr
        .mutate(&id, move |s| {
            s.apply_rule_edit(&req.edit)?;
            Ok(json!({ "ruleset": s.ruleset, "report": s.last_report, "stats": s.progress() }))
        })
        .await?;
    Ok(Json(out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PreviewRequest {
    ruleset: RuleSet,
}

async fn preview_rules(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<crate::state::PreviewOutcome> {
    let req: PreviewRequest = parse_body(&body)?;
    Ok(Json(
        mgr.mutate(&id, move |s| s.preview_rules(&req.ruleset))
            .await?,
    ))
}

async fn suggestions(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<rulelab_core::SuggestionSet> {
    Ok(Json(mgr.get(&id)?.suggestions.clone()))
}

#[derive(Serialize)]
struct Donut {
    class: String,
    accuracy: f64,
    correct: usize,
    total: usize,
    manual: usize,
    auto: usize,
}

async fn stats(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let s = mgr.get(&id)?;
    let donuts: Vec<Donut> = s
        .dataset
        .classes
        .iter()
        .map(|c| {
            let acc = s.last_report.per_class.get(c);
            let count = |k: StatusKind| {
                s.labels
                    .values()
                    .filter(|l| l.status.kind() == k && l.status.label() == Some(c))
                    .count()
            };
            Donut {
                class: c.clone(),
                accuracy: acc.map_or(0.0, |a| a.accuracy),
                correct: acc.map_or(0, |a| a.correct),
                total: acc.map_or(0, |a| a.total),
                manual: count(StatusKind::Manual),
                auto: count(StatusKind::Auto),
            }
        })
        .collect();
    Ok(Json(
        json!({ "report": s.last_report, "progress": s.progress(), "donuts": donuts, "iteration": s.iteration }),
    ))
}

async fn importance(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let s = mgr.get(&id)?;
    let ranked: Vec<Value> = rank_objects_for_dropdown(&s.importance)
        .into_iter()
        .map(|t| {
            let e = &s.importance.entries[&t];
            json!({ "object": t, "score": e.score, "image_frequency": e.image_frequency, "total_count": e.total_count })
        })
        .collect();
    Ok(Json(json!({ "objects": ranked })))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ExportRequest {
    path: Option<PathBuf>,
}

async fn export(
    State(mgr): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: ExportRequest = parse_optional_body(&body)?;
    let out = mgr
        .mutate(&id, move |s| {
            let summary = s.export_labels(req.path.as_deref())?;
            let mut v = serde_json::to_value(&summary)?;
            if req.path.is_none() {
                v["document"] =
                    serde_json::to_value(ExportDocument::from_labels(s.labels.values()))?;
            }
            Ok(v)
        })
        .await?;
    Ok(Json(out))
}
