use std::path::Path;
use std::sync::Mutex;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{error_response, internal, Shared};
use crisismine_core::mteval::{
    evaluations_to_jsonl, mqm_segment_score, parse_evaluations_jsonl, EvaluationJournal, EvaluationSubmission,
    MqmAnnotation, MqmCategory, Severity,
};
use crisismine_core::{Error, Result};

/// One system output awaiting MQM/DA evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MqmItem {
    pub segment_id: String,
    pub system: String,
    pub src: String,
    pub hyp: String,
}

/// One item per line; `(system, segment_id)` must be unique.
pub fn parse_mqm_items_jsonl(origin: &str, text: &str) -> Result<Vec<MqmItem>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::Parse {
            origin: origin.to_string(),
            line: i + 1,
            message: m,
        };
        let item: MqmItem = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if !seen.insert((item.system.clone(), item.segment_id.clone())) {
            return Err(bad(format!("duplicate item `{}` for system `{}`", item.segment_id, item.system)));
        }
        out.push(item);
    }
    Ok(out)
}

pub(super) struct MqmTask {
    items: Vec<MqmItem>,
    journal: Mutex<EvaluationJournal>,
}

impl MqmTask {
    pub(super) fn open(items: Vec<MqmItem>, journal_path: &Path) -> Result<Self> {
        let journal = EvaluationJournal::open(journal_path)?;
        Ok(MqmTask {
            items,
            journal: Mutex::new(journal),
        })
    }

    fn knows(&self, system: &str, segment_id: &str) -> bool {
        self.items.iter().any(|it| it.system == system && it.segment_id == segment_id)
    }
}

pub(super) fn routes() -> Router<Shared> {
    Router::new()
        .route("/taxonomy", get(taxonomy))
        .route("/mqm/score", post(score))
        .route("/mqm/items", get(items))
        .route("/mqm/evaluations", post(submit))
        .route("/mqm/export", get(export))
}

fn no_mqm() -> Response {
    error_response(StatusCode::NOT_FOUND, "no MQM batch is configured")
}

async fn taxonomy() -> Response {
    let severities: Vec<Value> = Severity::ALL
        .iter()
        .map(|s| json!({ "name": s.as_str(), "weight": s.weight() }))
        .collect();
    let categories: Vec<Value> = MqmCategory::ALL
        .iter()
        .map(|c| json!({ "name": c.as_str(), "subtypes": c.subtypes() }))
        .collect();
    Json(json!({ "severities": severities, "categories": categories })).into_response()
}

/// Authoritative weighted score for a list of annotations. `segment_id` may
/// be omitted from each annotation.
async fn score(body: String) -> Response {
    let mut value: Value = match serde_json::from_str(&body) {
        Ok(v) => v,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    if let Some(anns) = value.get_mut("annotations").and_then(Value::as_array_mut) {
        for a in anns {
            if let Some(obj) = a.as_object_mut() {
                obj.entry("segment_id").or_insert(json!(""));
            }
        }
    }
    let anns = match value.get("annotations").cloned().map(serde_json::from_value::<Vec<MqmAnnotation>>) {
        Some(Ok(a)) => a,
        Some(Err(e)) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
        None => return error_response(StatusCode::UNPROCESSABLE_ENTITY, "missing `annotations`"),
    };
    let mut canonical = Vec::with_capacity(anns.len());
    for mut a in anns {
        if let Err(e) = a.canonicalize() {
            return error_response(StatusCode::UNPROCESSABLE_ENTITY, e);
        }
        canonical.push(a);
    }
    Json(json!({ "mqm_weighted": mqm_segment_score(&canonical), "annotations": canonical.len() })).into_response()
}

#[derive(Debug, Deserialize)]
struct ItemsQuery {
    system: Option<String>,
}

async fn items(State(s): State<Shared>, Query(q): Query<ItemsQuery>) -> Response {
    let Some(task) = s.mqm.as_ref() else {
        return no_mqm();
    };
    let journal = task.journal.lock().unwrap();
    let pending: Vec<&MqmItem> = task
        .items
        .iter()
        .filter(|it| q.system.as_ref().is_none_or(|sys| &it.system == sys))
        .filter(|it| journal.get(&it.system, &it.segment_id).is_none())
        .collect();
    Json(pending).into_response()
}

/// Body uses the evaluation JSONL line format; `mqm_weighted` is recomputed
/// and, if supplied, must agree.
async fn submit(State(s): State<Shared>, body: String) -> Response {
    let Some(task) = s.mqm.as_ref() else {
        return no_mqm();
    };
    let single_line = match serde_json::from_str::<Value>(&body) {
        Ok(v) => v.to_string(),
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    let eval = match parse_evaluations_jsonl("request", &single_line).map(|mut v| v.pop()) {
        Ok(Some(e)) => e,
        Ok(None) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, "empty evaluation"),
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    if !task.knows(&eval.system, &eval.segment_id) {
        return error_response(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("`{}` for system `{}` is not in the MQM batch", eval.segment_id, eval.system),
        );
    }
    let outcome = task.journal.lock().unwrap().submit(eval.clone());
    match outcome {
        Ok(EvaluationSubmission::Accepted) => (StatusCode::CREATED, Json(json!({ "accepted": eval }))).into_response(),
        Ok(EvaluationSubmission::Conflict(existing)) => {
            (StatusCode::CONFLICT, Json(json!({ "existing": existing }))).into_response()
        }
        Err(e) => internal(e),
    }
}

async fn export(State(s): State<Shared>) -> Response {
    let Some(task) = s.mqm.as_ref() else {
        return no_mqm();
    };
    let mut evals = task.journal.lock().unwrap().evaluations().to_vec();
    evals.sort_by(|a, b| (&a.system, &a.segment_id).cmp(&(&b.system, &b.segment_id)));
    ([(header::CONTENT_TYPE, "application/x-ndjson")], evaluations_to_jsonl(&evals)).into_response()
}
