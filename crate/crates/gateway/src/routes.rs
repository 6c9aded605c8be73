//! HTTP handlers. Each one queues a single job on the workspace thread.

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use evoarch::hypercode::{from_json, to_json};
use evoarch::runtime::{BehId, ClosureKind, Fault, Value};
use evoarch::syntax::SourceSegmentList;
use evoarch::workspace::{Workspace, WsError};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ApiError;
use crate::worker::Notice;
use crate::AppState;

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Accepts either the interchange object or plain source text.
fn decode(h: &serde_json::Value) -> Result<SourceSegmentList, ApiError> {
    match h {
        serde_json::Value::String(s) => Ok(SourceSegmentList::from_plain_text(s)),
        other => from_json(other).map_err(|e| ApiError::bad_request("parse", e.to_string())),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BindingRow {
    pub name: String,
    pub id: u64,
    #[serde(rename = "type")]
    pub ty: String,
    pub rendered: String,
}

pub async fn bindings(State(app): State<AppState>) -> Json<Vec<BindingRow>> {
    let rows = app
        .worker
        .call(|c| {
            c.ws.bindings()
                .into_iter()
                .map(|b| BindingRow { name: b.name, id: b.id, ty: b.ty, rendered: b.rendered })
                .collect()
        })
        .await;
    Json(rows)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Connection {
    pub name: String,
    pub channel: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BehaviourRow {
    pub handle: BehId,
    pub label: Option<String>,
    pub status: String,
    pub parent: Option<BehId>,
    pub connections: Vec<Connection>,
}

/// Components of the live system: composites themselves are omitted (they
/// show up as `parent`), and so are parts left detached by a decompose.
pub async fn behaviours(State(app): State<AppState>) -> Json<Vec<BehaviourRow>> {
    let rows = app
        .worker
        .call(|c| {
            c.ws.behaviours()
                .into_iter()
                .filter(|b| !b.composite && !(b.suspended && b.parent.is_none()))
                .map(|b| BehaviourRow {
                    handle: b.handle,
                    label: b.label,
                    status: b.status.as_str().to_string(),
                    parent: b.parent,
                    connections: b
                        .connections
                        .into_iter()
                        .map(|(name, channel)| Connection { name, channel })
                        .collect(),
                })
                .collect()
        })
        .await;
    Json(rows)
}

#[derive(Debug, Deserialize)]
pub struct EvalRequest {
    pub hypertext: serde_json::Value,
    #[serde(default, rename = "async")]
    pub run_async: bool,
}

fn eval_json(ws: &mut Workspace, src: &SourceSegmentList) -> Result<serde_json::Value, ApiError> {
    let r = ws.eval(src)?;
    Ok(serde_json::to_value(r).expect("eval result encodes"))
}

/// Synchronous by default. With `"async": true` the reply is `202
/// {runToken}` and the outcome arrives later as a `run_complete` event.
pub async fn eval(State(app): State<AppState>, Json(req): Json<EvalRequest>) -> Result<Response, ApiError> {
    let src = decode(&req.hypertext)?;
    if req.run_async {
        let token = app.next_token();
        app.worker.submit(move |c| {
            let outcome = eval_json(&mut c.ws, &src);
            c.sync();
            let (ok, result) = match outcome {
                Ok(v) => (true, v),
                Err(e) => (false, json!({ "phase": e.phase, "message": e.message })),
            };
            c.publish(Notice::RunComplete { token, ok, result });
        });
        return Ok((StatusCode::ACCEPTED, Json(json!({ "runToken": token }))).into_response());
    }
    let v = app.worker.call(move |c| eval_json(&mut c.ws, &src)).await?;
    Ok(Json(v).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecomposeRequest {
    pub timeout_steps: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewRow {
    pub label: String,
    pub behaviour_id: u64,
    pub handle: BehId,
    pub connections: Vec<Connection>,
}

fn field<'a>(v: &'a Value, name: &str) -> Option<&'a Value> {
    match v {
        Value::View(fs) => fs.iter().find(|(n, _)| n == name).map(|(_, v)| v),
        _ => None,
    }
}

fn view_rows(ws: &mut Workspace, views: &Value) -> Vec<ViewRow> {
    let Value::Seq(_, items) = views else { return vec![] };
    items
        .iter()
        .filter_map(|v| {
            let Some(Value::Str(label)) = field(v, "label") else { return None };
            let Some(b @ Value::Behaviour(h)) = field(v, "bhvr") else { return None };
            let connections = match field(v, "connections") {
                Some(Value::Seq(_, cs)) => cs
                    .iter()
                    .filter_map(|c| match (field(c, "name"), field(c, "channel")) {
                        (Some(Value::Str(n)), Some(Value::Chan(ch))) => {
                            Some(Connection { name: n.clone(), channel: *ch })
                        }
                        _ => None,
                    })
                    .collect(),
                _ => vec![],
            };
            let behaviour_id = ws.machine.store.intern(b, label);
            Some(ViewRow { label: label.clone(), behaviour_id, handle: *h, connections })
        })
        .collect()
}

pub async fn decompose(
    State(app): State<AppState>,
    Path(handle): Path<BehId>,
    body: Option<Json<DecomposeRequest>>,
) -> ApiResult<Vec<ViewRow>> {
    let timeout = body.and_then(|Json(b)| b.timeout_steps);
    let rows = app
        .worker
        .call(move |c| -> Result<Vec<ViewRow>, ApiError> {
            match c.ws.machine.behaviour(handle) {
                None => return Err(ApiError::not_found(format!("no behaviour b{handle}"))),
                Some(b) if !b.is_composite() || b.dissolved => return Err(Fault::NotComposite(handle).into()),
                _ => {}
            }
            let saved = c.ws.machine.config.decompose_timeout;
            if let Some(t) = timeout {
                c.ws.machine.config.decompose_timeout = t;
            }
            let r = c.ws.command(|ws| {
                ws.machine.quiesce(handle)?;
                let views = ws.machine.decompose_now(handle)?;
                ws.check_styles()?;
                Ok(views)
            });
            c.ws.machine.config.decompose_timeout = saved;
            let (views, _) = r?;
            Ok(view_rows(&mut c.ws, &views))
        })
        .await?;
    Ok(Json(rows))
}

pub async fn reify(State(app): State<AppState>, Path(id): Path<u64>) -> ApiResult<serde_json::Value> {
    let h = app.worker.call(move |c| c.ws.machine.reify_id(id)).await?;
    Ok(Json(to_json(&h)))
}

#[derive(Debug, Deserialize)]
pub struct ReflectRequest {
    pub hypertext: serde_json::Value,
}

pub async fn reflect(State(app): State<AppState>, Json(req): Json<ReflectRequest>) -> ApiResult<serde_json::Value> {
    let src = decode(&req.hypertext)?;
    let id = app
        .worker
        .call(move |c| {
            c.ws.command(|ws| {
                let id = ws.machine.reflect_hypertext(&src)?;
                ws.check_styles()?;
                Ok(id)
            })
        })
        .await?
        .0;
    Ok(Json(json!({ "id": id })))
}

pub async fn execute(State(app): State<AppState>, Path(id): Path<u64>) -> ApiResult<serde_json::Value> {
    let id = app.worker.call(move |c| c.ws.command(|ws| ws.machine.execute_entity(id).map_err(WsError::from))).await?.0;
    Ok(Json(json!({ "id": id })))
}

#[derive(Debug, Deserialize)]
pub struct Part {
    pub label: String,
    pub id: u64,
}

#[derive(Debug, Deserialize)]
pub struct ComposeRequest {
    pub parts: Vec<Part>,
    #[serde(default)]
    pub unifications: Vec<(String, String)>,
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_')
}

/// Assemble `compose{ l as ⟦l#id⟧ .. where { p unifies p .. } }`. Stored
/// abstractions are applied to no arguments; behaviours are used as they are.
fn compose_source(ws: &Workspace, req: &ComposeRequest) -> Result<SourceSegmentList, ApiError> {
    if req.parts.is_empty() {
        return Err(ApiError::bad_request("runtime", "compose needs at least one part"));
    }
    let mut src = SourceSegmentList::new();
    src.push_text("compose{ ");
    for (i, p) in req.parts.iter().enumerate() {
        if !is_identifier(&p.label) {
            return Err(ApiError::bad_request("parse", format!("`{}` is not a label", p.label)));
        }
        let v = ws.machine.stored(p.id)?;
        if i > 0 {
            src.push_text(" and ");
        }
        src.push_text(&format!("{} as ", p.label));
        src.push_link(p.id, &p.label);
        if let Value::Closure(c) = v {
            if ws.machine.closure(c).kind == ClosureKind::Abstraction {
                src.push_text("()");
            }
        }
    }
    if !req.unifications.is_empty() {
        let pairs: Vec<String> = req.unifications.iter().map(|(a, b)| format!("{a} unifies {b}")).collect();
        src.push_text(&format!(" where{{ {} }}", pairs.join(", ")));
    }
    src.push_text(" }");
    Ok(src)
}

pub async fn compose(State(app): State<AppState>, Json(req): Json<ComposeRequest>) -> ApiResult<serde_json::Value> {
    let (handle, id) = app
        .worker
        .call(move |c| -> Result<(BehId, u64), ApiError> {
            let src = compose_source(&c.ws, &req)?;
            let (v, _) = c.ws.command(|ws| {
                let (v, _) = ws.machine.reflect_source(&src)?;
                ws.check_styles()?;
                Ok(v)
            })?;
            let Value::Behaviour(h) = v else {
                return Err(ApiError::bad_request("runtime", "compose did not yield a behaviour"));
            };
            let id = c.ws.machine.store.intern(&v, &format!("b{h}"));
            Ok((h, id))
        })
        .await?;
    Ok(Json(json!({ "handle": handle, "id": id })))
}

#[derive(Debug, Deserialize)]
pub struct StyleQuery {
    pub handle: BehId,
}

pub async fn check_style(
    State(app): State<AppState>,
    Path(name): Path<String>,
    Query(q): Query<StyleQuery>,
) -> ApiResult<serde_json::Value> {
    let report = app
        .worker
        .call(move |c| -> Result<_, ApiError> {
            if c.ws.machine.styles.get(&name).is_none() {
                return Err(ApiError::not_found(format!("no style `{name}`")));
            }
            if c.ws.machine.behaviour(q.handle).is_none() {
                return Err(ApiError::not_found(format!("no behaviour b{}", q.handle)));
            }
            Ok(c.ws.check_style(&name, q.handle)?)
        })
        .await?;
    Ok(Json(json!({
        "style": report.style,
        "conforms": report.conforms(),
        "violations": report.violations,
    })))
}

pub async fn trace(State(app): State<AppState>) -> Json<serde_json::Value> {
    let (length, hash) = app.worker.call(|c| (c.ws.machine.trace.len(), c.ws.trace_hash())).await;
    Json(json!({ "length": length, "hash": hash }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_must_be_identifiers() {
        assert!(is_identifier("view_server"));
        assert!(is_identifier("_x1"));
        assert!(!is_identifier("1x"));
        assert!(!is_identifier("a b"));
        assert!(!is_identifier(""));
    }

    #[test]
    fn compose_source_applies_abstractions() {
        let mut ws = Workspace::new(1);
        ws.eval_str("value a = abstraction() { value c = connection() ; via c send }").unwrap();
        let id = ws.binding_id("a").unwrap();
        let req = ComposeRequest {
            parts: vec![Part { label: "left".into(), id }],
            unifications: vec![("left::c".into(), "left::c".into())],
        };
        let src = compose_source(&ws, &req).unwrap();
        assert_eq!(src.display_text(), "compose{ left as left() where{ left::c unifies left::c } }");
        assert_eq!(src.link_ids(), vec![id]);
    }

    #[test]
    fn plain_text_hypertext_is_accepted() {
        let s = decode(&json!("value x = 1")).unwrap();
        assert_eq!(s.to_plain_text(), "value x = 1");
        assert!(decode(&json!({ "segments": 3 })).is_err());
    }
}
