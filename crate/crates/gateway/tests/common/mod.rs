#![allow(dead_code)]

use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use evoarch::hypercode::{from_json, replace_first, to_json, transform};
use evoarch::syntax::SourceSegmentList;
use evoarch::workspace::Workspace;
use evoarch_gateway::{router, AppState, Envelope, GatewayConfig, Notice};
use futures::StreamExt;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

pub const PRELUDE: &str = include_str!("../fixtures/prelude.adl");
pub const CLIENT: &str = include_str!("../fixtures/client.adl");
pub const SERVER: &str = include_str!("../fixtures/server.adl");
pub const SYSTEM: &str = include_str!("../fixtures/system.adl");
pub const DOUBLING: &str = include_str!("../fixtures/doubling.adl");
pub const CLIENT_SERVER_STYLE: &str = include_str!("../fixtures/client_server_style.adl");

pub const EVOLVED_UNIFICATIONS: [(&str, &str); 3] = [
    ("client::c_start", "command_server::s_start"),
    ("client::c_stop", "command_server::s_stop"),
    ("client::c_get", "view_server::s_put"),
];

pub const VIEW_SERVER_EDITS: &[(&str, &str)] = &[
    ("{", "abstraction()\n{"),
    ("  value s_start = s_start ;\n  value s_stop = s_stop ;\n", ""),
    ("choose {\n    {\n      via s_stop receive ;\n      stop_experiment()\n    }\n    or {", "{"),
    ("current_view\n    }\n  }\n}", "current_view\n  }\n}"),
];

pub const COMMAND_SERVER_EDITS: &[(&str, &str)] = &[
    ("{", "abstraction()\n{"),
    ("  value s_put = s_put ;\n  value count = count ;\n  free { count } ;\n", ""),
    ("choose {\n    {", "choose {\n    { via s_start receive }\n    or {"),
    ("\n    or {\n      via exp_input receive current_view : string ;\n      count := count + 1 ;\n      via s_put send current_view\n    }", ""),
];

pub fn app(seed: u64) -> Router {
    router(AppState::new(seed))
}

pub fn app_with(config: GatewayConfig, make: impl FnOnce() -> Workspace + Send + 'static) -> Router {
    router(AppState::with(config, make))
}

pub async fn call(app: &Router, method: Method, path: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(path);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

pub async fn get(app: &Router, path: &str) -> (StatusCode, Value) {
    call(app, Method::GET, path, None).await
}

pub async fn post(app: &Router, path: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, path, Some(body)).await
}

pub async fn eval_ok(app: &Router, src: &str) -> Value {
    let (s, v) = post(app, "/v1/eval", json!({ "hypertext": to_json(&SourceSegmentList::from_plain_text(src)) })).await;
    assert_eq!(s, StatusCode::OK, "{src}: {v}");
    v
}

pub fn edit_all(src: &SourceSegmentList, edits: &[(&str, &str)]) -> SourceSegmentList {
    let mut cur = src.clone();
    for (from, to) in edits {
        let script =
            replace_first(&cur, from, to).unwrap_or_else(|| panic!("{from:?} not found in {}", cur.display_text()));
        cur = transform(&cur, &script).unwrap();
    }
    cur
}

/// The composite handle that `name`'s components report as their parent.
pub async fn composite_of(app: &Router, label: &str) -> u64 {
    let (_, rows) = get(app, "/v1/behaviours").await;
    rows.as_array()
        .unwrap()
        .iter()
        .find(|r| r["label"] == label)
        .and_then(|r| r["parent"].as_u64())
        .unwrap_or_else(|| panic!("no composed `{label}` in {rows}"))
}

/// Drive the whole evolution through the API: start the system, decompose
/// it, derive two servers from the old one's hyper-code and recompose.
/// With `display`, a recorder behaviour consumes the client's output so
/// views can be fed before the decompose. Returns the new composite's handle.
pub async fn evolve_via_api(app: &Router, display: bool, feed: usize) -> u64 {
    eval_ok(app, PRELUDE).await;
    if display {
        eval_ok(app, "display()").await;
    }
    for src in [CLIENT, SERVER, SYSTEM] {
        eval_ok(app, src).await;
    }
    for i in 1..=feed {
        eval_ok(app, &format!("via exp_input send \"view {i}\"")).await;
    }
    let h = composite_of(app, "client").await;
    let (s, views) = post(app, &format!("/v1/behaviours/{h}/decompose"), json!({ "timeoutSteps": 10_000 })).await;
    assert_eq!(s, StatusCode::OK, "{views}");
    let labels: Vec<&str> = views.as_array().unwrap().iter().map(|v| v["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["client", "server"]);
    let client_id = views[0]["behaviourId"].as_u64().unwrap();
    let server_id = views[1]["behaviourId"].as_u64().unwrap();
    let (s, code) = get(app, &format!("/v1/values/{server_id}/reify")).await;
    assert_eq!(s, StatusCode::OK);
    let code = from_json(&code).unwrap();
    let mut ids = Vec::new();
    for edits in [VIEW_SERVER_EDITS, COMMAND_SERVER_EDITS] {
        let derived = edit_all(&code, edits);
        let (s, r) = post(app, "/v1/reflect", json!({ "hypertext": to_json(&derived) })).await;
        assert_eq!(s, StatusCode::OK, "{r}");
        ids.push(r["id"].as_u64().unwrap());
    }
    let unifications: Vec<[&str; 2]> = EVOLVED_UNIFICATIONS.iter().map(|(a, b)| [*a, *b]).collect();
    let (s, r) = post(
        app,
        "/v1/compose",
        json!({
            "parts": [
                { "label": "client", "id": client_id },
                { "label": "view_server", "id": ids[0] },
                { "label": "command_server", "id": ids[1] },
            ],
            "unifications": unifications,
        }),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{r}");
    r["handle"].as_u64().unwrap()
}

pub struct Served {
    pub app: Router,
    pub addr: std::net::SocketAddr,
}

pub async fn serve(config: GatewayConfig, seed: u64) -> Served {
    let state = AppState::with(config, move || Workspace::new(seed));
    let app = router(state.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(evoarch_gateway::serve(listener, state));
    Served { app, addr }
}

pub type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub async fn subscribe(addr: std::net::SocketAddr, cursor: Option<u64>) -> Socket {
    let url = match cursor {
        Some(c) => format!("ws://{addr}/v1/events?cursor={c}"),
        None => format!("ws://{addr}/v1/events"),
    };
    tokio_tungstenite::connect_async(url).await.unwrap().0
}

pub async fn next_event(socket: &mut Socket) -> Envelope {
    loop {
        let m = tokio::time::timeout(Duration::from_secs(10), socket.next())
            .await
            .expect("event stream stalled")
            .expect("event stream closed")
            .unwrap();
        if let Message::Text(t) = m {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Non-heartbeat events up to and including the completion of run `token`.
pub async fn events_until_run(socket: &mut Socket, token: u64) -> Vec<Envelope> {
    let mut out = Vec::new();
    loop {
        let e = next_event(socket).await;
        match &e.notice {
            Notice::Heartbeat => continue,
            Notice::RunComplete { token: t, .. } if *t == token => {
                out.push(e);
                return out;
            }
            _ => out.push(e),
        }
    }
}

/// Queue an asynchronous eval and return its run token.
pub async fn eval_async(app: &Router, src: &str) -> u64 {
    let (s, v) = post(app, "/v1/eval", json!({ "hypertext": src, "async": true })).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    v["runToken"].as_u64().unwrap()
}
