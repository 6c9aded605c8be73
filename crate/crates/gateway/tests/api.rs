mod common;

use axum::http::StatusCode;
use common::*;
use evoarch::workspace::Workspace;
use evoarch_gateway::GatewayConfig;
use serde_json::json;

#[tokio::test]
async fn empty_workspace_has_no_behaviours_or_bindings() {
    let app = app(1);
    assert_eq!(get(&app, "/v1/behaviours").await, (StatusCode::OK, json!([])));
    assert_eq!(get(&app, "/v1/bindings").await, (StatusCode::OK, json!([])));
}

#[tokio::test]
async fn eval_of_the_system_binds_it() {
    let app = app(1);
    for src in [PRELUDE, CLIENT, SERVER] {
        eval_ok(&app, src).await;
    }
    let r = eval_ok(&app, SYSTEM).await;
    let names: Vec<&str> = r["bindings"].as_array().unwrap().iter().map(|b| b["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["CS_system1"]);
    assert_eq!(r["quiescent"], true);
    let (_, all) = get(&app, "/v1/bindings").await;
    let row = all.as_array().unwrap().iter().find(|b| b["name"] == "CS_system1").unwrap();
    assert_eq!(row["type"], "behaviour");
    let (_, rows) = get(&app, "/v1/behaviours").await;
    let labels: Vec<&str> = rows.as_array().unwrap().iter().filter_map(|r| r["label"].as_str()).collect();
    assert_eq!(labels, ["client", "server"]);
}

#[tokio::test]
async fn plain_text_eval_reports_the_value() {
    let app = app(1);
    let (s, r) = post(&app, "/v1/eval", json!({ "hypertext": "value x = 2 + 2" })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["bindings"][0]["rendered"], "4");
}

#[tokio::test]
async fn errors_are_structured() {
    let app = app(1);
    let (s, e) = post(&app, "/v1/eval", json!({ "hypertext": "value = 3" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["phase"], "parse");
    assert_eq!(e["position"]["line"], 1);

    let (s, e) = post(&app, "/v1/eval", json!({ "hypertext": "value x = 1 + \"a\"" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["phase"], "type");
    assert!(e["position"].is_object());

    let (s, e) = post(&app, "/v1/eval", json!({ "hypertext": "value x = 1 / 0" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["phase"], "runtime");
    assert!(e["position"].is_null());

    let (s, e) = post(&app, "/v1/eval", json!({ "hypertext": { "version": 1, "segments": "nope" } })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{e}");
    assert_eq!(get(&app, "/v1/bindings").await.1, json!([]));
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let app = app(1);
    assert_eq!(get(&app, "/v1/values/999/reify").await.0, StatusCode::NOT_FOUND);
    assert_eq!(post(&app, "/v1/behaviours/999/decompose", json!({})).await.0, StatusCode::NOT_FOUND);
    assert_eq!(post(&app, "/v1/values/999/execute", json!({})).await.0, StatusCode::NOT_FOUND);
    let (s, _) = post(&app, "/v1/compose", json!({ "parts": [{ "label": "a", "id": 999 }] })).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    eval_ok(&app, CLIENT_SERVER_STYLE).await;
    assert_eq!(get(&app, "/v1/styles/Client_Server/check?handle=77").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/v1/styles/Pipe_Filter/check?handle=0").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn busy_composite_cannot_be_decomposed_in_time() {
    let app = app_with(GatewayConfig::default(), || {
        let mut ws = Workspace::new(3);
        ws.step_budget = 500;
        ws
    });
    let src = "value c = connection() ;\
               value busy = compose{ a as replicate{ via c send } and b as replicate{ via c receive } }";
    let (s, r) = post(&app, "/v1/eval", json!({ "hypertext": src })).await;
    assert_eq!(s, StatusCode::OK, "{r}");
    assert_eq!(r["quiescent"], false);
    let h = composite_of(&app, "a").await;
    let (s, e) = post(&app, &format!("/v1/behaviours/{h}/decompose"), json!({ "timeoutSteps": 50 })).await;
    assert_eq!(s, StatusCode::CONFLICT, "{e}");
    assert_eq!(composite_of(&app, "a").await, h);
}

#[tokio::test]
async fn reify_then_reflect_gives_an_equal_value() {
    let app = app(1);
    eval_ok(&app, "value xs = sequence(1, 2, 3)").await;
    let (_, bs) = get(&app, "/v1/bindings").await;
    let id = bs[0]["id"].as_u64().unwrap();
    let (s, h) = get(&app, &format!("/v1/values/{id}/reify")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(h["version"], 1);
    assert!(h["segments"].is_array() && h["manifest"].is_array());
    let (s, r) = post(&app, "/v1/reflect", json!({ "hypertext": h })).await;
    assert_eq!(s, StatusCode::OK, "{r}");
    let back = r["id"].as_u64().unwrap();
    let (_, h2) = get(&app, &format!("/v1/values/{back}/reify")).await;
    assert_eq!(h, h2);
}

#[tokio::test]
async fn evolution_through_the_api_ends_with_three_components() {
    let app = app(7);
    let h = evolve_via_api(&app, false, 0).await;
    let (_, rows) = get(&app, "/v1/behaviours").await;
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3, "{rows:?}");
    let labels: Vec<&str> = rows.iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["client", "view_server", "command_server"]);
    assert!(rows.iter().all(|r| r["parent"] == h));
}

#[tokio::test]
async fn evolved_system_keeps_counting_and_serving() {
    let app = app(11);
    let h = evolve_via_api(&app, true, 5).await;
    for i in 6..=10 {
        eval_ok(&app, &format!("via exp_input send \"view {i}\"")).await;
    }
    eval_ok(&app, "via user_input send").await;
    let r = eval_ok(
        &app,
        r#"value running = if experiment_running then "on" else "off" ; value views = shown ++ sequence[exp_view]()"#,
    )
    .await;
    assert_eq!(r["bindings"][0]["rendered"], "\"off\"", "{r}");
    let views = r["bindings"][1]["rendered"].as_str().unwrap().to_string();
    for i in 1..=10 {
        assert!(views.contains(&format!("\"view {i}\"")), "{views}");
    }
    let (_, rows) = get(&app, "/v1/behaviours").await;
    assert!(rows.as_array().unwrap().iter().any(|r| r["parent"] == h));
}

#[tokio::test]
async fn mismatched_unification_is_a_bad_request() {
    let app = app(1);
    eval_ok(
        &app,
        "value a = abstraction() { value x = connection(integer) ; via x send 1 } ;\
         value b = abstraction() { value y = connection(string) ; via y receive s : string }",
    )
    .await;
    let (_, bs) = get(&app, "/v1/bindings").await;
    let id = |n: &str| bs.as_array().unwrap().iter().find(|b| b["name"] == n).unwrap()["id"].as_u64().unwrap();
    let (s, e) = post(
        &app,
        "/v1/compose",
        json!({ "parts": [{ "label": "l", "id": id("a") }, { "label": "r", "id": id("b") }], "unifications": [["l::x", "r::y"]] }),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{e}");
    assert_eq!(e["phase"], "runtime");
    assert_eq!(get(&app, "/v1/behaviours").await.1, json!([]));
}

async fn styled_app() -> axum::Router {
    let app = app(4);
    eval_ok(&app, CLIENT_SERVER_STYLE).await;
    eval_ok(&app, PRELUDE).await;
    let tag = |src: &str, style: &str| {
        src.replace("abstraction()\n{", &format!("abstraction() in style {style}\n{{"))
            .replace("connection();", "connection() in style PC;")
            .replace("connection( exp_view );", "connection( exp_view ) in style PC;")
    };
    eval_ok(&app, &tag(CLIENT, "Client")).await;
    eval_ok(&app, &tag(SERVER, "Server")).await;
    app
}

#[tokio::test]
async fn style_check_reports_conformance_and_witnesses() {
    let app = styled_app().await;
    eval_ok(&app, SYSTEM).await;
    let h = composite_of(&app, "client").await;
    let (s, r) = get(&app, &format!("/v1/styles/Client_Server/check?handle={h}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["conforms"], true, "{r}");

    eval_ok(&app, "value pair = compose{ first as client_abs() and second as client_abs() where { first::c_start unifies second::c_start } }")
        .await;
    let h = composite_of(&app, "first").await;
    let (_, r) = get(&app, &format!("/v1/styles/Client_Server/check?handle={h}")).await;
    assert_eq!(r["conforms"], false);
    let witnesses: Vec<_> = r["violations"].as_array().unwrap().iter().map(|v| v["witness"].clone()).collect();
    assert!(witnesses.contains(&json!([["c1", "first"], ["c2", "second"]])), "{witnesses:?}");
}
