mod common;

use common::*;
use evoarch::runtime::{EventKind, Value};
use evoarch::workspace::Workspace;

fn styled_workspace() -> Workspace {
    let mut ws = Workspace::new(4);
    ws.eval_str(&corpus_file("01_client_server_style.adl")).unwrap();
    ws.eval_str(SCENARIO_PRELUDE).unwrap();
    ws.eval_str(&styled(CLIENT, "Client")).unwrap();
    ws.eval_str(&styled(SERVER, "Server")).unwrap();
    ws
}

fn handle(ws: &Workspace, name: &str) -> u64 {
    match ws.binding(name) {
        Some(Value::Behaviour(h)) => h,
        v => panic!("{v:?}"),
    }
}

#[test]
fn client_server_system_conforms() {
    let mut ws = styled_workspace();
    ws.eval_str(SYSTEM).unwrap();
    let h = handle(&ws, "CS_system1");
    let r = ws.check_style("Client_Server", h).unwrap();
    assert!(r.conforms(), "{r:?}");
    assert!(ws.machine.trace.iter().all(|e| e.kind != EventKind::ConstraintViolation));
}

#[test]
fn two_clients_on_one_connector_violate_with_witness() {
    let mut ws = styled_workspace();
    ws.eval_str("value pair = compose{ first as client_abs() and second as client_abs() where { first::c_start unifies second::c_start } }")
        .unwrap();
    let h = handle(&ws, "pair");
    let r = ws.check_style("Client_Server", h).unwrap();
    let witnesses: Vec<_> = r.violations.iter().map(|v| v.witness.clone()).collect();
    assert!(witnesses.contains(&vec![("c1".into(), "first".into()), ("c2".into(), "second".into())]), "{witnesses:?}");
    assert!(ws.machine.trace.iter().any(|e| e.kind == EventKind::ConstraintViolation));
}

#[test]
fn unknown_style_is_an_error() {
    let mut ws = styled_workspace();
    ws.eval_str(SYSTEM).unwrap();
    let h = handle(&ws, "CS_system1");
    assert!(ws.check_style("Pipe_Filter", h).is_err());
}

#[test]
fn checker_agrees_with_direct_evaluation_on_small_topologies() {
    let (n, bad) = style_brute_force();
    assert!(n > 10_000, "{n}");
    assert!(bad.is_empty(), "{} disagreements, first: {}", bad.len(), bad[0]);
}
