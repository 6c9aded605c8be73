mod common;

use common::*;
use evoarch::workspace::{Workspace, SNAPSHOT_MAGIC};

#[test]
fn reloading_between_phases_leaves_the_trace_unchanged() {
    for seed in [0, 5, 17] {
        let plain = evolve(seed);
        let reloaded = evolve_with(seed, &mut save_and_reload);
        assert_eq!(plain.trace_hash(), reloaded.trace_hash(), "seed {seed}");
        assert_eq!(deref_int(&reloaded, "count"), 10);
    }
}

#[test]
fn reloading_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ws.snap");
    let plain = evolve(3);
    let reloaded = evolve_with(3, &mut |ws: &mut Workspace| {
        ws.save_to(&path).unwrap();
        *ws = Workspace::load_from(&path).unwrap();
    });
    assert_eq!(plain.trace_hash(), reloaded.trace_hash());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with(SNAPSHOT_MAGIC));
}

#[test]
fn snapshot_reproduces_state_hash() {
    let mut ws = evolve(8);
    let before = ws.state_hash();
    save_and_reload(&mut ws);
    assert_eq!(ws.state_hash(), before);
}

#[test]
fn saving_a_busy_workspace_is_refused() {
    let mut ws = Workspace::new(0);
    ws.step_budget = 10;
    ws.eval_str("value c = connection() ; replicate { via c send } ; replicate { via c receive }").unwrap();
    let err = ws.save_snapshot().unwrap_err();
    assert_eq!(err.phase(), "runtime");
    assert!(err.to_string().contains("quiescent"), "{err}");
}

#[test]
fn corrupt_snapshots_are_rejected() {
    assert!(Workspace::load_snapshot("not a snapshot").is_err());
    assert!(Workspace::load_snapshot(&format!("{SNAPSHOT_MAGIC}\n{{\"version\":1}}")).is_err());
}

#[test]
fn failed_inputs_leave_no_trace() {
    let mut ws = evolve(2);
    let before = ws.state_hash();
    let trace = ws.trace_hash();
    for bad in [
        "value x = 1 +",
        "value y = 1 + \"s\"",
        "value z = 1 / 0",
        "value w = sequence(1, 2)::5",
        "value v = compose{ again as cs_seq::1.bhvr }",
        "value q = decompose c_display",
    ] {
        assert!(ws.eval_str(bad).is_err(), "{bad}");
        assert_eq!(ws.state_hash(), before, "{bad}");
        assert_eq!(ws.trace_hash(), trace, "{bad}");
    }
}

#[test]
fn garbage_collection_keeps_bound_values() {
    let mut ws = evolve(2);
    ws.eval_str("value scratch = sequence(1, 2, 3)").unwrap();
    let kept = ws.binding_id("count").unwrap();
    ws.collect_garbage();
    assert!(ws.machine.stored(kept).is_ok());
    assert_eq!(deref_int(&ws, "count"), 10);
}

#[test]
fn reloading_never_changes_a_scenario_trace() {
    let scenarios = persistence_scenarios();
    assert_eq!(scenarios.len(), 10);
    for (n, inputs) in scenarios.iter().enumerate() {
        for seed in [1, 9] {
            assert_eq!(replay(seed, inputs, false), replay(seed, inputs, true), "scenario {n} seed {seed}");
        }
    }
}
