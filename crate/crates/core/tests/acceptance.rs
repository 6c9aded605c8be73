//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use evoarch::runtime::{EventKind, Machine, Value};
use evoarch::syntax::parse_str;
use evoarch::typesys::{check_program, NoLinks};
use evoarch::workspace::Workspace;

const CORPUS_LIMIT: Duration = Duration::from_secs(1);
const DOUBLER_LIMIT: Duration = Duration::from_secs(1);
const ROUND_TRIP_LIMIT: Duration = Duration::from_secs(1);
const EVOLUTION_LIMIT: Duration = Duration::from_secs(2);
const CHOICE_LIMIT: Duration = Duration::from_secs(2);
const ORACLE_LIMIT: Duration = Duration::from_secs(30);
const CHOICE_TRIALS: u64 = 3000;
const CHOICE_BAND: (usize, usize) = (900, 1100);
const ORACLE_SYSTEMS: usize = 200;
const ORACLE_SEEDS: u64 = 64;
const UNIFICATION_BUDGET: u64 = 10_000;

type Check = Result<String, String>;

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let r = f();
    let took = start.elapsed();
    match r {
        Ok(detail) if took <= limit => Ok(format!("{detail}; {took:.2?}")),
        Ok(detail) => Err(format!("{detail}; took {took:.2?}, limit {limit:?}")),
        Err(e) => Err(e),
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn corpus() -> Check {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus");
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let mut env = Machine::new(0).global_type_env();
    let mut errors = Vec::new();
    for f in &files {
        let src = std::fs::read_to_string(f).unwrap();
        match parse_str(&src)
            .map_err(|e| e.to_string())
            .and_then(|t| check_program(&t, &env, &NoLinks).map_err(|e| e.to_string()))
        {
            Ok(c) => env = c.env,
            Err(e) => errors.push(format!("{}: {e}", f.display())),
        }
    }
    ensure(errors.is_empty(), errors.join("; "))?;
    Ok(format!("{} listings, 0 errors", files.len()))
}

fn doubler() -> Check {
    let mut ws = Workspace::new(42);
    ws.eval_str(
        "value in_channel = connection(integer) ; value out_channel = connection(integer) ;\n\
         value results = location(sequence[integer]())",
    )
    .map_err(|e| e.to_string())?;
    ws.eval_str(&corpus_file("02_replication.adl")).map_err(|e| e.to_string())?;
    ws.eval_str(
        "value feeder = abstraction(n : integer) { if n <= 100 then { via in_channel send n ; \
         via out_channel receive r ; results := results ++ sequence(r) ; feeder(n + 1) } else { } } ;\n\
         feeder(1)",
    )
    .map_err(|e| e.to_string())?;
    let got: Vec<i64> = match ws.binding("results") {
        Some(Value::Loc(l)) => match &ws.machine.location(l).value {
            Value::Seq(_, xs) => xs.iter().map(|v| if let Value::Int(i) = v { *i } else { -1 }).collect(),
            _ => vec![],
        },
        _ => vec![],
    };
    let want: Vec<i64> = (1..=100).map(|n| 2 * n).collect();
    ensure(
        got == want,
        format!(
            "received {} values, first mismatch at {:?}",
            got.len(),
            got.iter().zip(&want).position(|(a, b)| a != b)
        ),
    )?;
    let clones = count_events(&ws, EventKind::ReplicateClone);
    ensure(clones == 100, format!("{clones} clones"))?;
    Ok("2..200 in order, 100 clones".into())
}

fn round_trip_check() -> Check {
    let mut ws = Workspace::new(1);
    ws.eval_str(SHARED_CHANNEL_SYSTEM).map_err(|e| e.to_string())?;
    ws.eval_str("value pos_seq = decompose system ; value l1 = pos_seq::1.label ; value l2 = pos_seq::2.label")
        .map_err(|e| e.to_string())?;
    let labels = (ws.binding("l1"), ws.binding("l2"));
    ensure(
        labels == (Some(Value::Str("pos_client".into())), Some(Value::Str("pos_server".into()))),
        format!("labels {labels:?}"),
    )?;
    for seed in 0..5 {
        let (a, b) = round_trip(seed, &[SHARED_CHANNEL_SYSTEM], SHARED_RECOMPOSE);
        ensure(a == b, format!("seed {seed}: {a} vs {b}"))?;
    }
    Ok("2 views labelled pos_client, pos_server; recomposed trace hash-equal over 5 seeds".into())
}

fn unification() -> Check {
    let ((with_n, _), (without_n, without_quiet)) = unification_listing(3);
    ensure(with_n >= 1, "no SEND_RECV with the where-clause")?;
    ensure(without_n == 0, format!("{without_n} SEND_RECV without the where-clause"))?;
    ensure(without_quiet, format!("not quiescent within {UNIFICATION_BUDGET} steps"))?;
    Ok(format!("with: {with_n} SEND_RECV; without: 0 and quiescent"))
}

fn evolution() -> Check {
    let ws = evolve(2024);
    let count = deref_int(&ws, "count");
    ensure(count == 10, format!("counter reads {count}"))?;
    let shown = match ws.binding("shown") {
        Some(Value::Loc(l)) => match &ws.machine.location(l).value {
            Value::Seq(_, xs) => xs.len(),
            _ => 0,
        },
        _ => 0,
    };
    ensure(shown == 10, format!("{shown} views displayed"))?;
    let running = match ws.binding("experiment_running") {
        Some(Value::Loc(l)) => ws.machine.location(l).value.clone(),
        _ => Value::Unit,
    };
    ensure(running == Value::Bool(false), "stop command not delivered")?;
    Ok("10 views displayed, counter 10, experiment stopped".into())
}

fn choice() -> Check {
    let counts = choice_counts(CHOICE_TRIALS);
    ensure(counts.iter().all(|c| (CHOICE_BAND.0..=CHOICE_BAND.1).contains(c)), format!("counts {counts:?}"))?;
    Ok(format!("counts {counts:?}"))
}

fn oracle() -> Check {
    let r = scheduler_oracle(ORACLE_SYSTEMS, ORACLE_SEEDS);
    ensure(r.subset_failures.is_empty(), format!("{} systems reached unenumerated states", r.subset_failures.len()))?;
    ensure(r.coverage_failures.is_empty(), format!("{} small systems not fully covered", r.coverage_failures.len()))?;
    Ok(format!("{} systems, {} fully covered, {} with races", r.systems, r.small_systems, r.racy_systems))
}

fn hypercode() -> Check {
    let (n, failures) = entity_round_trip(5);
    ensure(n >= 20, format!("only {n} entities"))?;
    ensure(failures.is_empty(), failures.join(" | "))?;
    Ok(format!("{n} entities"))
}

fn styles() -> Check {
    let mut ws = Workspace::new(4);
    for src in [
        corpus_file("01_client_server_style.adl"),
        SCENARIO_PRELUDE.to_string(),
        styled(CLIENT, "Client"),
        styled(SERVER, "Server"),
        SYSTEM.to_string(),
    ] {
        ws.eval_str(&src).map_err(|e| e.to_string())?;
    }
    let Some(Value::Behaviour(h)) = ws.binding("CS_system1") else { return Err("no CS_system1".into()) };
    let r = ws.check_style("Client_Server", h).map_err(|e| e.to_string())?;
    ensure(r.conforms(), format!("CS_system1: {:?}", r.violations))?;
    ws.eval_str("value pair = compose{ first as client_abs() and second as client_abs() where { first::c_start unifies second::c_start } }")
        .map_err(|e| e.to_string())?;
    let Some(Value::Behaviour(p)) = ws.binding("pair") else { return Err("no pair".into()) };
    let r = ws.check_style("Client_Server", p).map_err(|e| e.to_string())?;
    let want = vec![("c1".to_string(), "first".to_string()), ("c2".to_string(), "second".to_string())];
    ensure(r.violations.iter().any(|v| v.witness == want), format!("witnesses {:?}", r.violations))?;
    let (n, bad) = style_brute_force();
    ensure(bad.is_empty(), format!("{} of {n} topologies disagree", bad.len()))?;
    Ok(format!("CS_system1 conforms; witness (first, second); {n} topologies agree"))
}

fn persistence() -> Check {
    let scenarios = persistence_scenarios();
    for (i, inputs) in scenarios.iter().enumerate() {
        let (a, b) = (replay(11, inputs, false), replay(11, inputs, true));
        ensure(a == b, format!("scenario {i} diverged"))?;
    }
    let plain = evolve(12).trace_hash();
    let reloaded = evolve_with(12, &mut save_and_reload).trace_hash();
    ensure(plain == reloaded, "evolution scenario diverged")?;
    Ok(format!("{} scenarios plus the evolution scenario", scenarios.len()))
}

fn main() {
    let checks: Vec<(&str, Box<dyn FnOnce() -> Check>)> = vec![
        ("corpus parses and checks", Box::new(|| timed(CORPUS_LIMIT, corpus))),
        ("doubling server", Box::new(|| timed(DOUBLER_LIMIT, doubler))),
        ("compose/decompose round trip", Box::new(|| timed(ROUND_TRIP_LIMIT, round_trip_check))),
        ("unification semantics", Box::new(unification)),
        ("evolution scenario", Box::new(|| timed(EVOLUTION_LIMIT, evolution))),
        ("choice uniformity", Box::new(|| timed(CHOICE_LIMIT, choice))),
        ("scheduler oracle", Box::new(|| timed(ORACLE_LIMIT, oracle))),
        ("hyper-code round trip", Box::new(hypercode)),
        ("style checking", Box::new(styles)),
        ("persistence fidelity", Box::new(persistence)),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match r {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
