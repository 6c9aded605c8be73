#![allow(dead_code)]

use evoarch::hypercode::{replace_first, transform};
use evoarch::runtime::{EventKind, Value};
use evoarch::syntax::{Segment, SourceSegmentList};
use evoarch::workspace::Workspace;
use rand::Rng;

pub const SCENARIO_PRELUDE: &str = r#"
type exp_view = string ;
value c_display = connection(exp_view) ;
value user_input = connection() ;
value exp_input = connection(exp_view) ;
value shown = location(sequence[exp_view]()) ;
value experiment_running = location(false) ;
value start_experiment = function() -> boolean { experiment_running := true ; experiment_running } ;
value stop_experiment = function() -> boolean { experiment_running := false ; experiment_running } ;
value display = abstraction() replicate { via c_display receive ev : exp_view ; shown := shown ++ sequence(ev) }
"#;

pub const CLIENT: &str = r#"
value client_abs = abstraction()
{ value c_start = connection();
  value c_stop = connection();
  value c_get = connection( exp_view );
  via c_start send ;
  replicate
  choose{
    { via c_get receive ev : exp_view ;
      via c_display send ev } or
    { via user_input receive ;
      via c_stop send } }
}
"#;

pub const SERVER: &str = r#"
value server_abs = abstraction()
{ value s_start = connection();
  value s_stop = connection();
  value s_put = connection( exp_view );
  value count = location(0) ;
  free{ count } ;
  via s_start receive ;
  start_experiment();
  replicate
  choose{
    { via s_stop receive ;
      stop_experiment() } or
    { via exp_input receive current_view ;
      count := count + 1 ;
      via s_put send current_view } }
}
"#;

pub const SYSTEM: &str = r#"
display() ;
value CS_system1 =
compose{
  client as client_abs() and server as server_abs()
  where{
    client::c_start unifies server::s_start,
    client::c_stop unifies server::s_stop,
    client::c_get unifies server::s_put }
}
"#;

pub const EVOLVED: &str = r#"
value CS_system2 =
compose{
  client as cs_seq::1.bhvr
  and view_server as view_server_abs()
  and command_server as command_server_abs()
  where{
    client::c_start unifies command_server::s_start,
    client::c_stop unifies command_server::s_stop,
    client::c_get unifies view_server::s_put }
}
"#;

/// Feed `n` views into the experiment, numbered from `from`.
pub fn feed(ws: &mut Workspace, from: usize, n: usize) {
    for i in from..from + n {
        ws.eval_str(&format!("via exp_input send \"view {i}\"")).unwrap();
    }
}

/// The link segments of `src`, keyed by display text.
pub fn links_by_name(src: &SourceSegmentList) -> Vec<(String, u64)> {
    src.segments
        .iter()
        .filter_map(|s| match s {
            Segment::Link { id, display } => Some((display.clone(), *id)),
            _ => None,
        })
        .collect()
}

pub fn link_for(src: &SourceSegmentList, name: &str) -> u64 {
    links_by_name(src)
        .into_iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("no link named {name} in {}", src.to_plain_text()))
        .1
}

/// Apply text replacements, in order, to the displayed form of `src`.
/// Links that survive the edits keep their identifiers.
pub fn edit_all(src: &SourceSegmentList, edits: &[(&str, &str)]) -> SourceSegmentList {
    let mut cur = src.clone();
    for (from, to) in edits {
        let script =
            replace_first(&cur, from, to).unwrap_or_else(|| panic!("{from:?} not found in {}", cur.display_text()));
        cur = transform(&cur, &script).unwrap();
    }
    cur
}

/// Build hypertext from pieces where `Err((name, id))` stands for a link.
pub fn hypertext(pieces: &[Result<&str, (&str, u64)>]) -> SourceSegmentList {
    let mut out = SourceSegmentList::new();
    for p in pieces {
        match p {
            Ok(t) => out.push_text(*t),
            Err((d, id)) => out.push_link(*id, *d),
        }
    }
    out
}

pub fn deref_int(ws: &Workspace, name: &str) -> i64 {
    match ws.binding(name) {
        Some(Value::Loc(l)) => match &ws.machine.location(l).value {
            Value::Int(i) => *i,
            v => panic!("{name} holds {v}"),
        },
        v => panic!("{name} is {v:?}"),
    }
}

pub fn count_events(ws: &Workspace, kind: EventKind) -> usize {
    ws.machine.trace.iter().filter(|e| e.kind == kind).count()
}

/// Run the whole evolution: build, feed five views, decompose, derive the
/// two new servers from the reified server, recompose, feed five more and
/// send a stop command.
pub fn evolve(seed: u64) -> Workspace {
    evolve_with(seed, &mut |_| {})
}

/// As [`evolve`], calling `checkpoint` between phases.
pub fn evolve_with(seed: u64, checkpoint: &mut dyn FnMut(&mut Workspace)) -> Workspace {
    let mut ws = Workspace::new(seed);
    for src in [SCENARIO_PRELUDE, CLIENT, SERVER, SYSTEM] {
        ws.eval_str(src).unwrap();
    }
    checkpoint(&mut ws);
    feed(&mut ws, 1, 5);
    checkpoint(&mut ws);
    ws.eval_str("value cs_seq = decompose CS_system1").unwrap();
    ws.eval_str("value old_server = cs_seq::2.bhvr").unwrap();
    checkpoint(&mut ws);
    let id = ws.binding_id("old_server").unwrap();
    let server_code = ws.machine.reify_id(id).unwrap();
    let count = link_for(&server_code, "count");
    let view_server = edit_all(
        &server_code,
        &[
            ("{", "value view_server_abs = abstraction()\n{"),
            ("  value s_start = s_start ;\n  value s_stop = s_stop ;\n", ""),
            ("choose {\n    {\n      via s_stop receive ;\n      stop_experiment()\n    }\n    or {", "{"),
            ("current_view\n    }\n  }\n}", "current_view\n  }\n}"),
        ],
    );
    ws.eval(&view_server).unwrap();
    let command_server = edit_all(
        &server_code,
        &[
            ("{", "value command_server_abs = abstraction()\n{"),
            ("  value s_put = s_put ;\n  value count = count ;\n  free { count } ;\n", ""),
            ("choose {\n    {", "choose {\n    { via s_start receive }\n    or {"),
            ("\n    or {\n      via exp_input receive current_view : string ;\n      count := count + 1 ;\n      via s_put send current_view\n    }", ""),
        ],
    );
    ws.eval(&command_server).unwrap();
    checkpoint(&mut ws);
    ws.eval_str(EVOLVED).unwrap();
    ws.bind("count", ws.machine.stored(count).unwrap());
    checkpoint(&mut ws);
    feed(&mut ws, 6, 5);
    checkpoint(&mut ws);
    ws.eval_str("via user_input send").unwrap();
    ws
}

pub const SHARED_CHANNEL_SYSTEM: &str = r#"
value position = "56.34N 2.79W" ;
value trigger = connection() ;
value answers = location(sequence[string]()) ;
value channel_1 = connection() ;
value channel_2 = connection( string ) ;
value client = replicate{
    via trigger receive ;
    via channel_1 send ;
    via channel_2 receive pos : string ;
    answers := answers ++ sequence(pos) } ;
value server = replicate{
    via channel_1 receive ;
    via channel_2 send position } ;
value system = compose{ pos_client as client and pos_server as server }
"#;

pub const UNIFIED_PARTS: &str = r#"
value position = "56.34N 2.79W" ;
value trigger = connection() ;
value answers = location(sequence[string]()) ;
value client = abstraction()
{ value out_request = connection() ;
  value in_reply = connection( string ) ;
  replicate{
    via trigger receive ;
    via out_request send ;
    via in_reply receive pos : string ;
    answers := answers ++ sequence(pos) }
} ;
value server = abstraction()
{ value in_request = connection() ;
  value out_reply = connection(string) ;
  replicate{
    via in_request receive ;
    via out_reply send position }
}
"#;

pub const UNIFIED_SYSTEM: &str = r#"
value system =
  compose{ pos_client as client() and
           pos_server as server()
  where { pos_client::out_request unifies
          pos_server::in_request,
          pos_client::in_reply unifies
          pos_server::out_reply } }
"#;

pub const UNUNIFIED_SYSTEM: &str = r#"
value system = compose{ pos_client as client() and pos_server as server() }
"#;

pub const UNIFIED_RECOMPOSE: &str = r#"
value system2 =
  compose{ pos_client as pos_seq::1.bhvr and
           pos_server as pos_seq::2.bhvr
  where { pos_client::out_request unifies
          pos_server::in_request,
          pos_client::in_reply unifies
          pos_server::out_reply } }
"#;

pub const SHARED_RECOMPOSE: &str = r#"
value system2 = compose{ pos_client as pos_seq::1.bhvr and pos_server as pos_seq::2.bhvr }
"#;

pub fn pull(ws: &mut Workspace, n: usize) -> Vec<evoarch::runtime::TraceEvent> {
    let mut out = Vec::new();
    for _ in 0..n {
        out.extend(ws.eval_str("via trigger send").unwrap().events);
    }
    out
}

/// Fingerprints of the events after the split point, for a run that is
/// decomposed and recomposed at the split and one that is not.
pub fn round_trip(seed: u64, setup: &[&str], recompose: &str) -> (String, String) {
    use evoarch::runtime::fingerprint;
    let mut a = Workspace::new(seed);
    let mut b = Workspace::new(seed);
    for src in setup {
        a.eval_str(src).unwrap();
        b.eval_str(src).unwrap();
    }
    pull(&mut a, 3);
    pull(&mut b, 3);
    a.eval_str("value pos_seq = decompose system").unwrap();
    a.eval_str(recompose).unwrap();
    let after_a = pull(&mut a, 4);
    let after_b = pull(&mut b, 4);
    (fingerprint(&after_a), fingerprint(&after_b))
}

pub fn send_recv_count(events: &[evoarch::runtime::TraceEvent]) -> usize {
    events.iter().filter(|e| e.kind == EventKind::SendRecv).count()
}

pub fn corpus_file(name: &str) -> String {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus");
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// SEND_RECV counts and quiescence for the bare unification listing, with
/// and without its where-clause, each under a 10,000 step budget.
pub fn unification_listing(seed: u64) -> ((usize, bool), (usize, bool)) {
    let with = corpus_file("07_unification.adl");
    let cut = with.find("\n  where").unwrap();
    let without = format!("{} }}", &with[..cut]);
    let run = |src: &str| {
        let mut ws = Workspace::new(seed);
        ws.step_budget = 10_000;
        ws.eval_str("value position = \"56.34N 2.79W\"").unwrap();
        let r = ws.eval_str(src).unwrap();
        (send_recv_count(&ws.machine.trace), r.quiescent)
    };
    (run(&with), run(&without))
}

/// Branch commit counts for the three-way choice over `trials` seeds.
pub fn choice_counts(trials: u64) -> [usize; 3] {
    let mut base = Workspace::new(0);
    base.eval_str(&corpus_file("00_prelude.adl")).unwrap();
    let listing = corpus_file("03_choice.adl");
    let cut = listing.find("choose").unwrap();
    base.eval_str(&listing[..cut]).unwrap();
    let choice = &listing[cut..];
    let mut counts = [0; 3];
    for seed in 0..trials {
        let mut ws = base.clone();
        ws.reseed(seed);
        let r = ws.eval_str(choice).unwrap();
        let commit = r.events.iter().find(|e| e.kind == EventKind::ChoiceCommit).unwrap();
        let branch: usize = commit.payload.as_deref().unwrap().split('/').next().unwrap().parse().unwrap();
        counts[branch - 1] += 1;
    }
    counts
}

/// A small random system: up to four behaviours over two integer
/// channels, at most six communication actions in total. Each behaviour
/// records what it receives in its own location.
pub fn random_system(rng: &mut impl Rng) -> String {
    let nb = rng.gen_range(1..=4usize);
    let budget = rng.gen_range(nb..=6usize);
    let mut actions = vec![1usize; nb];
    for _ in nb..budget {
        actions[rng.gen_range(0..nb)] += 1;
    }
    let mut src = String::from("value c0 = connection(integer) ; value c1 = connection(integer) ;\n");
    for (b, &n) in actions.iter().enumerate() {
        src.push_str(&format!("value r{b} = location(sequence[integer]()) ;\n"));
        let mut body = Vec::new();
        let mut left = n;
        while left > 0 {
            let one = |rng: &mut dyn rand::RngCore, b: usize| {
                let c = rng.gen_range(0..2);
                if rng.gen_bool(0.5) {
                    format!("via c{c} send {}", rng.gen_range(1..=9))
                } else {
                    format!("via c{c} receive x : integer ; r{b} := r{b} ++ sequence(x)")
                }
            };
            if left >= 2 && rng.gen_bool(0.25) {
                let a = one(rng, b);
                let z = one(rng, b);
                body.push(format!("choose{{ {{ {a} }} or {{ {z} }} }}"));
                left -= 2;
            } else {
                body.push(one(rng, b));
                left -= 1;
            }
        }
        src.push_str(&format!("value p{b} = abstraction() {{ {} }} ;\n", body.join(" ; ")));
    }
    let spawns: Vec<String> = (0..nb).map(|b| format!("p{b}()")).collect();
    src.push_str(&spawns.join(" ; "));
    src
}

/// A machine with the system loaded and nothing yet reduced.
pub fn loaded(src: &str) -> evoarch::runtime::Machine {
    let mut ws = Workspace::new(0);
    ws.step_budget = 0;
    ws.eval_str(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    ws.machine
}

pub fn terminal_key(m: &mut evoarch::runtime::Machine) -> String {
    let locs: Vec<String> = m.locations.iter().map(|l| l.value.to_string()).collect();
    let ids: Vec<_> = m.behaviours.keys().copied().collect();
    let st: Vec<&str> = ids.into_iter().map(|b| m.status(b).as_str()).collect();
    format!("{} | {}", locs.join(" "), st.join(" "))
}

/// Every terminal configuration reachable by some interleaving, and the
/// number of maximal interleavings.
pub fn enumerate_terminals(m: &mut evoarch::runtime::Machine) -> (std::collections::BTreeSet<String>, usize) {
    fn go(m: &mut evoarch::runtime::Machine, out: &mut std::collections::BTreeSet<String>, paths: &mut usize) {
        let moves = m.all_moves().unwrap();
        if moves.is_empty() {
            out.insert(terminal_key(m));
            *paths += 1;
            return;
        }
        for mv in moves {
            let mut next = m.clone();
            next.perform(&mv).unwrap();
            go(&mut next, out, paths);
        }
    }
    let mut out = std::collections::BTreeSet::new();
    let mut paths = 0;
    go(m, &mut out, &mut paths);
    (out, paths)
}

pub fn sampled_terminals(m: &evoarch::runtime::Machine, seeds: u64) -> std::collections::BTreeSet<String> {
    (0..seeds)
        .map(|s| {
            let mut run = m.clone();
            run.reseed(s);
            run.run(10_000).unwrap();
            terminal_key(&mut run)
        })
        .collect()
}

pub struct OracleReport {
    pub systems: usize,
    pub subset_failures: Vec<String>,
    pub coverage_failures: Vec<String>,
    pub small_systems: usize,
    /// Systems with more than one reachable terminal configuration.
    pub racy_systems: usize,
}

pub fn scheduler_oracle(systems: usize, seeds: u64) -> OracleReport {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut report =
        OracleReport { systems, subset_failures: vec![], coverage_failures: vec![], small_systems: 0, racy_systems: 0 };
    for _ in 0..systems {
        let src = random_system(&mut rng);
        let m = loaded(&src);
        let (all, paths) = enumerate_terminals(&mut m.clone());
        let hit = sampled_terminals(&m, seeds);
        if all.len() > 1 {
            report.racy_systems += 1;
        }
        if !hit.is_subset(&all) {
            report.subset_failures.push(src.clone());
        }
        if paths <= 8 {
            report.small_systems += 1;
            if hit != all {
                report.coverage_failures.push(src);
            }
        }
    }
    report
}

pub const ENTITY_PRELUDE: &str = r#"
value i = connection(integer) ;
value o = connection(integer) ;
value seen = location(0) ;
value srv = abstraction() replicate { via i receive n ; seen := seen + n ; via o send 2 * n } ;
value stepper = abstraction() { via i receive a ; via o send a + 1 ; via i receive b ; seen := a * b ; via o send seen }
"#;

pub enum EntityKind {
    /// Compared by value equality.
    Data,
    /// Applied to each argument list and compared by result.
    Function(&'static [&'static str]),
    /// Driven by a stimulus in which `$` names the entity.
    Process(&'static str),
    /// Warmed up, reified once quiescent, then driven by a stimulus.
    Running(&'static str, &'static str),
}

pub const ENTITIES: &[(&str, EntityKind)] = &[
    ("42", EntityKind::Data),
    ("-7", EntityKind::Data),
    ("3.5", EntityKind::Data),
    ("0.1", EntityKind::Data),
    ("true", EntityKind::Data),
    ("\"line\\n \\\"quoted\\\"\"", EntityKind::Data),
    ("\"\"", EntityKind::Data),
    ("sequence(1, 2, 3)", EntityKind::Data),
    ("sequence[string]()", EntityKind::Data),
    ("view(a = 1, b = \"x\")", EntityKind::Data),
    ("view(p = view(q = 2.5))", EntityKind::Data),
    ("sequence(view(k = 1), view(k = 2))", EntityKind::Data),
    ("any(5)", EntityKind::Data),
    ("seen", EntityKind::Data),
    ("i", EntityKind::Data),
    ("function(n : integer) -> integer n * n", EntityKind::Function(&["0", "7", "-3"])),
    ("function(s : string) -> string s ++ \"!\"", EntityKind::Function(&["\"a\"", "\"\""])),
    ("function(d : integer) -> integer seen + d", EntityKind::Function(&["1", "10"])),
    ("srv", EntityKind::Process("$() ; via i send 3 ; via o receive k ; via i send 5 ; via o receive m")),
    ("abstraction(k : integer) { via o send k + seen }", EntityKind::Process("$(4) ; via o receive x")),
    ("srv()", EntityKind::Running("via i send 2 ; via o receive k", "via i send 6 ; via o receive k")),
    ("stepper()", EntityKind::Running("via i send 2 ; via o receive k", "via i send 9 ; via o receive k")),
];

/// Outcome of reflecting the reification of every entity. Each failure
/// names the entity and what differed.
pub fn entity_round_trip(seed: u64) -> (usize, Vec<String>) {
    let mut base = Workspace::new(seed);
    base.eval_str(ENTITY_PRELUDE).unwrap();
    let mut failures = Vec::new();
    for (n, (src, kind)) in ENTITIES.iter().enumerate() {
        let mut ws = base.clone();
        let name = format!("e{n}");
        ws.eval_str(&format!("value {name} = {src}")).unwrap();
        if let EntityKind::Running(warmup, _) = kind {
            ws.eval_str(warmup).unwrap();
        }
        let id = ws.binding_id(&name).unwrap();
        let original = ws.machine.stored(id).unwrap();
        let code = ws.machine.reify_id(id).unwrap();
        let back = match ws.machine.reflect_hypertext(&code) {
            Ok(b) => b,
            Err(e) => {
                failures.push(format!("{src}: reflect failed: {e} in {}", code.to_plain_text()));
                continue;
            }
        };
        let reflected = ws.machine.stored(back).unwrap();
        match kind {
            EntityKind::Data => {
                if reflected != original {
                    failures.push(format!("{src}: {original} became {reflected}"));
                }
            }
            EntityKind::Function(args) => {
                ws.bind("reflected", reflected);
                for a in *args {
                    let x = ws.clone().eval_str(&format!("{name}({a})")).unwrap().value;
                    let y = ws.clone().eval_str(&format!("reflected({a})")).unwrap().value;
                    if x != y {
                        failures.push(format!("{src}({a}): {x:?} vs {y:?}"));
                    }
                }
            }
            EntityKind::Process(stimulus) | EntityKind::Running(_, stimulus) => {
                let mut a = ws.clone();
                let mut b = ws.clone();
                if let (Value::Behaviour(old), Value::Behaviour(new)) = (&original, &reflected) {
                    a.machine.threads.retain(|_, t| t.behaviour != *new);
                    b.machine.threads.retain(|_, t| t.behaviour != *old);
                }
                b.bind("reflected", reflected);
                a.eval_str("value settled = 0").unwrap();
                b.eval_str("value settled = 0").unwrap();
                a.reseed(seed + 1);
                b.reseed(seed + 1);
                let ea = a.eval_str(&stimulus.replace('$', &name)).unwrap().events;
                let eb = b.eval_str(&stimulus.replace('$', "reflected")).unwrap().events;
                let (fa, fb) = (evoarch::runtime::fingerprint(&ea), evoarch::runtime::fingerprint(&eb));
                if fa != fb || send_recv_count(&ea) == 0 {
                    failures.push(format!(
                        "{src}: traces differ\n{}\n---\n{}",
                        evoarch::runtime::normalise(&ea).join("\n"),
                        evoarch::runtime::normalise(&eb).join("\n")
                    ));
                }
            }
        }
    }
    (ENTITIES.len(), failures)
}

/// The scenario with the client and server tagged by the client-server
/// style and every connection tagged as a procedure-call connector.
pub fn styled(src: &str, component: &str) -> String {
    src.replace("abstraction()\n{", &format!("abstraction() in style {component}\n{{"))
        .replace("connection();", "connection() in style PC;")
        .replace("connection( exp_view );", "connection( exp_view ) in style PC;")
}

pub fn client_server_style() -> (evoarch::styles::StyleDef, evoarch::styles::StyleRegistry) {
    use evoarch::syntax::{parse_str, TermKind};
    let t = parse_str(&corpus_file("01_client_server_style.adl")).unwrap();
    let TermKind::Block(stmts) = &t.kind else { panic!() };
    let TermKind::StyleDecl(d) = &stmts[0].kind else { panic!() };
    let mut reg = evoarch::styles::StyleRegistry::default();
    reg.register(d).unwrap();
    ((**d).clone(), reg)
}

fn element(id: u64, name: String, tag: Option<&str>) -> evoarch::styles::Element {
    evoarch::styles::Element { id, name, tags: tag.into_iter().map(String::from).collect() }
}

/// Witnesses the client-server constraints should report, computed
/// directly. `conns` lists each connector's PC tag and attached components.
pub fn client_server_oracle(
    tags: &[Option<&str>],
    conns: &[(bool, Vec<usize>)],
) -> std::collections::BTreeSet<Vec<(String, String)>> {
    let mut out = std::collections::BTreeSet::new();
    for (j, (pc, _)) in conns.iter().enumerate() {
        if !pc {
            out.insert(vec![("c".to_string(), format!("x{j}"))]);
        }
    }
    for (i, t) in tags.iter().enumerate() {
        if t.is_none() {
            out.insert(vec![("c".to_string(), format!("k{i}"))]);
        }
    }
    for a in 0..tags.len() {
        for b in 0..tags.len() {
            if a == b {
                continue;
            }
            let linked = conns.iter().any(|(_, m)| m.contains(&a) && m.contains(&b));
            let ok = matches!((tags[a], tags[b]), (Some("Client"), Some("Server")) | (Some("Server"), Some("Client")));
            if linked && !ok {
                out.insert(vec![("c1".to_string(), format!("k{a}")), ("c2".to_string(), format!("k{b}"))]);
            }
        }
    }
    out
}

pub fn topology(tags: &[Option<&str>], conns: &[(bool, Vec<usize>)]) -> evoarch::styles::Topology {
    let mut t = evoarch::styles::Topology::default();
    for (i, tag) in tags.iter().enumerate() {
        t.components.push(element(i as u64, format!("k{i}"), *tag));
    }
    for (j, (pc, members)) in conns.iter().enumerate() {
        let id = 100 + j as u64;
        t.connectors.push(element(id, format!("x{j}"), pc.then_some("PC")));
        for m in members {
            t.attachments.insert((*m as u64, id));
        }
    }
    t
}

/// Every tagging of up to five components (up to reordering) with every
/// set of binary connectors, plus small systems with arbitrary untagged or
/// shared connectors. Returns the number of topologies checked and the
/// ones where the checker and the direct evaluation disagree.
pub fn style_brute_force() -> (usize, Vec<String>) {
    use evoarch::styles::check_constraints;
    let (style, reg) = client_server_style();
    let kinds = [None, Some("Client"), Some("Server")];
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut compare = |tags: &[Option<&str>], conns: &[(bool, Vec<usize>)]| {
        let report = check_constraints(&style, &reg, &topology(tags, conns)).unwrap();
        let got: std::collections::BTreeSet<_> = report.violations.iter().map(|v| v.witness.clone()).collect();
        let want = client_server_oracle(tags, conns);
        if got != want || report.violations.len() != want.len() {
            bad.push(format!("{tags:?} {conns:?}: {got:?} vs {want:?}"));
        }
        checked += 1;
    };
    for n in 0..=5usize {
        let mut taggings = vec![vec![]];
        for _ in 0..n {
            taggings = taggings
                .into_iter()
                .flat_map(|t: Vec<usize>| {
                    let last = t.last().copied().unwrap_or(0);
                    (last..3).map(move |k| {
                        let mut t = t.clone();
                        t.push(k);
                        t
                    })
                })
                .collect();
        }
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for t in &taggings {
            let tags: Vec<_> = t.iter().map(|&k| kinds[k]).collect();
            for mask in 0u32..(1 << pairs.len()) {
                let conns: Vec<(bool, Vec<usize>)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &(a, b))| (true, vec![a, b]))
                    .collect();
                compare(&tags, &conns);
            }
        }
        if n <= 3 {
            for t in &taggings {
                let tags: Vec<_> = t.iter().map(|&k| kinds[k]).collect();
                for m1 in 0u32..(1 << n) {
                    for m2 in 0u32..(1 << n) {
                        for pcs in 0..4u32 {
                            let members = |m: u32| (0..n).filter(|i| m & (1 << i) != 0).collect::<Vec<_>>();
                            let conns = vec![(pcs & 1 != 0, members(m1)), (pcs & 2 != 0, members(m2))];
                            compare(&tags, &conns);
                        }
                    }
                }
            }
        }
    }
    (checked, bad)
}

pub fn save_and_reload(ws: &mut Workspace) {
    let text = ws.save_snapshot().unwrap();
    *ws = Workspace::load_snapshot(&text).unwrap();
}

/// Input scripts exercised with and without a save/load between inputs.
pub fn persistence_scenarios() -> Vec<Vec<String>> {
    use rand::SeedableRng;
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut out = vec![
        s(&[
            "value in_channel = connection(integer) ; value out_channel = connection(integer)",
            &corpus_file("02_replication.adl"),
            "via in_channel send 1 ; via in_channel send 2",
            "via out_channel receive a ; via out_channel receive b",
        ]),
        s(&[SHARED_CHANNEL_SYSTEM, "via trigger send", "via trigger send", "via trigger send"]),
        s(&[
            UNIFIED_PARTS,
            UNIFIED_SYSTEM,
            "via trigger send",
            "value pos_seq = decompose system",
            UNIFIED_RECOMPOSE,
            "via trigger send",
        ]),
        s(&[
            &corpus_file("00_prelude.adl"),
            &corpus_file("03_choice.adl"),
            &corpus_file("03_choice.adl"),
            "via out_channel receive n",
        ]),
        s(&[
            ENTITY_PRELUDE,
            "value running = srv()",
            "via i send 3 ; via o receive k",
            "via i send 4 ; via o receive m",
        ]),
        s(&[
            &corpus_file("01_client_server_style.adl"),
            SCENARIO_PRELUDE,
            &styled(CLIENT, "Client"),
            &styled(SERVER, "Server"),
            SYSTEM,
            "via exp_input send \"v1\"",
            "via user_input send",
        ]),
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    for _ in 0..4 {
        let sys = random_system(&mut rng);
        out.push(vec![sys, "p0()".to_string(), "value again = 1".to_string()]);
    }
    out
}

/// Trace hash after running `inputs`, optionally saving and reloading the
/// workspace after every input.
pub fn replay(seed: u64, inputs: &[String], reload: bool) -> String {
    let mut ws = Workspace::new(seed);
    for i in inputs {
        ws.eval_str(i).unwrap_or_else(|e| panic!("{e}\n{i}"));
        if reload {
            save_and_reload(&mut ws);
        }
    }
    ws.trace_hash()
}
