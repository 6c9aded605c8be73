use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use evoarch::runtime::{format_log, Value};
use evoarch::syntax::parse_str;
use evoarch::typesys::{check_program, NoLinks};
use evoarch::workspace::repl::{format_error, format_result, Repl};
use evoarch::workspace::Workspace;
use evoarch_gateway::{AppState, GatewayConfig};

#[derive(Parser)]
#[command(name = "evoarch", version, about = "Evolvable software architectures: run, inspect and serve a live system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a program, or replay a REPL script with --script.
    Run {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Scheduler steps allowed per input.
        #[arg(long)]
        max_steps: Option<u64>,
        /// Write the event log here, one event per line.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Treat the file as REPL input, including `:` commands.
        #[arg(long)]
        script: bool,
        /// Only parse and type-check; print `ERROR <line>:<col> <code> <message>` records.
        #[arg(long)]
        typecheck_only: bool,
        /// Start from this snapshot instead of an empty workspace.
        #[arg(long)]
        load: Option<PathBuf>,
        /// Snapshot the workspace here afterwards.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Interactive shell.
    Repl {
        #[arg(long)]
        load: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a program and check every composite it binds against a style.
    CheckStyle {
        file: PathBuf,
        #[arg(long)]
        style: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a program (or script) and write a snapshot of the result.
    Save {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        script: bool,
    },
    /// Load a snapshot and summarise its bindings and behaviours.
    Load { snapshot: PathBuf },
    /// Serve the HTTP and event-stream API for one workspace.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        load: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn open(load: Option<&Path>, seed: Option<u64>) -> Result<Workspace> {
    let mut ws = match load {
        Some(p) => Workspace::load_from(p).map_err(|e| anyhow::anyhow!("{}", format_error(&e)))?,
        None => Workspace::new(seed.unwrap_or(0)),
    };
    if let (Some(_), Some(s)) = (load, seed) {
        ws.reseed(s);
    }
    Ok(ws)
}

/// Evaluate `text` as one program or as a REPL script. Returns false if a
/// program failed.
fn execute(ws: Workspace, text: &str, script: bool) -> Result<(Workspace, bool)> {
    let stdout = io::stdout();
    if script {
        let mut repl = Repl::new(ws);
        repl.run(text.as_bytes(), stdout.lock(), false)?;
        return Ok((repl.ws, true));
    }
    let mut ws = ws;
    match ws.eval_str(text) {
        Ok(r) => {
            println!("{}", format_result(&r));
            Ok((ws, true))
        }
        Err(e) => {
            eprintln!("{}", format_error(&e));
            Ok((ws, false))
        }
    }
}

fn typecheck(text: &str) -> ExitCode {
    let env = Workspace::new(0).machine.global_type_env();
    let err = match parse_str(text) {
        Err(e) => {
            let (l, c) = e.position();
            Some(format!("ERROR {l}:{c} {} {}", e.code(), e.message()))
        }
        Ok(t) => check_program(&t, &env, &NoLinks)
            .err()
            .map(|e| format!("ERROR {}:{} {} {}", e.line, e.col, e.code, e.message)),
    };
    match err {
        Some(line) => {
            println!("{line}");
            ExitCode::FAILURE
        }
        None => ExitCode::SUCCESS,
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn check_style(file: &Path, style: &str, seed: Option<u64>) -> Result<ExitCode> {
    let mut ws = Workspace::new(seed.unwrap_or(0));
    if let Err(e) = ws.eval_str(&read(file)?) {
        bail!("{}", format_error(&e));
    }
    if ws.machine.styles.get(style).is_none() {
        bail!("no style `{style}` is declared");
    }
    let mut violations = 0;
    let mut checked = 0;
    for b in ws.bindings() {
        let Some(Value::Behaviour(h)) = ws.binding(&b.name) else { continue };
        let Some(beh) = ws.machine.behaviour(h) else { continue };
        if !beh.is_composite() || beh.dissolved {
            continue;
        }
        checked += 1;
        let report = ws.check_style(style, h).map_err(|e| anyhow::anyhow!("{}", format_error(&e)))?;
        if report.conforms() {
            println!("CONFORMS {}", b.name);
        }
        for v in &report.violations {
            violations += 1;
            let witness: Vec<String> = v.witness.iter().map(|(var, el)| format!("{var}={el}")).collect();
            println!("VIOLATION {} {}: {} [{}]", b.name, v.style, one_line(&v.constraint), witness.join(" "));
        }
    }
    if checked == 0 {
        println!("no composite bindings to check");
    }
    Ok(if violations > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn summarise(ws: &mut Workspace) {
    let mut repl = Repl::new(std::mem::replace(ws, Workspace::new(0)));
    for cmd in [":bindings", ":behaviours"] {
        if let Some(s) = repl.handle_line(cmd) {
            println!("{s}");
        }
    }
    *ws = repl.ws;
}

async fn serve(listen: &str, load: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    open(load.as_deref(), seed)?;
    let state = AppState::with(GatewayConfig::default(), move || {
        open(load.as_deref(), seed).expect("snapshot loaded once already")
    });
    let listener = tokio::net::TcpListener::bind(listen).await.with_context(|| format!("binding {listen}"))?;
    println!("listening on {}", listener.local_addr()?);
    io::stdout().flush()?;
    evoarch_gateway::serve(listener, state).await?;
    Ok(())
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, seed, max_steps, trace, script, typecheck_only, load, save } => {
            let text = read(&file)?;
            if typecheck_only {
                return Ok(typecheck(&text));
            }
            let mut ws = open(load.as_deref(), seed)?;
            if let Some(m) = max_steps {
                ws.step_budget = m;
            }
            let (mut ws, ok) = execute(ws, &text, script)?;
            if let Some(p) = trace {
                fs::write(&p, format_log(&ws.machine.trace)).with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = save {
                ws.save_to(&p).map_err(|e| anyhow::anyhow!("{}", format_error(&e)))?;
            }
            println!("trace-hash {}", ws.trace_hash());
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Repl { load, seed } => {
            let mut repl = Repl::new(open(load.as_deref(), seed)?);
            let stdin = io::stdin();
            let prompt = stdin.is_terminal();
            repl.run(stdin.lock(), io::stdout().lock(), prompt)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckStyle { file, style, seed } => check_style(&file, &style, seed),
        Command::Save { file, out, seed, script } => {
            let (mut ws, ok) = execute(open(None, seed)?, &read(&file)?, script)?;
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
            ws.save_to(&out).map_err(|e| anyhow::anyhow!("{}", format_error(&e)))?;
            println!("saved {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Load { snapshot } => {
            let mut ws = open(Some(&snapshot), None)?;
            summarise(&mut ws);
            println!("trace-hash {}", ws.trace_hash());
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { listen, seed, load } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(&listen, load, seed))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
