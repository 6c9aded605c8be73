//! The run-time system: values, behaviours, the scheduler and the trace.

pub mod eval;
pub mod machine;
pub mod sched;
pub mod topology;
pub mod trace;
pub mod unify;
pub mod value;

pub use machine::{BehKind, Behaviour, Config, Fault, Frame, Machine, RunResult, Status, Thread};
pub use sched::{Dir, Move, Offer, Outcome, PathStep, ThreadChoices};
pub use trace::{fingerprint, format_log, normalise, trace_hash, EventKind, TraceEvent};
pub use unify::Unifier;
pub use value::*;
