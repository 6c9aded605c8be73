//! The thread that owns the workspace, and the event journal it feeds.
//!
//! Every request is turned into a job and queued here, so mutations are
//! applied strictly in arrival order. After each job the worker publishes
//! whatever the job appended to the trace log, plus binding changes.

use std::collections::{BTreeMap, VecDeque};
use std::sync::mpsc;
use std::thread;

use evoarch::runtime::TraceEvent;
use evoarch::workspace::Workspace;
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, oneshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Notice {
    Trace(TraceEvent),
    /// A workspace binding was added or rebound; `id` is `None` when removed.
    Binding {
        name: String,
        id: Option<u64>,
        ty: Option<String>,
    },
    RunComplete {
        token: u64,
        ok: bool,
        result: serde_json::Value,
    },
    /// Events before `seq` were dropped from the journal and will not arrive.
    Resync,
    Heartbeat,
}

/// One message on the event stream. For `Resync` and `Heartbeat`, `seq` is
/// the cursor of the next event the subscriber will see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    #[serde(flatten)]
    pub notice: Notice,
}

pub struct Subscription {
    pub backlog: Vec<Envelope>,
    pub resync: bool,
    pub next: u64,
    pub live: broadcast::Receiver<Envelope>,
}

pub struct Core {
    pub ws: Workspace,
    journal: VecDeque<Envelope>,
    capacity: usize,
    next_seq: u64,
    published: usize,
    known: BTreeMap<String, (u64, String)>,
    tx: broadcast::Sender<Envelope>,
}

impl Core {
    fn new(ws: Workspace, capacity: usize) -> Self {
        let (tx, _) = broadcast::channel(1024);
        let published = ws.machine.trace.len();
        let known = ws.bindings().into_iter().map(|b| (b.name, (b.id, b.ty))).collect();
        Core { ws, journal: VecDeque::new(), capacity: capacity.max(1), next_seq: 0, published, known, tx }
    }

    pub fn publish(&mut self, notice: Notice) {
        let env = Envelope { seq: self.next_seq, notice };
        self.next_seq += 1;
        self.journal.push_back(env.clone());
        while self.journal.len() > self.capacity {
            self.journal.pop_front();
        }
        let _ = self.tx.send(env);
    }

    /// Publish trace events and binding changes made since the last sync.
    pub fn sync(&mut self) {
        let len = self.ws.machine.trace.len();
        if len < self.published {
            self.published = len;
        }
        let fresh: Vec<TraceEvent> = self.ws.machine.trace[self.published..].to_vec();
        self.published = len;
        for e in fresh {
            self.publish(Notice::Trace(e));
        }
        let now: BTreeMap<String, (u64, String)> =
            self.ws.bindings().into_iter().map(|b| (b.name, (b.id, b.ty))).collect();
        let mut changes = Vec::new();
        for (name, (id, ty)) in &now {
            if self.known.get(name) != Some(&(*id, ty.clone())) {
                changes.push(Notice::Binding { name: name.clone(), id: Some(*id), ty: Some(ty.clone()) });
            }
        }
        for name in self.known.keys().filter(|n| !now.contains_key(*n)) {
            changes.push(Notice::Binding { name: name.clone(), id: None, ty: None });
        }
        self.known = now;
        for c in changes {
            self.publish(c);
        }
    }

    /// Replace the whole workspace, e.g. after loading a snapshot.
    pub fn replace(&mut self, ws: Workspace) {
        self.ws = ws;
        self.published = self.ws.machine.trace.len();
    }

    /// Backlog from `cursor` plus a live receiver, taken atomically so the
    /// two together have no gaps. `None` means "from now on".
    pub fn subscribe(&self, cursor: Option<u64>) -> Subscription {
        let live = self.tx.subscribe();
        let first = self.journal.front().map_or(self.next_seq, |e| e.seq);
        match cursor {
            None => Subscription { backlog: vec![], resync: false, next: self.next_seq, live },
            Some(c) => {
                let resync = c < first;
                let from = c.max(first);
                let backlog: Vec<Envelope> = self.journal.iter().filter(|e| e.seq >= from).cloned().collect();
                Subscription { backlog, resync, next: from.min(self.next_seq), live }
            }
        }
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }
}

type Job = Box<dyn FnOnce(&mut Core) + Send>;

/// Handle to the workspace thread; cheap to clone.
#[derive(Clone)]
pub struct Worker {
    jobs: mpsc::Sender<Job>,
}

impl Worker {
    /// Start the thread. The workspace is built on it because it is not `Send`.
    pub fn spawn(make: impl FnOnce() -> Workspace + Send + 'static, capacity: usize) -> Self {
        let (jobs, rx) = mpsc::channel::<Job>();
        thread::Builder::new()
            .name("evoarch-workspace".into())
            .spawn(move || {
                let mut core = Core::new(make(), capacity);
                while let Ok(job) = rx.recv() {
                    job(&mut core);
                }
            })
            .expect("spawn workspace thread");
        Worker { jobs }
    }

    /// Queue a job without waiting for it.
    pub fn submit(&self, f: impl FnOnce(&mut Core) + Send + 'static) {
        let _ = self.jobs.send(Box::new(move |c: &mut Core| {
            f(c);
            c.sync();
        }));
    }

    /// Queue a job and wait for its result. Events it caused are published
    /// before the result is handed back.
    pub async fn call<R: Send + 'static>(&self, f: impl FnOnce(&mut Core) -> R + Send + 'static) -> R {
        let (tx, rx) = oneshot::channel();
        self.submit(move |c| {
            let r = f(c);
            c.sync();
            let _ = tx.send(r);
        });
        rx.await.expect("workspace thread stopped")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn core(capacity: usize) -> Core {
        Core::new(Workspace::new(1), capacity)
    }

    #[test]
    fn envelope_encoding_is_flat() {
        let e = Envelope { seq: 3, notice: Notice::Heartbeat };
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"seq":3,"type":"heartbeat"}"#);
        let back: Envelope = serde_json::from_str(r#"{"seq":3,"type":"heartbeat"}"#).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn sync_publishes_trace_then_bindings() {
        let mut c = core(100);
        c.ws.eval_str("value ch = connection(integer) ; replicate { via ch receive x : integer }").unwrap();
        c.ws.eval_str("via ch send 1").unwrap();
        c.sync();
        let sub = c.subscribe(Some(0));
        assert!(!sub.resync);
        let kinds: Vec<&str> = sub
            .backlog
            .iter()
            .map(|e| match &e.notice {
                Notice::Trace(_) => "trace",
                Notice::Binding { .. } => "binding",
                _ => "other",
            })
            .collect();
        assert!(kinds.contains(&"trace"));
        assert_eq!(kinds.last(), Some(&"binding"));
        for (i, e) in sub.backlog.iter().enumerate() {
            assert_eq!(e.seq, i as u64);
        }
    }

    #[test]
    fn expired_cursor_resyncs() {
        let mut c = core(2);
        for _ in 0..5 {
            c.publish(Notice::Heartbeat);
        }
        let sub = c.subscribe(Some(0));
        assert!(sub.resync);
        assert_eq!(sub.backlog.iter().map(|e| e.seq).collect::<Vec<_>>(), vec![3, 4]);
        let sub = c.subscribe(Some(4));
        assert!(!sub.resync);
        assert_eq!(sub.backlog.len(), 1);
        let sub = c.subscribe(None);
        assert!(sub.backlog.is_empty());
        assert_eq!(sub.next, 5);
    }

    #[test]
    fn removed_binding_is_announced() {
        let mut c = core(10);
        c.ws.eval_str("value a = 1").unwrap();
        c.sync();
        c.replace(Workspace::new(1));
        c.sync();
        let sub = c.subscribe(Some(0));
        assert!(matches!(&sub.backlog.last().unwrap().notice, Notice::Binding { name, id: None, .. } if name == "a"));
    }
}
