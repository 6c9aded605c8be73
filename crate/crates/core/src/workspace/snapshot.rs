//! Snapshot files: a magic header line followed by a JSON container holding
//! the hyper-text of every store entry and the full machine state.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Workspace, WsError};
use crate::hypercode::to_json;
use crate::runtime::Fault;

pub const SNAPSHOT_MAGIC: &str = "EVOARCH-SNAP 1";

#[derive(Serialize, Deserialize)]
struct Entry {
    id: u64,
    display: String,
    hypertext: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct Container {
    version: u64,
    seed: u64,
    bindings: Vec<(String, u64)>,
    entries: Vec<Entry>,
    state: Workspace,
}

impl Workspace {
    /// Hash of the complete workspace state.
    pub fn state_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("workspace state serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Store ids reachable from bindings or from links in live code.
    pub fn reachable_ids(&self) -> BTreeSet<u64> {
        let mut keep: BTreeSet<u64> = self.bindings.iter().map(|(_, id)| *id).collect();
        for c in &self.machine.closures {
            keep.extend(c.literal.link_ids());
            keep.extend(c.body.link_ids());
        }
        for t in self.machine.threads.values() {
            for f in &t.frames {
                keep.extend(f.block.link_ids());
            }
        }
        keep
    }

    /// Drop store entries nothing refers to any more.
    pub fn collect_garbage(&mut self) -> usize {
        let keep = self.reachable_ids();
        let before = self.machine.store.len();
        self.machine.store.retain(&keep);
        before - self.machine.store.len()
    }

    /// Serialise the workspace. The system must be quiescent.
    pub fn save_snapshot(&mut self) -> Result<String, WsError> {
        if !self.machine.all_moves()?.is_empty() {
            let busy = self.machine.enabled_threads().into_iter().next().map(|t| self.machine.threads[&t].behaviour);
            return Err(WsError::Runtime(Fault::NotQuiescent(busy.unwrap_or(0))));
        }
        let state = self.clone();
        let mut scratch = state.machine.clone();
        let ids: Vec<(u64, String)> = state.machine.store.entries().map(|(id, e)| (id, e.display.clone())).collect();
        let entries = ids
            .into_iter()
            .map(|(id, display)| Entry { id, display, hypertext: scratch.reify_id(id).ok().map(|h| to_json(&h)) })
            .collect();
        let container = Container { version: 1, seed: self.seed, bindings: state.bindings.clone(), entries, state };
        let body = serde_json::to_string(&container).map_err(|e| WsError::Snapshot(e.to_string()))?;
        Ok(format!("{SNAPSHOT_MAGIC}\n{body}\n"))
    }

    pub fn load_snapshot(text: &str) -> Result<Workspace, WsError> {
        let (head, body) = text.split_once('\n').ok_or_else(|| WsError::Snapshot("empty snapshot".into()))?;
        if head.trim_end() != SNAPSHOT_MAGIC {
            return Err(WsError::Snapshot(format!("bad header `{head}`, expected `{SNAPSHOT_MAGIC}`")));
        }
        let c: Container =
            serde_json::from_str(body).map_err(|e| WsError::Snapshot(format!("corrupt snapshot: {e}")))?;
        if c.version != 1 {
            return Err(WsError::Snapshot(format!("unsupported snapshot version {}", c.version)));
        }
        Ok(c.state)
    }

    pub fn save_to(&mut self, path: &std::path::Path) -> Result<(), WsError> {
        let s = self.save_snapshot()?;
        std::fs::write(path, s).map_err(|e| WsError::Snapshot(e.to_string()))
    }

    pub fn load_from(path: &std::path::Path) -> Result<Workspace, WsError> {
        let s = std::fs::read_to_string(path).map_err(|e| WsError::Snapshot(e.to_string()))?;
        Workspace::load_snapshot(&s)
    }
}
