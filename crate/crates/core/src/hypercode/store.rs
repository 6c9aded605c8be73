//! The value store: every value a link can point at, with sharing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::runtime::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub value: Value,
    /// Name shown on links to this value; carries no meaning.
    pub display: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValueStore {
    entries: BTreeMap<u64, StoreEntry>,
    identity: BTreeMap<String, u64>,
    next: u64,
}

/// Reference values are keyed by their handle, data values by their exact
/// serialised form, so interning the same value twice yields one entry.
fn identity_key(v: &Value) -> String {
    match v {
        Value::Loc(id) => format!("l{id}"),
        Value::Chan(id) => format!("c{id}"),
        Value::Behaviour(id) => format!("b{id}"),
        Value::Closure(id) => format!("f{id}"),
        Value::Builtin(b) => format!("builtin:{}", b.name()),
        data => format!("d:{}", serde_json::to_string(data).unwrap_or_default()),
    }
}

impl ValueStore {
    pub fn intern(&mut self, v: &Value, display: &str) -> u64 {
        let key = identity_key(v);
        if let Some(id) = self.identity.get(&key) {
            return *id;
        }
        self.next += 1;
        let id = self.next;
        self.entries.insert(id, StoreEntry { value: v.clone(), display: display.to_string() });
        self.identity.insert(key, id);
        id
    }

    pub fn lookup_id(&self, v: &Value) -> Option<u64> {
        self.identity.get(&identity_key(v)).copied()
    }

    pub fn get(&self, id: u64) -> Option<&StoreEntry> {
        self.entries.get(&id)
    }

    pub fn value(&self, id: u64) -> Option<&Value> {
        self.entries.get(&id).map(|e| &e.value)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, &StoreEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drop entries not in `keep`.
    pub fn retain(&mut self, keep: &std::collections::BTreeSet<u64>) {
        self.entries.retain(|k, _| keep.contains(k));
        self.identity.retain(|_, v| keep.contains(v));
    }
}
