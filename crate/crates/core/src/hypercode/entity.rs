//! Store-level operations: reify, reflect and execute entities by id.

use crate::runtime::{ClosureKind, Fault, Machine, RunResult, Value};
use crate::syntax::{render_term, SourceSegmentList};

impl Machine {
    pub fn stored(&self, id: u64) -> RunResult<Value> {
        self.store.value(id).cloned().ok_or(Fault::UnknownValue(id))
    }

    /// Intern `v`, naming it after a workspace binding when there is one.
    pub fn intern(&mut self, v: &Value) -> u64 {
        let d = self.display_name(v);
        self.store.intern(v, &d)
    }

    pub fn reify_id(&mut self, id: u64) -> RunResult<SourceSegmentList> {
        let v = self.stored(id)?;
        let t = self.reify_term(&v)?;
        Ok(render_term(&t))
    }

    /// Reflect hyper-text into an entity and return its store id. Links
    /// with the same id denote the same entity.
    pub fn reflect_hypertext(&mut self, src: &SourceSegmentList) -> RunResult<u64> {
        let (v, _) = self.reflect_source(src)?;
        Ok(self.intern(&v))
    }

    /// Instantiate a parameterless abstraction, evaluate a parameterless
    /// function, or resume a detached behaviour.
    pub fn execute_entity(&mut self, id: u64) -> RunResult<u64> {
        match self.stored(id)? {
            Value::Closure(c) => {
                let cl = self.closure(c);
                if !cl.params.is_empty() {
                    return Err(Fault::NotExecutable(format!("entity {id} takes {} arguments", cl.params.len())));
                }
                let v = match cl.kind {
                    ClosureKind::Abstraction => Value::Behaviour(self.instantiate(c, vec![])?),
                    ClosureKind::Function => self.apply(Value::Closure(c), vec![], None)?,
                };
                Ok(self.intern(&v))
            }
            Value::Behaviour(b) => {
                let beh = self.behaviours.get_mut(&b).ok_or(Fault::UnknownValue(id))?;
                if beh.parent.is_none() {
                    beh.suspended = false;
                    self.blocked_reported.remove(&b);
                }
                Ok(id)
            }
            other => Err(Fault::NotExecutable(format!("a {} cannot be executed", other.kind_name()))),
        }
    }
}
