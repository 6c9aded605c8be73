//! Registered styles, looked up by name. Registering a style also registers
//! each of its element styles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::def::StyleDef;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StyleRegistry {
    styles: BTreeMap<String, StyleDef>,
    /// Element style name to the style that declared it.
    owner: BTreeMap<String, String>,
}

impl StyleRegistry {
    pub fn register(&mut self, def: &StyleDef) -> Result<(), String> {
        let mut names = vec![def.name.clone()];
        names.extend(def.elements.iter().map(|e| e.name.clone()));
        for n in &names {
            if self.styles.contains_key(n) {
                return Err(format!("style `{n}` is already registered"));
            }
        }
        for e in &def.elements {
            self.styles.insert(e.name.clone(), e.clone());
            self.owner.insert(e.name.clone(), def.name.clone());
        }
        self.styles.insert(def.name.clone(), def.clone());
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&StyleDef> {
        self.styles.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.styles.contains_key(name)
    }

    /// The style that declared `element`, if any.
    pub fn owner_of(&self, element: &str) -> Option<&str> {
        self.owner.get(element).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.styles.keys().map(String::as_str)
    }

    pub fn all(&self) -> impl Iterator<Item = &StyleDef> {
        self.styles.values()
    }
}
