//! Topology snapshots and constraint checking over them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::def::{Domain, Formula, StyleDef};
use super::registry::StyleRegistry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub id: u64,
    pub name: String,
    pub tags: BTreeSet<String>,
}

/// Immutable picture of a configuration: components, connectors (canonical
/// channel groups) and which components are attached to which connectors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub components: Vec<Element>,
    pub connectors: Vec<Element>,
    pub attachments: BTreeSet<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub style: String,
    pub constraint: String,
    /// Counterexample bindings, variable to element name.
    pub witness: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub style: String,
    pub violations: Vec<Violation>,
}

impl ConformanceReport {
    pub fn conforms(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ref {
    Component(usize),
    Connector(usize),
}

struct Eval<'a> {
    topo: &'a Topology,
    style: &'a StyleDef,
    registry: &'a StyleRegistry,
}

type Scope = BTreeMap<String, Ref>;

impl Eval<'_> {
    fn element(&self, r: Ref) -> &Element {
        match r {
            Ref::Component(i) => &self.topo.components[i],
            Ref::Connector(i) => &self.topo.connectors[i],
        }
    }

    fn domain(&self, d: Domain) -> Vec<Ref> {
        match d {
            Domain::Components => (0..self.topo.components.len()).map(Ref::Component).collect(),
            Domain::Connectors => (0..self.topo.connectors.len()).map(Ref::Connector).collect(),
        }
    }

    fn lookup(&self, scope: &Scope, v: &str) -> Result<Ref, String> {
        scope.get(v).copied().ok_or_else(|| format!("unbound variable `{v}` in constraint"))
    }

    fn in_style(&self, r: Ref, style: &str) -> Result<bool, String> {
        match (style, r) {
            ("Component", Ref::Component(_)) | ("Connector", Ref::Connector(_)) => return Ok(true),
            ("Component", _) | ("Connector", _) => return Ok(false),
            _ => {}
        }
        if !self.registry.contains(style)
            && style != self.style.name
            && !self.style.elements.iter().any(|e| e.name == style)
        {
            return Err(format!("unknown style `{style}` in constraint"));
        }
        Ok(self.element(r).tags.contains(style))
    }

    fn attached(&self, a: Ref, c: Ref) -> bool {
        match (a, c) {
            (Ref::Component(i), Ref::Connector(j)) => {
                self.topo.attachments.contains(&(self.topo.components[i].id, self.topo.connectors[j].id))
            }
            _ => false,
        }
    }

    fn connected(&self, a: Ref, b: Ref) -> Result<bool, String> {
        if let Some(an) = self.style.analyses.iter().find(|x| x.name == "connected" && x.params.len() == 2) {
            let mut scope = Scope::new();
            scope.insert(an.params[0].0.clone(), a);
            scope.insert(an.params[1].0.clone(), b);
            return self.holds(&an.formula, &scope);
        }
        Ok((0..self.topo.connectors.len()).map(Ref::Connector).any(|c| self.attached(a, c) && self.attached(b, c)))
    }

    /// All pairwise-distinct assignments of `vars` over the domain.
    fn assignments(&self, d: Domain, vars: &[String], scope: &Scope) -> Vec<Scope> {
        let dom = self.domain(d);
        let mut out = vec![(scope.clone(), Vec::<Ref>::new())];
        for v in vars {
            let mut next = Vec::new();
            for (s, used) in &out {
                for r in &dom {
                    if used.contains(r) {
                        continue;
                    }
                    let mut s2 = s.clone();
                    s2.insert(v.clone(), *r);
                    let mut u2 = used.clone();
                    u2.push(*r);
                    next.push((s2, u2));
                }
            }
            out = next;
        }
        out.into_iter().map(|(s, _)| s).collect()
    }

    fn holds(&self, f: &Formula, scope: &Scope) -> Result<bool, String> {
        Ok(match f {
            Formula::Forall { domain, vars, body } => {
                for s in self.assignments(*domain, vars, scope) {
                    if !self.holds(body, &s)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Exists { domain, vars, body } => {
                for s in self.assignments(*domain, vars, scope) {
                    if self.holds(body, &s)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::InStyle { var, style } => self.in_style(self.lookup(scope, var)?, style)?,
            Formula::Connected { left, right } => {
                self.connected(self.lookup(scope, left)?, self.lookup(scope, right)?)?
            }
            Formula::Attached { element, connector } => {
                self.attached(self.lookup(scope, element)?, self.lookup(scope, connector)?)
            }
            Formula::And(a, b) => self.holds(a, scope)? && self.holds(b, scope)?,
            Formula::Or(a, b) => self.holds(a, scope)? || self.holds(b, scope)?,
            Formula::Implies(a, b) => !self.holds(a, scope)? || self.holds(b, scope)?,
            Formula::Not(a) => !self.holds(a, scope)?,
        })
    }

    /// Counterexamples to `f`: every failing assignment of its leading
    /// universal quantifiers, or one empty witness if `f` fails otherwise.
    fn counterexamples(&self, f: &Formula, scope: &Scope, out: &mut Vec<Scope>) -> Result<(), String> {
        match f {
            Formula::Forall { domain, vars, body } => {
                for s in self.assignments(*domain, vars, scope) {
                    self.counterexamples(body, &s, out)?;
                }
            }
            _ => {
                if !self.holds(f, scope)? {
                    out.push(scope.clone());
                }
            }
        }
        Ok(())
    }
}

/// Check every constraint of `style` against `topo`.
pub fn check_constraints(
    style: &StyleDef,
    registry: &StyleRegistry,
    topo: &Topology,
) -> Result<ConformanceReport, String> {
    let ev = Eval { topo, style, registry };
    let mut report = ConformanceReport { style: style.name.clone(), violations: vec![] };
    for c in &style.constraints {
        let mut bad = Vec::new();
        ev.counterexamples(&c.formula, &Scope::new(), &mut bad)?;
        for s in bad {
            let witness = quantifier_order(&c.formula)
                .into_iter()
                .filter_map(|v| s.get(&v).map(|r| (v, ev.element(*r).name.clone())))
                .collect();
            report.violations.push(Violation { style: style.name.clone(), constraint: c.formula.to_string(), witness });
        }
    }
    Ok(report)
}

fn quantifier_order(f: &Formula) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = f;
    while let Formula::Forall { vars, body, .. } = cur {
        out.extend(vars.iter().cloned());
        cur = body;
    }
    out
}

/// Evaluate a closed formula; used for whole-formula truth checks.
pub fn formula_holds(style: &StyleDef, registry: &StyleRegistry, topo: &Topology, f: &Formula) -> Result<bool, String> {
    Eval { topo, style, registry }.holds(f, &Scope::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_str, TermKind};

    pub(crate) fn client_server() -> StyleDef {
        let src = "Client_Server is style where { elements Client is style extending Component \
            Server is style extending Component PC is style extending Connector \
            constraints to connectors apply { forall(c | c in style PC) }. \
            to components apply { forall(c | c in style Client or c in style Server), \
            forall(c1, c2 | c1 connected to c2 implies (c1 in style Client and c2 in style Server) \
            or (c1 in style Server and c2 in style Client)) } ; \
            analysis connected is AAL_property parameters c1 in style Component, c2 in style Component ; \
            property to connectors apply { exists(conn | c1 attached to conn and c2 attached to conn) } }";
        let t = parse_str(src).unwrap();
        let s = match &t.kind {
            TermKind::Block(s) => s[0].clone(),
            _ => t.clone(),
        };
        match &s.kind {
            TermKind::StyleDecl(d) => (**d).clone(),
            other => panic!("not a style: {other:?}"),
        }
    }

    fn el(id: u64, name: &str, tag: &str) -> Element {
        Element { id, name: name.into(), tags: BTreeSet::from([tag.to_string()]) }
    }

    #[test]
    fn client_server_conformance() {
        let style = client_server();
        let mut reg = StyleRegistry::default();
        reg.register(&style).unwrap();
        let good = Topology {
            components: vec![el(1, "client", "Client"), el(2, "server", "Server")],
            connectors: vec![el(10, "c10", "PC")],
            attachments: BTreeSet::from([(1, 10), (2, 10)]),
        };
        assert!(check_constraints(&style, &reg, &good).unwrap().conforms());
        let bad = Topology {
            components: vec![el(1, "client1", "Client"), el(2, "client2", "Client")],
            connectors: vec![el(10, "c10", "PC")],
            attachments: BTreeSet::from([(1, 10), (2, 10)]),
        };
        let r = check_constraints(&style, &reg, &bad).unwrap();
        assert_eq!(r.violations.len(), 2);
        assert_eq!(r.violations[0].witness, vec![("c1".into(), "client1".into()), ("c2".into(), "client2".into())]);
        assert!(check_constraints(&style, &reg, &Topology::default()).unwrap().conforms());
    }
}
