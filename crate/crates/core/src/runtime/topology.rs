//! Topology snapshots of composites for style checking.

use std::collections::{BTreeMap, BTreeSet};

use super::machine::{Fault, Machine, RunResult};
use super::value::{BehId, ChanId};
use crate::styles::{Element, Topology};

impl Machine {
    fn behaviour_name(&self, b: BehId) -> String {
        self.behaviours[&b].label.clone().unwrap_or_else(|| format!("b{b}"))
    }

    /// Interface connections of `b` and, for a composite, of its parts.
    fn connections_under(&self, b: BehId, out: &mut BTreeSet<ChanId>) {
        let beh = &self.behaviours[&b];
        out.extend(beh.interface.iter().map(|(_, c)| self.canonical(*c)));
        for p in beh.parts() {
            self.connections_under(*p, out);
        }
    }

    /// Components are the direct parts of `h`; connectors are the canonical
    /// channel groups attached to at least one of them.
    pub fn topology(&self, h: BehId) -> RunResult<Topology> {
        let Some(beh) = self.behaviours.get(&h) else { return Err(Fault::NotComposite(h)) };
        let parts: Vec<BehId> = if beh.is_composite() { beh.parts().to_vec() } else { vec![h] };
        let mut topo = Topology::default();
        let mut connectors: BTreeMap<ChanId, Element> = BTreeMap::new();
        for p in parts {
            let mut conns = BTreeSet::new();
            self.connections_under(p, &mut conns);
            for c in conns {
                topo.attachments.insert((p, c));
                connectors.entry(c).or_insert_with(|| Element {
                    id: c,
                    name: format!("c{c}"),
                    tags: self.channel_styles(c),
                });
            }
            topo.components.push(Element {
                id: p,
                name: self.behaviour_name(p),
                tags: self.behaviours[&p].style_tags.clone(),
            });
        }
        topo.connectors = connectors.into_values().collect();
        Ok(topo)
    }
}
