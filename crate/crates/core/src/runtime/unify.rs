//! Channel unification: union-find over channel ids, rebuilt from the set of
//! active merge edges. Each edge records the composite that introduced it, so
//! decomposing a composite removes exactly its own merges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::value::{BehId, ChanId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: ChanId,
    pub b: ChanId,
    pub owner: BehId,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Unifier {
    edges: Vec<Edge>,
    /// Canonical representative (smallest id of the group) for every
    /// channel in a non-trivial group.
    canon: BTreeMap<ChanId, ChanId>,
}

impl Unifier {
    pub fn canonical(&self, c: ChanId) -> ChanId {
        self.canon.get(&c).copied().unwrap_or(c)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn unify(&mut self, a: ChanId, b: ChanId, owner: BehId) {
        self.edges.push(Edge { a, b, owner });
        self.rebuild();
    }

    /// Remove every merge introduced by `owner`; returns the removed pairs.
    pub fn undo(&mut self, owner: BehId) -> Vec<(ChanId, ChanId)> {
        let removed: Vec<_> = self.edges.iter().filter(|e| e.owner == owner).map(|e| (e.a, e.b)).collect();
        self.edges.retain(|e| e.owner != owner);
        self.rebuild();
        removed
    }

    /// Members of the group containing `c`, ascending.
    pub fn group(&self, c: ChanId) -> Vec<ChanId> {
        let root = self.canonical(c);
        let mut g: Vec<ChanId> = self.canon.iter().filter(|(_, r)| **r == root).map(|(k, _)| *k).collect();
        if g.is_empty() {
            g.push(c);
        }
        g
    }

    fn rebuild(&mut self) {
        let mut parent: BTreeMap<ChanId, ChanId> = BTreeMap::new();
        fn find(p: &mut BTreeMap<ChanId, ChanId>, x: ChanId) -> ChanId {
            let mut r = x;
            while let Some(&n) = p.get(&r) {
                if n == r {
                    break;
                }
                r = n;
            }
            let mut c = x;
            while c != r {
                let n = p[&c];
                p.insert(c, r);
                c = n;
            }
            r
        }
        for e in &self.edges {
            parent.entry(e.a).or_insert(e.a);
            parent.entry(e.b).or_insert(e.b);
            let ra = find(&mut parent, e.a);
            let rb = find(&mut parent, e.b);
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent.insert(hi, lo);
            }
        }
        let keys: Vec<ChanId> = parent.keys().copied().collect();
        self.canon.clear();
        for k in keys {
            let r = find(&mut parent, k);
            self.canon.insert(k, r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undo_is_exact_and_order_independent() {
        let mut u = Unifier::default();
        u.unify(1, 2, 10);
        u.unify(2, 3, 11);
        u.unify(4, 5, 10);
        assert_eq!(u.canonical(3), 1);
        assert_eq!(u.group(2), vec![1, 2, 3]);
        u.undo(10);
        assert_eq!(u.canonical(1), 1);
        assert_eq!(u.canonical(3), 2);
        assert_eq!(u.canonical(5), 5);
        u.undo(11);
        assert_eq!(u.canonical(3), 3);
        assert!(u.edges().is_empty());
    }
}
