//! Free identifiers of a term, and replacing them with links.

use std::collections::BTreeSet;

use crate::syntax::{LinkRef, Term, TermKind, TermRef, TypecaseArm};

/// Replace every free identifier for which `f` yields a link.
pub fn link_free(t: &TermRef, f: &mut dyn FnMut(&str) -> Option<LinkRef>) -> TermRef {
    go(t, &BTreeSet::new(), f)
}

pub fn free_vars(t: &TermRef) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    go(t, &BTreeSet::new(), &mut |n| {
        out.insert(n.to_string());
        None
    });
    out
}

fn go(t: &TermRef, bound: &BTreeSet<String>, f: &mut dyn FnMut(&str) -> Option<LinkRef>) -> TermRef {
    match &t.kind {
        TermKind::Ident(n) if !bound.contains(n) => match f(n) {
            Some(l) => Term::new(TermKind::Link(l), t.span),
            None => t.clone(),
        },
        TermKind::Block(stmts) => {
            let mut local = bound.clone();
            let mut out = Vec::with_capacity(stmts.len());
            for s in stmts {
                if let TermKind::ValueDecl { name, init, .. } = &s.kind {
                    if matches!(init.kind, TermKind::AbstractionLit { .. } | TermKind::FunctionLit { .. }) {
                        local.insert(name.clone());
                    }
                }
                out.push(go(s, &local, f));
                match &s.kind {
                    TermKind::ValueDecl { name, .. } => {
                        local.insert(name.clone());
                    }
                    TermKind::Receive { binders, .. } => {
                        local.extend(binders.iter().map(|b| b.name.clone()));
                    }
                    _ => {}
                }
            }
            Term::new(TermKind::Block(out), t.span)
        }
        TermKind::AbstractionLit { params, .. } | TermKind::FunctionLit { params, .. } => {
            let mut inner = bound.clone();
            inner.extend(params.iter().map(|p| p.name.clone()));
            t.map_children(&mut |c| go(c, &inner, f))
        }
        TermKind::Typecase { scrutinee, arms, default } => Term::new(
            TermKind::Typecase {
                scrutinee: go(scrutinee, bound, f),
                arms: arms
                    .iter()
                    .map(|a| {
                        let mut inner = bound.clone();
                        inner.insert(a.binder.clone());
                        TypecaseArm { binder: a.binder.clone(), ty: a.ty.clone(), body: go(&a.body, &inner, f) }
                    })
                    .collect(),
                default: default.as_ref().map(|d| go(d, bound, f)),
            },
            t.span,
        ),
        _ => t.map_children(&mut |c| go(c, bound, f)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_str;

    #[test]
    fn scoping() {
        let t = parse_str(
            "{ value a = b ; via c receive x ; via d send x, a, y ; function(p : integer) -> integer p + q }",
        )
        .unwrap();
        let fv: Vec<String> = free_vars(&t).into_iter().collect();
        assert_eq!(fv, ["b", "c", "d", "q", "y"]);
    }

    #[test]
    fn recursion_binds_own_name() {
        let t = parse_str("value f = function(n : integer) -> integer f(n - 1)").unwrap();
        assert!(free_vars(&t).is_empty());
    }
}
