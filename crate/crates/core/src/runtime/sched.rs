//! The scheduler: offers, enabled threads, and one reduction per step.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::machine::{thread_subject, Fault, Frame, Machine, RunResult};
use super::trace::EventKind;
use super::value::*;
use crate::syntax::{Term, TermKind, TermRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dir {
    Send,
    Recv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStep {
    Enter,
    Branch(usize),
    Rep,
}

/// Something a thread could do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Offer {
    /// Top-level choice branch the offer belongs to; 0 outside a choice.
    pub group: usize,
    pub path: Vec<PathStep>,
    pub comm: Option<(Dir, ChanId)>,
    /// Waiting for this composite to quiesce before decomposing it.
    pub wait: Option<BehId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub thread: ThreadId,
    pub offer: usize,
    pub partner: Option<(ThreadId, usize)>,
}

#[derive(Debug, Clone, Default)]
pub struct ThreadChoices {
    pub thread: ThreadId,
    pub offers: Vec<Offer>,
    /// For every offer: the partner offers it can pair with, or `None`
    /// when the offer is not ready. Internal offers get an empty list.
    pub partners: Vec<Option<Vec<(ThreadId, usize)>>>,
}

impl ThreadChoices {
    pub fn enabled(&self) -> bool {
        self.partners.iter().any(Option::is_some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Quiescent,
    Budget,
}

fn is_decompose_stmt(t: &Term) -> Option<&TermRef> {
    match &t.kind {
        TermKind::Decompose(e) => Some(e),
        TermKind::ValueDecl { init, .. } => match &init.kind {
            TermKind::Decompose(e) => Some(e),
            _ => None,
        },
        _ => None,
    }
}

impl Machine {
    /// Pop finished frames and descend into blocks. Returns false when the
    /// thread has finished (and has been removed).
    pub(crate) fn normalise_thread(&mut self, t: ThreadId) -> bool {
        loop {
            let Some(th) = self.threads.get_mut(&t) else { return false };
            let Some(top) = th.frames.last_mut() else {
                let b = th.behaviour;
                self.threads.remove(&t);
                if !self.threads.values().any(|x| x.behaviour == b) {
                    self.blocked_reported.remove(&b);
                    self.emit(EventKind::Terminate, vec![format!("b{b}")], None);
                }
                return false;
            };
            let Some(cur) = top.current().cloned() else {
                th.frames.pop();
                continue;
            };
            if let TermKind::Block(_) = cur.kind {
                top.idx += 1;
                let env = top.env.clone();
                th.frames.push(Frame::new(cur, env));
                continue;
            }
            return true;
        }
    }

    fn channel_of(&mut self, ch: &Term, env: &Env) -> RunResult<ChanId> {
        let mut v = self.eval(ch, env, None)?;
        loop {
            match v {
                Value::Chan(c) => return Ok(self.canonical(c)),
                Value::Loc(l) => v = self.location(l).value.clone(),
                Value::Any(inner, _) => v = *inner,
                other => return Err(Fault::DynamicType(format!("communication on {}", other.kind_name()))),
            }
        }
    }

    fn offers_of(
        &mut self,
        t: &Term,
        env: &Env,
        path: &mut Vec<PathStep>,
        group: Option<usize>,
        out: &mut Vec<Offer>,
    ) -> RunResult<()> {
        let g = group.unwrap_or(0);
        match &t.kind {
            TermKind::Send { channel, .. } => {
                let c = self.channel_of(channel, env)?;
                out.push(Offer { group: g, path: path.clone(), comm: Some((Dir::Send, c)), wait: None });
            }
            TermKind::Receive { channel, .. } => {
                let c = self.channel_of(channel, env)?;
                out.push(Offer { group: g, path: path.clone(), comm: Some((Dir::Recv, c)), wait: None });
            }
            TermKind::Block(stmts) if !stmts.is_empty() => {
                path.push(PathStep::Enter);
                self.offers_of(&stmts[0], env, path, group, out)?;
                path.pop();
            }
            TermKind::Choose(branches) => {
                for (i, b) in branches.iter().enumerate() {
                    path.push(PathStep::Branch(i));
                    let mut sub = Vec::new();
                    self.offers_in_frame(b, env, path, Some(group.unwrap_or(i)), &mut sub)?;
                    let commit = Offer { group: group.unwrap_or(i), path: path.clone(), comm: None, wait: None };
                    path.pop();
                    let mut internal = false;
                    for o in sub {
                        if o.comm.is_some() {
                            out.push(o);
                        } else {
                            internal = true;
                        }
                    }
                    if internal {
                        out.push(commit);
                    }
                }
            }
            TermKind::Replicate(body) => {
                path.push(PathStep::Rep);
                let mut sub = Vec::new();
                self.offers_in_frame(body, env, path, group, &mut sub)?;
                path.pop();
                out.extend(sub.into_iter().filter(|o| o.comm.is_some()));
            }
            _ => {
                let wait = match is_decompose_stmt(t) {
                    Some(e) => match self.eval(e, env, None)? {
                        Value::Behaviour(h) => Some(h),
                        _ => None,
                    },
                    None => None,
                };
                out.push(Offer { group: g, path: path.clone(), comm: None, wait });
            }
        }
        Ok(())
    }

    /// Offers of a term about to get its own frame: a block's statements
    /// become the frame's statements, so its first one is offered directly.
    fn offers_in_frame(
        &mut self,
        t: &Term,
        env: &Env,
        path: &mut Vec<PathStep>,
        group: Option<usize>,
        out: &mut Vec<Offer>,
    ) -> RunResult<()> {
        match &t.kind {
            TermKind::Block(stmts) if !stmts.is_empty() => self.offers_of(&stmts[0], env, path, group, out),
            _ => self.offers_of(t, env, path, group, out),
        }
    }

    /// Offers and readiness of every runnable thread, in thread-id order.
    pub fn choices(&mut self) -> RunResult<Vec<ThreadChoices>> {
        let ids: Vec<ThreadId> = self.threads.keys().copied().collect();
        for t in &ids {
            self.normalise_thread(*t);
        }
        let mut all = Vec::new();
        let ids: Vec<ThreadId> = self.threads.keys().copied().collect();
        for t in ids {
            if self.thread_suspended(&self.threads[&t]) {
                continue;
            }
            let th = &self.threads[&t];
            let frame = th.frames.last().unwrap();
            let stmt = frame.current().unwrap().clone();
            let env = frame.env.clone();
            let mut offers = Vec::new();
            self.offers_of(&stmt, &env, &mut vec![], None, &mut offers)?;
            all.push(ThreadChoices { thread: t, offers, partners: vec![] });
        }
        let mut by_chan: BTreeMap<(Dir, ChanId), Vec<(ThreadId, usize)>> = BTreeMap::new();
        for tc in &all {
            for (i, o) in tc.offers.iter().enumerate() {
                if let Some(k) = o.comm {
                    by_chan.entry(k).or_default().push((tc.thread, i));
                }
            }
        }
        for tc in &mut all {
            tc.partners = tc
                .offers
                .iter()
                .map(|o| match o.comm {
                    None if o.wait.is_some() => None,
                    None => Some(vec![]),
                    Some((d, c)) => {
                        let other = if d == Dir::Send { Dir::Recv } else { Dir::Send };
                        let ps: Vec<_> = by_chan
                            .get(&(other, c))
                            .map(|v| v.iter().copied().filter(|(pt, _)| *pt != tc.thread).collect())
                            .unwrap_or_default();
                        if ps.is_empty() {
                            None
                        } else {
                            Some(ps)
                        }
                    }
                })
                .collect();
        }
        let enabled: BTreeSet<ThreadId> = all.iter().filter(|c| c.enabled()).map(|c| c.thread).collect();
        let step = self.step;
        let timeout = self.config.decompose_timeout;
        for i in 0..all.len() {
            let Some((oi, h)) = all[i].offers.iter().enumerate().find_map(|(k, o)| o.wait.map(|h| (k, h))) else {
                continue;
            };
            let t = all[i].thread;
            let start = match self.threads[&t].pending_decompose {
                Some((ph, s)) if ph == h => s,
                _ => {
                    self.threads.get_mut(&t).unwrap().pending_decompose = Some((h, step));
                    step
                }
            };
            let live = self.behaviours.get(&h).map(|b| b.is_composite() && !b.dissolved).unwrap_or(false);
            let quiet = !self.threads_under(h).iter().any(|x| enabled.contains(x));
            if !live || quiet || step - start >= timeout {
                all[i].partners[oi] = Some(vec![]);
            }
        }
        Ok(all)
    }

    pub fn enabled_threads(&mut self) -> BTreeSet<ThreadId> {
        match self.choices() {
            Ok(cs) => cs.iter().filter(|c| c.enabled()).map(|c| c.thread).collect(),
            Err(_) => BTreeSet::new(),
        }
    }

    pub fn subtree_quiescent(&mut self, h: BehId) -> RunResult<bool> {
        let cs = self.choices()?;
        let enabled: BTreeSet<ThreadId> = cs.iter().filter(|c| c.enabled()).map(|c| c.thread).collect();
        Ok(!self.threads_under(h).iter().any(|t| enabled.contains(t)))
    }

    /// Every possible next reduction.
    pub fn all_moves(&mut self) -> RunResult<Vec<Move>> {
        let mut out = Vec::new();
        for tc in self.choices()? {
            for (i, p) in tc.partners.iter().enumerate() {
                match p {
                    Some(ps) if ps.is_empty() => out.push(Move { thread: tc.thread, offer: i, partner: None }),
                    Some(ps) => {
                        for p in ps {
                            out.push(Move { thread: tc.thread, offer: i, partner: Some(*p) });
                        }
                    }
                    None => {}
                }
            }
        }
        Ok(out)
    }

    fn pick<T: Clone>(&mut self, xs: &[T]) -> T {
        xs[self.rng.gen_range(0..xs.len())].clone()
    }

    /// Perform one reduction. Returns false when nothing can happen.
    pub fn step(&mut self) -> RunResult<bool> {
        let cs = self.choices()?;
        let enabled: Vec<&ThreadChoices> = cs.iter().filter(|c| c.enabled()).collect();
        if enabled.is_empty() {
            self.report_blocked();
            return Ok(false);
        }
        let tc = enabled[self.rng.gen_range(0..enabled.len())].clone();
        let groups: Vec<usize> = tc
            .offers
            .iter()
            .zip(&tc.partners)
            .filter(|(_, p)| p.is_some())
            .map(|(o, _)| o.group)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let g = self.pick(&groups);
        let ready: Vec<usize> =
            (0..tc.offers.len()).filter(|&i| tc.offers[i].group == g && tc.partners[i].is_some()).collect();
        let oi = self.pick(&ready);
        let partners = tc.partners[oi].clone().unwrap();
        let partner = if partners.is_empty() { None } else { Some(self.pick(&partners)) };
        let offers: BTreeMap<ThreadId, Vec<Offer>> = cs.into_iter().map(|c| (c.thread, c.offers)).collect();
        self.perform_with(&offers, &Move { thread: tc.thread, offer: oi, partner })?;
        Ok(true)
    }

    /// Perform a move previously returned by [`Machine::all_moves`].
    pub fn perform(&mut self, mv: &Move) -> RunResult<()> {
        let offers: BTreeMap<ThreadId, Vec<Offer>> =
            self.choices()?.into_iter().map(|c| (c.thread, c.offers)).collect();
        self.perform_with(&offers, mv)
    }

    fn perform_with(&mut self, offers: &BTreeMap<ThreadId, Vec<Offer>>, mv: &Move) -> RunResult<()> {
        self.step += 1;
        let offer = offers[&mv.thread][mv.offer].clone();
        let b = self.threads[&mv.thread].behaviour;
        self.blocked_reported.remove(&b);
        match (offer.comm, mv.partner) {
            (None, _) if !offer.path.is_empty() => self.follow_path(mv.thread, &offer.path),
            (None, _) => {
                if let Some(h) = offer.wait {
                    self.threads.get_mut(&mv.thread).unwrap().pending_decompose = None;
                    let live = self.behaviours.get(&h).map(|x| x.is_composite() && !x.dissolved).unwrap_or(false);
                    if live && !self.subtree_quiescent(h)? {
                        return Err(Fault::QuiescenceTimeout(h, self.config.decompose_timeout));
                    }
                }
                let stmt = self.threads[&mv.thread].frames.last().unwrap().current().unwrap().clone();
                self.exec_simple(mv.thread, &stmt).map(|_| ())
            }
            (Some((dir, c)), Some((pt, po))) => {
                let poffer = offers[&pt][po].clone();
                let pb = self.threads[&pt].behaviour;
                self.blocked_reported.remove(&pb);
                let (st, sp, rt, rp) = if dir == Dir::Send {
                    (mv.thread, offer.path, pt, poffer.path)
                } else {
                    (pt, poffer.path, mv.thread, offer.path)
                };
                self.follow_path(st, &sp)?;
                self.follow_path(rt, &rp)?;
                self.rendezvous(st, rt, c)
            }
            (Some(_), None) => Err(Fault::Internal("communication without a partner".into())),
        }
    }

    fn follow_path(&mut self, t: ThreadId, path: &[PathStep]) -> RunResult<()> {
        for step in path {
            let th = self.threads.get_mut(&t).unwrap();
            let b = th.behaviour;
            let top = th.frames.last_mut().unwrap();
            let cur = top.current().unwrap().clone();
            let env = top.env.clone();
            match (step, &cur.kind) {
                (PathStep::Enter, TermKind::Block(_)) => {
                    top.idx += 1;
                    th.frames.push(Frame::new(cur, env));
                }
                (PathStep::Branch(i), TermKind::Choose(bs)) => {
                    top.idx += 1;
                    th.frames.push(Frame::new(bs[*i].clone(), env));
                    let payload = format!("{}/{}", i + 1, bs.len());
                    self.emit(EventKind::ChoiceCommit, vec![thread_subject(b, t)], Some(payload));
                }
                (PathStep::Rep, TermKind::Replicate(body)) => {
                    let frames = th.frames.clone();
                    th.frames = vec![Frame::new(body.clone(), env)];
                    let clone = self.new_thread(b, frames);
                    self.emit(EventKind::ReplicateClone, vec![thread_subject(b, t), thread_subject(b, clone)], None);
                }
                _ => return Err(Fault::Internal("offer path does not match the thread".into())),
            }
        }
        Ok(())
    }

    fn rendezvous(&mut self, st: ThreadId, rt: ThreadId, c: ChanId) -> RunResult<()> {
        let (sb, send) = self.current_stmt(st);
        let (rb, recv) = self.current_stmt(rt);
        let senv = self.threads[&st].frames.last().unwrap().env.clone();
        let TermKind::Send { payload, .. } = &send.kind else {
            return Err(Fault::Internal("sender is not at a send".into()));
        };
        let TermKind::Receive { binders, .. } = &recv.kind else {
            return Err(Fault::Internal("receiver is not at a receive".into()));
        };
        let values = payload.iter().map(|p| self.eval(p, &senv, Some(sb))).collect::<RunResult<Vec<_>>>()?;
        if self.config.dynamic_types {
            let expected = &self.channel(c).payload;
            for (v, t) in values.iter().zip(expected) {
                let vt = self.type_of(v);
                if vt != *t {
                    return Err(Fault::DynamicType(format!("sent {vt} on a connection carrying {t}")));
                }
            }
        }
        self.threads.get_mut(&st).unwrap().frames.last_mut().unwrap().idx += 1;
        let rframe = self.threads.get_mut(&rt).unwrap().frames.last_mut().unwrap();
        rframe.idx += 1;
        for (bd, v) in binders.iter().zip(&values) {
            rframe.env = rframe.env.bind(&bd.name, v.clone());
        }
        let rendered: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.emit(
            EventKind::SendRecv,
            vec![thread_subject(sb, st), thread_subject(rb, rt), format!("c{c}")],
            Some(format!("({})", rendered.join(", "))),
        );
        Ok(())
    }

    fn current_stmt(&self, t: ThreadId) -> (BehId, TermRef) {
        let th = &self.threads[&t];
        (th.behaviour, th.frames.last().unwrap().current().unwrap().clone())
    }

    /// Run one internal, non-communicating statement of thread `t`.
    /// Returns the binding it made, if any.
    pub(crate) fn exec_simple(&mut self, t: ThreadId, stmt: &TermRef) -> RunResult<Option<(String, Value)>> {
        let th = self.threads.get_mut(&t).unwrap();
        let b = th.behaviour;
        let top = th.frames.last_mut().unwrap();
        top.idx += 1;
        let env = top.env.clone();
        match &stmt.kind {
            TermKind::Parallel(bs) => {
                self.threads.get_mut(&t).unwrap().frames.push(Frame::new(bs[0].clone(), env.clone()));
                for br in &bs[1..] {
                    let nt = self.new_thread(b, vec![Frame::new(br.clone(), env.clone())]);
                    self.emit(EventKind::Spawn, vec![format!("b{b}"), thread_subject(b, nt)], None);
                }
                Ok(None)
            }
            TermKind::If { .. } | TermKind::Typecase { .. } => {
                let (br, benv) = self.select_branch(stmt, &env, Some(b))?;
                self.threads.get_mut(&t).unwrap().frames.push(Frame::new(br, benv));
                Ok(None)
            }
            TermKind::Apply { callee, args } => {
                let f = self.eval(callee, &env, Some(b))?;
                let args = args.iter().map(|a| self.eval(a, &env, Some(b))).collect::<RunResult<Vec<_>>>()?;
                match f {
                    Value::Closure(id) if self.closure(id).kind == ClosureKind::Abstraction => {
                        let body = self.closure(id).body.clone();
                        let cenv = self.closure_env(id, args);
                        self.threads.get_mut(&t).unwrap().frames.push(Frame::new(body, cenv));
                    }
                    f => {
                        self.apply(f, args, Some(b))?;
                    }
                }
                Ok(None)
            }
            _ => {
                let (_, new_env) = self.eval_stmt(stmt, &env, Some(b))?;
                let bound = match &stmt.kind {
                    TermKind::ValueDecl { name, .. } => new_env.lookup(name).cloned().map(|v| (name.clone(), v)),
                    _ => None,
                };
                if let Some(th) = self.threads.get_mut(&t) {
                    if let Some(top) = th.frames.last_mut() {
                        top.env = new_env;
                    }
                }
                Ok(bound)
            }
        }
    }

    fn report_blocked(&mut self) {
        let live: BTreeSet<BehId> =
            self.threads.values().filter(|t| !self.thread_suspended(t)).map(|t| t.behaviour).collect();
        for b in live {
            if self.blocked_reported.insert(b) {
                self.emit(EventKind::Block, vec![format!("b{b}")], None);
            }
        }
    }

    /// Step until quiescent or `max_steps` reductions have happened.
    pub fn run(&mut self, max_steps: u64) -> RunResult<Outcome> {
        for _ in 0..max_steps {
            if !self.step()? {
                return Ok(Outcome::Quiescent);
            }
        }
        if self.all_moves()?.is_empty() {
            self.report_blocked();
            return Ok(Outcome::Quiescent);
        }
        Ok(Outcome::Budget)
    }

    /// Step until composite `h` is quiescent, bounded by the decompose timeout.
    pub fn quiesce(&mut self, h: BehId) -> RunResult<()> {
        let timeout = self.config.decompose_timeout;
        for _ in 0..=timeout {
            if self.subtree_quiescent(h)? {
                return Ok(());
            }
            if !self.step()? {
                return Ok(());
            }
        }
        if self.subtree_quiescent(h)? {
            Ok(())
        } else {
            Err(Fault::QuiescenceTimeout(h, timeout))
        }
    }
}
