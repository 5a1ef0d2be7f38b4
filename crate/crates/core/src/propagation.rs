//! Constraint filtering to fixpoint at a search node.
//!
//! The propagator set is bounds-based: precedence bound rules, no-overlap
//! via a timetable over fixed parts plus pairwise detectable precedences,
//! and cumulative via a timetable of compulsory parts. Domains are bound
//! intervals without holes, so every filter tightens `start_min` or
//! `start_max` only. `Fail` is a normal outcome, not an error.

use crate::domain::{DomainStore, Literal, Side, Tighten};
use crate::model::{Constraint, Model, Time, VarId};

/// Outcome of running propagation at one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationOutcome {
    /// Some domain wiped out (`start_min > start_max`).
    Fail,
    /// Fixpoint reached; `n` distinct variables had a bound tightened in
    /// this call, the branched variable's own direct cut excluded.
    Reduced(u32),
}

impl PropagationOutcome {
    #[inline]
    pub fn is_fail(self) -> bool {
        matches!(self, PropagationOutcome::Fail)
    }
}

/// A clause recorded at a restart: if every antecedent is entailed by the
/// current bounds, the consequent bound must hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nogood {
    pub antecedents: Vec<Literal>,
    pub consequent: Literal,
}

/// Per-branch score of a propagation outcome: 0 on failure, otherwise
/// `1 + 0.5^n`. In sFDS mode the reduction factor is dropped and every
/// non-failing branch scores 1.
pub fn local_rating(outcome: PropagationOutcome, sfds_mode: bool) -> f64 {
    match outcome {
        PropagationOutcome::Fail => 0.0,
        PropagationOutcome::Reduced(_) if sfds_mode => 1.0,
        PropagationOutcome::Reduced(n) => 1.0 + 0.5f64.powi(n as i32),
    }
}

/// Tracks which variables changed during one propagate call.
struct ChangeSet {
    changed: Vec<bool>,
    count: u32,
}

impl ChangeSet {
    fn new(n: usize) -> Self {
        ChangeSet {
            changed: vec![false; n],
            count: 0,
        }
    }

    #[inline]
    fn note(&mut self, v: VarId) {
        if !self.changed[v.index()] {
            self.changed[v.index()] = true;
            self.count += 1;
        }
    }
}

struct Ctx<'a> {
    store: &'a mut DomainStore,
    changes: ChangeSet,
    progressed: bool,
    failed: bool,
}

impl<'a> Ctx<'a> {
    #[inline]
    fn min(&mut self, v: VarId, val: Time) {
        match self.store.tighten_min(v, val) {
            Tighten::Unchanged => {}
            Tighten::Changed => {
                self.changes.note(v);
                self.progressed = true;
            }
            Tighten::Wipeout => {
                self.changes.note(v);
                self.progressed = true;
                self.failed = true;
            }
        }
    }

    #[inline]
    fn max(&mut self, v: VarId, val: Time) {
        match self.store.tighten_max(v, val) {
            Tighten::Unchanged => {}
            Tighten::Changed => {
                self.changes.note(v);
                self.progressed = true;
            }
            Tighten::Wipeout => {
                self.changes.note(v);
                self.progressed = true;
                self.failed = true;
            }
        }
    }
}

/// Applies `new_branch` (if any) as a bound cut and runs all propagators,
/// the dynamic makespan cap, and the nogood store to fixpoint.
///
/// Returns `Fail` on a domain wipeout, else `Reduced(n)` where `n` counts
/// the distinct variables tightened here, excluding the direct cut.
pub fn propagate(
    store: &mut DomainStore,
    model: &Model,
    dynamic_cap: Option<Time>,
    nogoods: &[Nogood],
    new_branch: Option<Literal>,
) -> PropagationOutcome {
    if let Some(lit) = new_branch {
        if store.apply_literal(lit) == Tighten::Wipeout {
            return PropagationOutcome::Fail;
        }
    }
    // A freshly built store can already be inconsistent (over-tight cap).
    for v in model.variables() {
        if store.is_wiped(v.id) {
            return PropagationOutcome::Fail;
        }
    }

    let mut ctx = Ctx {
        store,
        changes: ChangeSet::new(model.num_vars()),
        progressed: false,
        failed: false,
    };

    loop {
        ctx.progressed = false;
        if let Some(cap) = dynamic_cap {
            for v in model.variables() {
                ctx.max(v.id, cap - v.length);
                if ctx.failed {
                    return PropagationOutcome::Fail;
                }
            }
        }
        for c in model.constraints() {
            match c {
                Constraint::Precedence {
                    before,
                    after,
                    delay,
                } => filter_precedence(&mut ctx, model, *before, *after, *delay),
                Constraint::NoOverlap { vars } => filter_no_overlap(&mut ctx, model, vars),
                Constraint::Cumulative {
                    vars,
                    demands,
                    capacity,
                } => filter_cumulative(&mut ctx, model, vars, demands, *capacity),
            }
            if ctx.failed {
                return PropagationOutcome::Fail;
            }
        }
        for ng in nogoods {
            if ng.antecedents.iter().all(|&a| ctx.store.entails(a)) {
                let lit = ng.consequent;
                match lit.side {
                    Side::LessEq => ctx.max(lit.var, lit.pivot),
                    Side::Greater => ctx.min(lit.var, lit.pivot + 1),
                }
                if ctx.failed {
                    return PropagationOutcome::Fail;
                }
            }
        }
        if !ctx.progressed {
            break;
        }
    }
    PropagationOutcome::Reduced(ctx.changes.count)
}

fn filter_precedence(ctx: &mut Ctx, model: &Model, before: VarId, after: VarId, delay: Time) {
    let len_before = model.var(before).length;
    let min_after = ctx.store.start_min(before) + len_before + delay;
    ctx.min(after, min_after);
    if ctx.failed {
        return;
    }
    let max_before = ctx.store.start_max(after) - delay - len_before;
    ctx.max(before, max_before);
}

/// Fixed (compulsory) execution part of `v`: `[start_max, start_min + len)`
/// when non-empty.
fn compulsory_part(ctx: &Ctx, model: &Model, v: VarId) -> Option<(Time, Time)> {
    let len = model.var(v).length;
    if len <= 0 {
        return None;
    }
    let (lo, hi) = ctx.store.window(v);
    let s = hi;
    let e = lo + len;
    if s < e {
        Some((s, e))
    } else {
        None
    }
}

/// Forbids `j` from overlapping the fixed interval `[s, e)`.
fn forbid_overlap(ctx: &mut Ctx, model: &Model, j: VarId, s: Time, e: Time) {
    let len = model.var(j).length;
    if len <= 0 {
        return;
    }
    let (lo, hi) = ctx.store.window(j);
    // At its earliest start, j would overlap: every start up to e-1 does too,
    // so j must start at or after e.
    if lo < e && lo + len > s {
        ctx.min(j, e);
        if ctx.failed {
            return;
        }
    }
    // At its latest start, j would overlap: it must end at or before s.
    if hi < e && hi + len > s {
        ctx.max(j, s - len);
    }
}

fn filter_no_overlap(ctx: &mut Ctx, model: &Model, vars: &[VarId]) {
    // Timetable over fixed parts.
    for &i in vars {
        if let Some((s, e)) = compulsory_part(ctx, model, i) {
            for &j in vars {
                if j != i {
                    forbid_overlap(ctx, model, j, s, e);
                    if ctx.failed {
                        return;
                    }
                }
            }
        }
    }
    // Detectable precedences: activities that provably run before (after)
    // j are sequential among themselves, so j starts no earlier than the
    // earliest completion of the whole predecessor set (symmetrically for
    // successors).
    let mut group: Vec<(Time, Time)> = Vec::new();
    for &j in vars {
        let len_j = model.var(j).length;
        if len_j <= 0 {
            continue;
        }
        // i precedes j when j cannot finish before i's latest start.
        group.clear();
        for &i in vars {
            if i == j || model.var(i).length <= 0 {
                continue;
            }
            if ctx.store.start_min(j) + len_j > ctx.store.start_max(i) {
                group.push((ctx.store.start_min(i), model.var(i).length));
            }
        }
        if !group.is_empty() {
            group.sort_unstable();
            let mut ect = Time::MIN;
            for &(lo, len) in &group {
                ect = ect.max(lo) + len;
            }
            ctx.min(j, ect);
            if ctx.failed {
                return;
            }
        }
        // j precedes i when j cannot start after i ends at its earliest.
        group.clear();
        for &i in vars {
            if i == j || model.var(i).length <= 0 {
                continue;
            }
            if ctx.store.start_min(i) + model.var(i).length > ctx.store.start_max(j) {
                group.push((ctx.store.start_max(i) + model.var(i).length, model.var(i).length));
            }
        }
        if !group.is_empty() {
            group.sort_unstable_by(|a, b| b.cmp(a));
            let mut lst = Time::MAX;
            for &(end_max, len) in &group {
                lst = lst.min(end_max) - len;
            }
            ctx.max(j, lst - len_j);
            if ctx.failed {
                return;
            }
        }
    }
}

fn filter_cumulative(ctx: &mut Ctx, model: &Model, vars: &[VarId], demands: &[i64], cap: i64) {
    // Profile of compulsory parts as step events.
    let mut events: Vec<(Time, i64)> = Vec::new();
    for (&v, &d) in vars.iter().zip(demands) {
        if let Some((s, e)) = compulsory_part(ctx, model, v) {
            events.push((s, d));
            events.push((e, -d));
        }
    }
    if events.is_empty() {
        return;
    }
    events.sort_unstable();
    // Segments of constant load between consecutive event times.
    let mut segments: Vec<(Time, Time, i64)> = Vec::new();
    let mut level = 0i64;
    let mut idx = 0;
    while idx < events.len() {
        let t = events[idx].0;
        while idx < events.len() && events[idx].0 == t {
            level += events[idx].1;
            idx += 1;
        }
        let next = events.get(idx).map(|e| e.0);
        if let Some(n) = next {
            segments.push((t, n, level));
        }
        if level > cap {
            ctx.failed = true;
            return;
        }
    }

    // Filter each activity against segments it cannot share.
    for (&v, &d) in vars.iter().zip(demands) {
        let len = model.var(v).length;
        if len <= 0 {
            continue;
        }
        let own = compulsory_part(ctx, model, v);
        // Left to right for start_min; the outer fixpoint loop handles any
        // knock-on effects of repeated jumps.
        for &(s, e, level) in &segments {
            let own_here = match own {
                Some((os, oe)) if os < e && oe > s => d,
                _ => 0,
            };
            if level - own_here + d <= cap {
                continue;
            }
            forbid_overlap(ctx, model, v, s, e);
            if ctx.failed {
                return;
            }
        }
    }
}
