//! Backtrackable store of the current start windows.
//!
//! Bounds only ever tighten between a checkpoint and its restore; a restore
//! replays the trail and reproduces the earlier bounds exactly. Marks are
//! strictly LIFO: restoring anything but the most recent live mark is an
//! internal-invariant violation and panics.

use crate::model::{Model, Time, VarId};

/// Which half of a domain split a literal asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `start(v) <= pivot`
    LessEq,
    /// `start(v) > pivot`
    Greater,
}

impl Side {
    #[inline]
    pub fn negated(self) -> Side {
        match self {
            Side::LessEq => Side::Greater,
            Side::Greater => Side::LessEq,
        }
    }
}

/// A ground bound assertion on one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: VarId,
    pub pivot: Time,
    pub side: Side,
}

impl Literal {
    #[inline]
    pub fn negated(self) -> Literal {
        Literal {
            side: self.side.negated(),
            ..self
        }
    }
}

impl std::fmt::Display for Literal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.side {
            Side::LessEq => write!(f, "{} <= {}", self.var, self.pivot),
            Side::Greater => write!(f, "{} > {}", self.var, self.pivot),
        }
    }
}

/// Checkpoint handle returned by [`DomainStore::checkpoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mark {
    mark_index: usize,
    trail_len: usize,
}

#[derive(Debug, Clone, Copy)]
struct TrailEntry {
    var: VarId,
    lower: bool,
    old: Time,
}

/// Result of a single bound tightening.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tighten {
    Unchanged,
    Changed,
    /// The window wiped out (`start_min > start_max`).
    Wipeout,
}

/// Per-run store of current `(start_min, start_max)` windows with a trail.
#[derive(Debug, Clone)]
pub struct DomainStore {
    start_min: Vec<Time>,
    start_max: Vec<Time>,
    trail: Vec<TrailEntry>,
    marks: Vec<usize>,
}

impl DomainStore {
    /// A store initialized from the model's root windows.
    pub fn new(model: &Model) -> Self {
        DomainStore {
            start_min: model.variables().iter().map(|v| v.start_min).collect(),
            start_max: model.variables().iter().map(|v| v.start_max).collect(),
            trail: Vec::new(),
            marks: Vec::new(),
        }
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.start_min.len()
    }

    #[inline]
    pub fn start_min(&self, v: VarId) -> Time {
        self.start_min[v.index()]
    }

    #[inline]
    pub fn start_max(&self, v: VarId) -> Time {
        self.start_max[v.index()]
    }

    #[inline]
    pub fn window(&self, v: VarId) -> (Time, Time) {
        (self.start_min[v.index()], self.start_max[v.index()])
    }

    #[inline]
    pub fn is_fixed(&self, v: VarId) -> bool {
        self.start_min[v.index()] == self.start_max[v.index()]
    }

    #[inline]
    pub fn is_wiped(&self, v: VarId) -> bool {
        self.start_min[v.index()] > self.start_max[v.index()]
    }

    /// Raises `start_min(v)` to `val` if that tightens it.
    pub fn tighten_min(&mut self, v: VarId, val: Time) -> Tighten {
        let i = v.index();
        if val <= self.start_min[i] {
            return Tighten::Unchanged;
        }
        self.trail.push(TrailEntry {
            var: v,
            lower: true,
            old: self.start_min[i],
        });
        self.start_min[i] = val;
        if self.start_min[i] > self.start_max[i] {
            Tighten::Wipeout
        } else {
            Tighten::Changed
        }
    }

    /// Lowers `start_max(v)` to `val` if that tightens it.
    pub fn tighten_max(&mut self, v: VarId, val: Time) -> Tighten {
        let i = v.index();
        if val >= self.start_max[i] {
            return Tighten::Unchanged;
        }
        self.trail.push(TrailEntry {
            var: v,
            lower: false,
            old: self.start_max[i],
        });
        self.start_max[i] = val;
        if self.start_min[i] > self.start_max[i] {
            Tighten::Wipeout
        } else {
            Tighten::Changed
        }
    }

    /// Applies a branch literal as a bound cut.
    pub fn apply_literal(&mut self, lit: Literal) -> Tighten {
        match lit.side {
            Side::LessEq => self.tighten_max(lit.var, lit.pivot),
            Side::Greater => self.tighten_min(lit.var, lit.pivot + 1),
        }
    }

    /// True iff the current bounds entail the literal.
    #[inline]
    pub fn entails(&self, lit: Literal) -> bool {
        match lit.side {
            Side::LessEq => self.start_max(lit.var) <= lit.pivot,
            Side::Greater => self.start_min(lit.var) > lit.pivot,
        }
    }

    pub fn checkpoint(&mut self) -> Mark {
        let mark = Mark {
            mark_index: self.marks.len(),
            trail_len: self.trail.len(),
        };
        self.marks.push(self.trail.len());
        mark
    }

    /// Rolls bounds back to the state at `mark`'s checkpoint.
    ///
    /// Panics if `mark` is stale or restored out of LIFO order.
    pub fn restore(&mut self, mark: Mark) {
        assert!(
            self.marks.len() == mark.mark_index + 1
                && self.marks[mark.mark_index] == mark.trail_len,
            "domain store mark restored out of order or after being popped"
        );
        self.marks.pop();
        while self.trail.len() > mark.trail_len {
            let e = self.trail.pop().unwrap();
            if e.lower {
                self.start_min[e.var.index()] = e.old;
            } else {
                self.start_max[e.var.index()] = e.old;
            }
        }
    }

    /// Number of live checkpoints.
    #[inline]
    pub fn depth(&self) -> usize {
        self.marks.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;
    use proptest::prelude::*;

    fn three_var_store() -> DomainStore {
        let mut b = ModelBuilder::new();
        for _ in 0..3 {
            b.new_interval(0, 50, 4).unwrap();
        }
        DomainStore::new(&b.build())
    }

    #[test]
    fn restore_reproduces_bounds_exactly() {
        let mut s = three_var_store();
        let before: Vec<_> = (0..3).map(|i| s.window(VarId(i))).collect();
        let mark = s.checkpoint();
        s.tighten_min(VarId(0), 10);
        s.tighten_max(VarId(1), 20);
        s.tighten_min(VarId(2), 5);
        s.restore(mark);
        let after: Vec<_> = (0..3).map(|i| s.window(VarId(i))).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn restore_without_changes_is_noop() {
        let mut s = three_var_store();
        let mark = s.checkpoint();
        s.restore(mark);
        assert_eq!(s.window(VarId(0)), (0, 50));
    }

    #[test]
    #[should_panic(expected = "out of order")]
    fn out_of_order_restore_panics() {
        let mut s = three_var_store();
        let outer = s.checkpoint();
        let _inner = s.checkpoint();
        s.restore(outer);
    }

    #[test]
    #[should_panic(expected = "out of order")]
    fn stale_mark_restore_panics() {
        let mut s = three_var_store();
        let mark = s.checkpoint();
        s.restore(mark);
        s.restore(mark);
    }

    #[test]
    fn literal_application_and_entailment() {
        let mut s = three_var_store();
        let lit = Literal {
            var: VarId(0),
            pivot: 7,
            side: Side::LessEq,
        };
        assert!(!s.entails(lit));
        assert_eq!(s.apply_literal(lit), Tighten::Changed);
        assert!(s.entails(lit));
        assert_eq!(s.window(VarId(0)), (0, 7));

        let gt = Literal {
            var: VarId(1),
            pivot: 7,
            side: Side::Greater,
        };
        assert_eq!(s.apply_literal(gt), Tighten::Changed);
        assert_eq!(s.window(VarId(1)), (8, 50));
        assert!(s.entails(gt));
        assert_eq!(gt.negated().side, Side::LessEq);
    }

    #[test]
    fn wipeout_is_reported() {
        let mut s = three_var_store();
        s.tighten_min(VarId(0), 40);
        assert_eq!(s.tighten_max(VarId(0), 30), Tighten::Wipeout);
        assert!(s.is_wiped(VarId(0)));
    }

    proptest! {
        // Random tighten sequences under nested checkpoints always restore
        // bit-exactly, and bounds never widen while a checkpoint is live.
        #[test]
        fn trail_round_trip(ops in proptest::collection::vec((0u32..3, 0i64..60, any::<bool>()), 0..40)) {
            let mut s = three_var_store();
            let snapshot: Vec<_> = (0..3).map(|i| s.window(VarId(i))).collect();
            let mark = s.checkpoint();
            for (v, val, lower) in ops {
                let before = s.window(VarId(v));
                if lower {
                    s.tighten_min(VarId(v), val);
                } else {
                    s.tighten_max(VarId(v), val);
                }
                let after = s.window(VarId(v));
                prop_assert!(after.0 >= before.0 && after.1 <= before.1);
            }
            s.restore(mark);
            let restored: Vec<_> = (0..3).map(|i| s.window(VarId(i))).collect();
            prop_assert_eq!(snapshot, restored);
        }
    }
}
