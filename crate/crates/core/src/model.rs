//! Declarative scheduling model: interval variables with bounded start
//! windows, the supported constraint kinds, and the makespan cap.
//!
//! A [`Model`] is immutable once built and can be shared read-only by any
//! number of concurrently running solver instances.

use thiserror::Error;

/// Integer time point or duration.
pub type Time = i64;

/// Dense index of an interval variable within its model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for VarId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// An activity with a start window and a fixed length.
///
/// `start_min <= start_max` holds at all times; the length never changes
/// after creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalVar {
    pub id: VarId,
    pub start_min: Time,
    pub start_max: Time,
    pub length: Time,
}

impl IntervalVar {
    /// Earliest possible end of the activity.
    #[inline]
    pub fn end_min(&self) -> Time {
        self.start_min + self.length
    }
}

/// A scheduling constraint over interval variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    /// `end(before) + delay <= start(after)`.
    Precedence {
        before: VarId,
        after: VarId,
        delay: Time,
    },
    /// Pairwise non-overlap of the execution intervals of `vars`.
    NoOverlap { vars: Vec<VarId> },
    /// At every time point the demands of executing activities sum to at
    /// most `capacity`.
    Cumulative {
        vars: Vec<VarId>,
        demands: Vec<i64>,
        capacity: i64,
    },
}

/// Errors raised while building a model.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("inverted start window [{start_min}, {start_max}]")]
    InvertedWindow { start_min: Time, start_max: Time },
    #[error("negative length {0}")]
    NegativeLength(Time),
    #[error("unknown variable {0}")]
    UnknownVariable(VarId),
    #[error("variable {0} referenced twice in one constraint")]
    DuplicateVariable(VarId),
    #[error("self-precedence on {0}")]
    SelfPrecedence(VarId),
    #[error("no-overlap needs at least 2 distinct variables, got {0}")]
    NoOverlapTooSmall(usize),
    #[error("cumulative arity mismatch: {vars} variables, {demands} demands")]
    CumulativeArity { vars: usize, demands: usize },
    #[error("demand {demand} of {var} outside [1, {capacity}]")]
    BadDemand {
        var: VarId,
        demand: i64,
        capacity: i64,
    },
}

/// Mutable builder; [`ModelBuilder::build`] freezes it into a [`Model`].
#[derive(Debug, Default, Clone)]
pub struct ModelBuilder {
    variables: Vec<IntervalVar>,
    constraints: Vec<Constraint>,
    objective_cap: Option<Time>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a fresh interval variable and returns its dense id.
    pub fn new_interval(
        &mut self,
        start_min: Time,
        start_max: Time,
        length: Time,
    ) -> Result<VarId, ModelError> {
        if start_min > start_max {
            return Err(ModelError::InvertedWindow {
                start_min,
                start_max,
            });
        }
        if length < 0 {
            return Err(ModelError::NegativeLength(length));
        }
        let id = VarId(self.variables.len() as u32);
        self.variables.push(IntervalVar {
            id,
            start_min,
            start_max,
            length,
        });
        Ok(id)
    }

    fn check_var(&self, v: VarId) -> Result<(), ModelError> {
        if v.index() < self.variables.len() {
            Ok(())
        } else {
            Err(ModelError::UnknownVariable(v))
        }
    }

    /// Records `end(a) + delay <= start(b)`.
    pub fn add_precedence(&mut self, a: VarId, b: VarId, delay: Time) -> Result<(), ModelError> {
        self.check_var(a)?;
        self.check_var(b)?;
        if a == b {
            return Err(ModelError::SelfPrecedence(a));
        }
        self.constraints.push(Constraint::Precedence {
            before: a,
            after: b,
            delay,
        });
        Ok(())
    }

    /// Records pairwise non-overlap over `vars`.
    pub fn add_no_overlap(&mut self, vars: Vec<VarId>) -> Result<(), ModelError> {
        if vars.len() < 2 {
            return Err(ModelError::NoOverlapTooSmall(vars.len()));
        }
        let mut seen = vec![false; self.variables.len()];
        for &v in &vars {
            self.check_var(v)?;
            if seen[v.index()] {
                return Err(ModelError::DuplicateVariable(v));
            }
            seen[v.index()] = true;
        }
        self.constraints.push(Constraint::NoOverlap { vars });
        Ok(())
    }

    /// Records a cumulative resource with the given capacity.
    pub fn add_cumulative(
        &mut self,
        vars: Vec<VarId>,
        demands: Vec<i64>,
        capacity: i64,
    ) -> Result<(), ModelError> {
        if vars.len() != demands.len() {
            return Err(ModelError::CumulativeArity {
                vars: vars.len(),
                demands: demands.len(),
            });
        }
        let mut seen = vec![false; self.variables.len()];
        for (&v, &d) in vars.iter().zip(&demands) {
            self.check_var(v)?;
            if seen[v.index()] {
                return Err(ModelError::DuplicateVariable(v));
            }
            seen[v.index()] = true;
            if d < 1 || d > capacity {
                return Err(ModelError::BadDemand {
                    var: v,
                    demand: d,
                    capacity,
                });
            }
        }
        self.constraints.push(Constraint::Cumulative {
            vars,
            demands,
            capacity,
        });
        Ok(())
    }

    /// Caps the makespan: every variable's `start_max` is lowered so that
    /// `start + length <= bound`. A tighter bound replaces a weaker one.
    pub fn limit_objective(&mut self, bound: Time) {
        match self.objective_cap {
            Some(existing) if existing <= bound => {}
            _ => self.objective_cap = Some(bound),
        }
        for v in &mut self.variables {
            let cap = bound - v.length;
            if v.start_max > cap {
                v.start_max = cap;
            }
        }
    }

    /// Freezes the builder. Over-tight objective caps are legal here; they
    /// surface as `Fail` during propagation.
    pub fn build(self) -> Model {
        Model {
            variables: self.variables,
            constraints: self.constraints,
            objective_cap: self.objective_cap,
        }
    }
}

/// An immutable scheduling problem. The objective is the makespan
/// `max(start + length)` over all variables.
#[derive(Debug, Clone)]
pub struct Model {
    variables: Vec<IntervalVar>,
    constraints: Vec<Constraint>,
    objective_cap: Option<Time>,
}

impl Model {
    #[inline]
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    #[inline]
    pub fn var(&self, v: VarId) -> &IntervalVar {
        &self.variables[v.index()]
    }

    #[inline]
    pub fn variables(&self) -> &[IntervalVar] {
        &self.variables
    }

    #[inline]
    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// The makespan cap applied at build time, if any.
    #[inline]
    pub fn objective_cap(&self) -> Option<Time> {
        self.objective_cap
    }

    /// Makespan of a full start assignment (indexed by variable).
    pub fn makespan(&self, starts: &[Time]) -> Time {
        self.variables
            .iter()
            .map(|v| starts[v.id.index()] + v.length)
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_interval_assigns_dense_ids() {
        let mut b = ModelBuilder::new();
        let v = b.new_interval(0, 100, 5).unwrap();
        assert_eq!(v, VarId(0));
        let m = b.build();
        assert_eq!(m.var(v).start_min, 0);
        assert_eq!(m.var(v).start_max, 100);
        assert_eq!(m.var(v).length, 5);
    }

    #[test]
    fn new_interval_accepts_degenerate_window() {
        let mut b = ModelBuilder::new();
        let v = b.new_interval(7, 7, 0).unwrap();
        let m = b.build();
        assert_eq!((m.var(v).start_min, m.var(v).start_max), (7, 7));
        assert_eq!(m.var(v).length, 0);
    }

    #[test]
    fn new_interval_rejects_inverted_window() {
        let mut b = ModelBuilder::new();
        assert_eq!(
            b.new_interval(10, 3, 5),
            Err(ModelError::InvertedWindow {
                start_min: 10,
                start_max: 3
            })
        );
    }

    #[test]
    fn precedence_rejects_self_loop() {
        let mut b = ModelBuilder::new();
        let a = b.new_interval(0, 10, 3).unwrap();
        assert_eq!(b.add_precedence(a, a, 0), Err(ModelError::SelfPrecedence(a)));
    }

    #[test]
    fn precedence_rejects_unknown_id() {
        let mut b = ModelBuilder::new();
        let a = b.new_interval(0, 10, 3).unwrap();
        assert_eq!(
            b.add_precedence(a, VarId(9), 0),
            Err(ModelError::UnknownVariable(VarId(9)))
        );
    }

    #[test]
    fn no_overlap_needs_two_vars() {
        let mut b = ModelBuilder::new();
        let a = b.new_interval(0, 10, 3).unwrap();
        assert_eq!(
            b.add_no_overlap(vec![a]),
            Err(ModelError::NoOverlapTooSmall(1))
        );
        assert_eq!(
            b.add_no_overlap(vec![a, a]),
            Err(ModelError::DuplicateVariable(a))
        );
    }

    #[test]
    fn cumulative_rejects_oversized_demand() {
        let mut b = ModelBuilder::new();
        let a = b.new_interval(0, 10, 3).unwrap();
        let c = b.new_interval(0, 10, 3).unwrap();
        assert_eq!(
            b.add_cumulative(vec![a, c], vec![3, 1], 2),
            Err(ModelError::BadDemand {
                var: a,
                demand: 3,
                capacity: 2
            })
        );
    }

    #[test]
    fn limit_objective_caps_start_max() {
        let mut b = ModelBuilder::new();
        let v = b.new_interval(0, 100, 5).unwrap();
        b.limit_objective(20);
        let m = b.build();
        assert_eq!(m.var(v).start_max, 15);
        assert_eq!(m.objective_cap(), Some(20));
    }

    #[test]
    fn limit_objective_ignores_weaker_bound() {
        let mut b = ModelBuilder::new();
        let v = b.new_interval(0, 10, 5).unwrap();
        b.limit_objective(200);
        let m = b.clone().build();
        assert_eq!(m.var(v).start_max, 10);

        // Monotone: tightening after a weaker cap equals tightening alone.
        let mut b2 = b.clone();
        b2.limit_objective(8);
        let mut b3 = ModelBuilder::new();
        b3.new_interval(0, 10, 5).unwrap();
        b3.limit_objective(8);
        assert_eq!(b2.build().var(v).start_max, b3.build().var(v).start_max);
    }

    #[test]
    fn over_tight_cap_is_recorded_not_rejected() {
        let mut b = ModelBuilder::new();
        let v = b.new_interval(0, 10, 5).unwrap();
        b.limit_objective(4);
        let m = b.build();
        // start_max < start_min: propagation will report Fail.
        assert!(m.var(v).start_max < m.var(v).start_min);
    }
}
