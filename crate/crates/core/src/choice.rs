//! The pool of domain-split choices.
//!
//! A choice is a `(variable, pivot)` pair splitting the start window into
//! `start <= pivot` and `start > pivot`. Each side carries a rating in
//! `[0, 2]` and a play counter. The lower-rated side is kept in the left
//! (first-explored) position by [`Choice::rotate_branches`]. Choices whose
//! pivot no longer splits the current window are *decided*; they stay in
//! the pool and are skipped at selection time, which makes the put-aside
//! reversible for free.

use std::collections::HashMap;

use crate::domain::{DomainStore, Literal, Side};
use crate::model::{Model, Time, VarId};

/// Index of a choice within its pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChoiceId(pub u32);

impl ChoiceId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Positional branch slot. Left is explored first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pos {
    Left,
    Right,
}

impl Pos {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Pos::Left => 0,
            Pos::Right => 1,
        }
    }

    #[inline]
    pub fn sibling(self) -> Pos {
        match self {
            Pos::Left => Pos::Right,
            Pos::Right => Pos::Left,
        }
    }
}

/// Whether one side of a choice is already implied by the current bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecidedStatus {
    /// `start <= pivot` already holds.
    LessEqTrue,
    /// `start > pivot` already holds.
    GreaterTrue,
    Undecided,
}

/// A rated binary domain split.
#[derive(Debug, Clone)]
pub struct Choice {
    pub var: VarId,
    pub pivot: Time,
    /// Ratings by position; `ratings[0]` is the left (first-explored) slot.
    pub ratings: [f64; 2],
    /// Update counters by position, capped at RatingAverageLength.
    pub counts: [u32; 2],
    /// Which semantic side currently sits in each position.
    pub sides: [Side; 2],
}

impl Choice {
    fn new(var: VarId, pivot: Time, initial_rating: f64) -> Self {
        Choice {
            var,
            pivot,
            ratings: [initial_rating; 2],
            counts: [0; 2],
            sides: [Side::LessEq, Side::Greater],
        }
    }

    /// Summed rating of both branches; lower is better.
    #[inline]
    pub fn rating(&self) -> f64 {
        self.ratings[0] + self.ratings[1]
    }

    /// The ground literal for a positional slot.
    #[inline]
    pub fn literal(&self, pos: Pos) -> Literal {
        Literal {
            var: self.var,
            pivot: self.pivot,
            side: self.sides[pos.index()],
        }
    }

    /// Puts the lower-rated branch in the left slot. Ties do not swap.
    pub fn rotate_branches(&mut self) {
        if self.ratings[1] < self.ratings[0] {
            self.ratings.swap(0, 1);
            self.counts.swap(0, 1);
            self.sides.swap(0, 1);
        }
    }

    /// Pure function of the pivot and the current bounds.
    pub fn decided_status(&self, store: &DomainStore) -> DecidedStatus {
        if store.start_max(self.var) <= self.pivot {
            DecidedStatus::LessEqTrue
        } else if store.start_min(self.var) > self.pivot {
            DecidedStatus::GreaterTrue
        } else {
            DecidedStatus::Undecided
        }
    }

    /// Rating, count and position of a semantic side, for serialization.
    pub fn side_state(&self, side: Side) -> (f64, u32) {
        let i = if self.sides[0] == side { 0 } else { 1 };
        (self.ratings[i], self.counts[i])
    }
}

/// Owns every choice of a run. Choices on the branch stack are marked in
/// use; everything else is available to selection.
#[derive(Debug, Clone, Default)]
pub struct ChoicePool {
    choices: Vec<Choice>,
    by_key: HashMap<(VarId, Time), ChoiceId>,
    in_use: Vec<bool>,
}

impl ChoicePool {
    #[inline]
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    #[inline]
    pub fn get(&self, id: ChoiceId) -> &Choice {
        &self.choices[id.index()]
    }

    #[inline]
    pub fn get_mut(&mut self, id: ChoiceId) -> &mut Choice {
        &mut self.choices[id.index()]
    }

    #[inline]
    pub fn lookup(&self, var: VarId, pivot: Time) -> Option<ChoiceId> {
        self.by_key.get(&(var, pivot)).copied()
    }

    pub fn mark_in_use(&mut self, id: ChoiceId) {
        debug_assert!(!self.in_use[id.index()]);
        self.in_use[id.index()] = true;
    }

    pub fn return_to_pool(&mut self, id: ChoiceId) {
        debug_assert!(self.in_use[id.index()]);
        self.in_use[id.index()] = false;
    }

    #[inline]
    pub fn is_in_use(&self, id: ChoiceId) -> bool {
        self.in_use[id.index()]
    }

    /// Ids of choices that are available and still split the current window.
    pub fn undecided_available(&self, store: &DomainStore) -> Vec<ChoiceId> {
        self.choices
            .iter()
            .enumerate()
            .filter(|(i, c)| {
                !self.in_use[*i] && c.decided_status(store) == DecidedStatus::Undecided
            })
            .map(|(i, _)| ChoiceId(i as u32))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Choice> {
        self.choices.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Choice> {
        self.choices.iter_mut()
    }

    /// Inserts a choice unless its `(var, pivot)` identity already exists.
    pub fn insert(&mut self, var: VarId, pivot: Time, initial_rating: f64) -> bool {
        if self.by_key.contains_key(&(var, pivot)) {
            return false;
        }
        let id = ChoiceId(self.choices.len() as u32);
        self.by_key.insert((var, pivot), id);
        self.choices.push(Choice::new(var, pivot, initial_rating));
        self.in_use.push(false);
        true
    }
}

/// Parameters of initial choice generation.
#[derive(Debug, Clone, Copy)]
pub struct GenerationConfig {
    /// Pivot spacing relative to activity length.
    pub length_step_ratio: f64,
    /// Share one step computed from the mean length instead of per-variable
    /// steps.
    pub uniform_choice_step: bool,
    pub max_initial_choices_per_variable: u32,
    pub initial_rating: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            length_step_ratio: 0.7,
            uniform_choice_step: true,
            max_initial_choices_per_variable: 20,
            initial_rating: 0.3,
        }
    }
}

fn round_half_away(x: f64) -> Time {
    x.round() as Time
}

/// Builds the initial pool from the step and pivot formulas. With a zero
/// step (all lengths zero) it falls back to one midpoint pivot per
/// non-singleton variable.
pub fn generate_initial_choices(model: &Model, cfg: &GenerationConfig) -> ChoicePool {
    assert!(cfg.length_step_ratio > 0.0, "LengthStepRatio must be > 0");
    let mut pool = ChoicePool::default();
    let n = model.num_vars();
    if n == 0 {
        return pool;
    }
    let mean_len =
        model.variables().iter().map(|v| v.length as f64).sum::<f64>() / n as f64;
    let uniform_step = cfg.length_step_ratio * mean_len;

    for v in model.variables() {
        let step = if cfg.uniform_choice_step {
            uniform_step
        } else {
            cfg.length_step_ratio * v.length as f64
        };
        let (lo, hi) = (v.start_min, v.start_max);
        if step <= 0.0 {
            if lo < hi {
                let mid = lo + (hi - lo) / 2;
                pool.insert(v.id, mid, cfg.initial_rating);
            }
            continue;
        }
        let span = (hi - lo) as f64;
        let count = (span / step).floor() as i64;
        let mut emitted = 0;
        for i in 1..=count {
            if emitted >= cfg.max_initial_choices_per_variable {
                break;
            }
            let p = round_half_away(lo as f64 + i as f64 * step);
            // Keep both branches non-empty at generation time.
            if p >= lo && p < hi && pool.insert(v.id, p, cfg.initial_rating) {
                emitted += 1;
            }
        }
    }
    pool
}

/// Splits the remaining window of every unfixed variable into up to five
/// evenly spaced pivots. Called when every pool choice is decided but the
/// node is still feasible; returns the ids of the added choices.
pub fn generate_more_choices(
    pool: &mut ChoicePool,
    store: &DomainStore,
    initial_rating: f64,
) -> Vec<ChoiceId> {
    let mut added = Vec::new();
    for i in 0..store.num_vars() {
        let v = VarId(i as u32);
        let (lo, hi) = store.window(v);
        if lo >= hi {
            continue;
        }
        let mut pivots = Vec::with_capacity(5);
        for k in 1..=5 {
            let p = round_half_away(lo as f64 + k as f64 * (hi - lo) as f64 / 6.0);
            if p > lo && p < hi && !pivots.contains(&p) {
                pivots.push(p);
            }
        }
        // A two-value window has no interior pivot; split at the low end.
        if pivots.is_empty() {
            pivots.push(lo);
        }
        for p in pivots {
            if pool.insert(v, p, initial_rating) {
                added.push(ChoiceId((pool.len() - 1) as u32));
            }
        }
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;

    fn model_with_windows(windows: &[(Time, Time, Time)]) -> Model {
        let mut b = ModelBuilder::new();
        for &(lo, hi, len) in windows {
            b.new_interval(lo, hi, len).unwrap();
        }
        b.build()
    }

    #[test]
    fn uniform_step_uses_mean_length() {
        // lengths {8, 12}, ratio 0.5 -> step 5
        let m = model_with_windows(&[(0, 20, 8), (0, 20, 12)]);
        let cfg = GenerationConfig {
            length_step_ratio: 0.5,
            ..Default::default()
        };
        let pool = generate_initial_choices(&m, &cfg);
        let pivots: Vec<Time> = pool
            .iter()
            .filter(|c| c.var == VarId(0))
            .map(|c| c.pivot)
            .collect();
        assert_eq!(pivots, vec![5, 10, 15]);
    }

    #[test]
    fn pivot_formula_on_window_0_20_step_7() {
        let m = model_with_windows(&[(0, 20, 7)]);
        let cfg = GenerationConfig {
            length_step_ratio: 1.0,
            uniform_choice_step: false,
            ..Default::default()
        };
        let pool = generate_initial_choices(&m, &cfg);
        let pivots: Vec<Time> = pool.iter().map(|c| c.pivot).collect();
        assert_eq!(pivots, vec![7, 14]);
    }

    #[test]
    fn default_ratio_is_0_7() {
        assert_eq!(GenerationConfig::default().length_step_ratio, 0.7);
    }

    #[test]
    fn zero_lengths_fall_back_to_midpoints() {
        let m = model_with_windows(&[(0, 10, 0), (4, 4, 0)]);
        let pool = generate_initial_choices(&m, &GenerationConfig::default());
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.get(ChoiceId(0)).pivot, 5);
    }

    #[test]
    fn generation_respects_per_variable_cap() {
        let m = model_with_windows(&[(0, 1000, 2)]);
        let cfg = GenerationConfig {
            length_step_ratio: 1.0,
            uniform_choice_step: false,
            max_initial_choices_per_variable: 20,
            ..Default::default()
        };
        let pool = generate_initial_choices(&m, &cfg);
        assert_eq!(pool.len(), 20);
    }

    #[test]
    fn generated_pivots_split_the_window() {
        let m = model_with_windows(&[(3, 17, 4), (0, 2, 1), (5, 5, 2)]);
        let pool = generate_initial_choices(&m, &GenerationConfig::default());
        let mvars = m.variables();
        for c in pool.iter() {
            let v = &mvars[c.var.index()];
            assert!(c.pivot >= v.start_min && c.pivot < v.start_max);
        }
        // Singleton windows get no choices.
        assert!(pool.iter().all(|c| c.var != VarId(2)));
    }

    #[test]
    fn more_choices_five_even_splits() {
        let m = model_with_windows(&[(4, 16, 1)]);
        let mut pool = ChoicePool::default();
        let store = DomainStore::new(&m);
        generate_more_choices(&mut pool, &store, 0.3);
        let pivots: Vec<Time> = pool.iter().map(|c| c.pivot).collect();
        assert_eq!(pivots, vec![6, 8, 10, 12, 14]);
    }

    #[test]
    fn more_choices_small_window() {
        let m = model_with_windows(&[(4, 6, 1)]);
        let mut pool = ChoicePool::default();
        let store = DomainStore::new(&m);
        generate_more_choices(&mut pool, &store, 0.3);
        let pivots: Vec<Time> = pool.iter().map(|c| c.pivot).collect();
        assert_eq!(pivots, vec![5]);
    }

    #[test]
    fn more_choices_two_value_window_splits_low() {
        let m = model_with_windows(&[(4, 5, 1)]);
        let mut pool = ChoicePool::default();
        let store = DomainStore::new(&m);
        generate_more_choices(&mut pool, &store, 0.3);
        let pivots: Vec<Time> = pool.iter().map(|c| c.pivot).collect();
        assert_eq!(pivots, vec![4]);
    }

    #[test]
    fn more_choices_all_fixed_is_empty() {
        let m = model_with_windows(&[(4, 4, 1), (9, 9, 2)]);
        let mut pool = ChoicePool::default();
        let store = DomainStore::new(&m);
        let added = generate_more_choices(&mut pool, &store, 0.3);
        assert!(added.is_empty());
    }

    #[test]
    fn decided_status_cases() {
        let m = model_with_windows(&[(1, 4, 1)]);
        let store = DomainStore::new(&m);
        let le = Choice::new(VarId(0), 5, 0.3);
        assert_eq!(le.decided_status(&store), DecidedStatus::LessEqTrue);

        let m2 = model_with_windows(&[(6, 9, 1)]);
        let store2 = DomainStore::new(&m2);
        let gt = Choice::new(VarId(0), 5, 0.3);
        assert_eq!(gt.decided_status(&store2), DecidedStatus::GreaterTrue);

        let m3 = model_with_windows(&[(3, 8, 1)]);
        let store3 = DomainStore::new(&m3);
        let und = Choice::new(VarId(0), 5, 0.3);
        assert_eq!(und.decided_status(&store3), DecidedStatus::Undecided);
    }

    #[test]
    fn rotation_swaps_only_when_right_is_lower() {
        let mut c = Choice::new(VarId(0), 5, 0.3);
        c.ratings = [0.9, 0.4];
        c.counts = [3, 7];
        c.rotate_branches();
        assert_eq!(c.ratings, [0.4, 0.9]);
        assert_eq!(c.counts, [7, 3]);
        assert_eq!(c.sides, [Side::Greater, Side::LessEq]);
        assert_eq!(c.literal(Pos::Left).side, Side::Greater);

        let mut c2 = Choice::new(VarId(0), 5, 0.3);
        c2.ratings = [0.4, 0.9];
        c2.rotate_branches();
        assert_eq!(c2.ratings, [0.4, 0.9]);
        assert_eq!(c2.sides, [Side::LessEq, Side::Greater]);

        // Equal ratings: stable, no swap.
        let mut c3 = Choice::new(VarId(0), 5, 0.3);
        c3.ratings = [0.5, 0.5];
        c3.sides = [Side::LessEq, Side::Greater];
        c3.rotate_branches();
        assert_eq!(c3.sides, [Side::LessEq, Side::Greater]);
    }

    #[test]
    fn rotated_choice_keeps_left_le_right() {
        let mut c = Choice::new(VarId(0), 5, 0.3);
        for (l, r) in [(1.4, 0.2), (0.0, 2.0), (1.0, 1.0)] {
            c.ratings = [l, r];
            c.rotate_branches();
            assert!(c.ratings[0] <= c.ratings[1]);
        }
    }

    #[test]
    fn pool_identity_is_unique() {
        let mut pool = ChoicePool::default();
        assert!(pool.insert(VarId(0), 5, 0.3));
        assert!(!pool.insert(VarId(0), 5, 0.3));
        assert!(pool.insert(VarId(0), 6, 0.3));
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.lookup(VarId(0), 5), Some(ChoiceId(0)));
    }
}
