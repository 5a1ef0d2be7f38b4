//! The failure-directed tree search: expansion, backtracking, geometric
//! restarts with nogood recording, strong branching near the root, choice
//! rollback for exploratory picks, and the set-times fallback that turns
//! exhausted choice pools into solutions or finer splits.
//!
//! A run is strictly single-threaded and owns all mutable state; the model
//! it searches is shared read-only.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::choice::{generate_initial_choices, generate_more_choices, ChoiceId, ChoicePool, GenerationConfig, Pos};
use crate::domain::{DomainStore, Literal, Mark, Side};
use crate::model::{Model, Time, VarId};
use crate::propagation::{local_rating, propagate, Nogood, PropagationOutcome};
use crate::rating::{
    apply_both_fail_bonus, export_ratings, greedy_pick, import_ratings, select_choice,
    update_branch_rating, DepthAverages, ImportStats, RatingTable, StrategyConfig,
};

/// Which probe ratings strong branching minimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbCriterion {
    Left,
    Right,
    Both,
}

impl SbCriterion {
    pub fn name(self) -> &'static str {
        match self {
            SbCriterion::Left => "left",
            SbCriterion::Right => "right",
            SbCriterion::Both => "both",
        }
    }
}

impl std::str::FromStr for SbCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(SbCriterion::Left),
            "right" => Ok(SbCriterion::Right),
            "both" => Ok(SbCriterion::Both),
            other => Err(format!("unknown strong-branching criterion '{other}'")),
        }
    }
}

/// Engine-level parameters: restarts, nogoods, strong branching, choice
/// generation and the sFDS rating variant.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub initial_restart_limit: f64,
    pub restart_growth_factor: f64,
    pub restarts_enabled: bool,
    pub use_nogoods: bool,
    pub strong_branching_size: u32,
    pub strong_branching_depth: u32,
    pub strong_branching_criterion: SbCriterion,
    /// Cap on branch counters applied at each restart.
    pub max_counter_after_restart: Option<u32>,
    /// Cap on branch counters applied when a solution is found.
    pub max_counter_after_solution: Option<u32>,
    pub reset_restarts_after_solution: bool,
    pub length_step_ratio: f64,
    pub uniform_choice_step: bool,
    pub max_initial_choices_per_variable: u32,
    /// Score non-failing branches 1 instead of `1 + 0.5^n`.
    pub sfds_mode: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            initial_restart_limit: 100.0,
            restart_growth_factor: 1.15,
            restarts_enabled: true,
            use_nogoods: true,
            strong_branching_size: 8,
            strong_branching_depth: 4,
            strong_branching_criterion: SbCriterion::Left,
            max_counter_after_restart: None,
            max_counter_after_solution: None,
            reset_restarts_after_solution: false,
            length_step_ratio: 0.7,
            uniform_choice_step: true,
            max_initial_choices_per_variable: 20,
            sfds_mode: false,
        }
    }
}

impl EngineConfig {
    fn generation(&self, initial_rating: f64) -> GenerationConfig {
        GenerationConfig {
            length_step_ratio: self.length_step_ratio,
            uniform_choice_step: self.uniform_choice_step,
            max_initial_choices_per_variable: self.max_initial_choices_per_variable,
            initial_rating,
        }
    }
}

/// Run budgets. A complete search terminates on its own, so both limits are
/// optional; harness protocols always set at least one.
#[derive(Debug, Clone, Copy, Default)]
pub struct Limits {
    pub time_limit: Option<Duration>,
    pub branch_limit: Option<u64>,
}

impl Limits {
    pub fn none() -> Self {
        Limits::default()
    }

    pub fn branches(n: u64) -> Self {
        Limits {
            branch_limit: Some(n),
            ..Default::default()
        }
    }

    pub fn time(d: Duration) -> Self {
        Limits {
            time_limit: Some(d),
            ..Default::default()
        }
    }
}

/// Verdict of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The whole search space under the objective cap was exhausted.
    Infeasible,
    /// A solution with this makespan was found and everything strictly
    /// better was refuted.
    SolutionFound(Time),
    LimitReached,
}

/// Outcome and statistics of one run.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Branch literals propagated in the tree (left pushes and right
    /// re-expansions; probes not included).
    pub branches: u64,
    pub fails: u64,
    pub restarts: u64,
    /// Exploratory picks abandoned after probing.
    pub rollbacks: u64,
    pub exploratory_selections: u64,
    pub strong_branching_probes: u64,
    pub nogoods_recorded: u64,
    pub best_objective: Option<Time>,
    /// Smallest makespan not yet refuted: the optimum when proven, cap + 1
    /// after an infeasibility proof.
    pub proven_bound: Option<Time>,
    pub elapsed: Duration,
    /// Fail counts observed at each restart, in order.
    pub restart_fail_counts: Vec<u64>,
}

impl SolveResult {
    /// Share of exploratory selections that were rolled back.
    pub fn rollback_rate(&self) -> Option<f64> {
        if self.exploratory_selections == 0 {
            None
        } else {
            Some(self.rollbacks as f64 / self.exploratory_selections as f64)
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct StackEntry {
    choice: ChoiceId,
    pos: Pos,
    mark: Mark,
    /// The pushed branch's own propagation failed.
    failed: bool,
    /// Both-fail bonus already granted by rollback probing at this node.
    bonus_done: bool,
}

#[derive(Debug, Default)]
struct Counters {
    branches: u64,
    fails: u64,
    restarts: u64,
    rollbacks: u64,
    exploratory: u64,
    sb_probes: u64,
    nogoods: u64,
    restart_fail_counts: Vec<u64>,
}

enum ExhaustedOutcome {
    /// Finer splits were added; expansion continues.
    NewChoices,
    /// The node failed (possibly after objective tightening).
    NodeFailed,
}

enum RollbackOutcome {
    Committed { both_failed: bool },
    RolledBack,
}

/// One solver run over a shared model. Construct, optionally seed ratings,
/// then [`Solver::run`].
pub struct Solver<'m> {
    model: &'m Model,
    strategy: StrategyConfig,
    engine: EngineConfig,
    store: DomainStore,
    pool: ChoicePool,
    stack: Vec<StackEntry>,
    nogoods: Vec<Nogood>,
    averages: DepthAverages,
    rng: ChaCha8Rng,
    epsilon: f64,
    fail_limit: f64,
    fail_count: u64,
    selections: u64,
    dynamic_cap: Option<Time>,
    best_objective: Option<Time>,
    counters: Counters,
    limits: Limits,
    started: Instant,
}

/// Runs one search to completion or budget exhaustion.
pub fn solve(
    model: &Model,
    strategy: &StrategyConfig,
    engine: &EngineConfig,
    seed: u64,
    limits: &Limits,
) -> SolveResult {
    Solver::new(model, strategy.clone(), engine.clone(), seed).run(limits)
}

impl<'m> Solver<'m> {
    pub fn new(model: &'m Model, strategy: StrategyConfig, engine: EngineConfig, seed: u64) -> Self {
        let pool = generate_initial_choices(model, &engine.generation(strategy.initial_rating));
        let epsilon = strategy.epsilon;
        let fail_limit = engine.initial_restart_limit;
        Solver {
            model,
            strategy,
            engine,
            store: DomainStore::new(model),
            pool,
            stack: Vec::new(),
            nogoods: Vec::new(),
            averages: DepthAverages::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            epsilon,
            fail_limit,
            fail_count: 0,
            selections: 0,
            dynamic_cap: None,
            best_objective: None,
            counters: Counters::default(),
            limits: Limits::none(),
            started: Instant::now(),
        }
    }

    /// Overlays previously learned ratings onto the fresh pool.
    pub fn import_ratings(&mut self, table: &RatingTable) -> ImportStats {
        import_ratings(&mut self.pool, table)
    }

    /// Snapshot of the current ratings, e.g. for carryover into a new run.
    pub fn export_ratings(&self) -> RatingTable {
        export_ratings(&self.pool)
    }

    pub fn run(&mut self, limits: &Limits) -> SolveResult {
        self.limits = *limits;
        self.started = Instant::now();
        if self.budget_exhausted() {
            return self.finish(SolveStatus::LimitReached);
        }
        if self.node_propagate(None).is_fail() {
            return self.finish_verdict();
        }
        'search: loop {
            // Tree expansion; leaving the loop means the current node failed.
            'expansion: loop {
                if self.budget_exhausted() {
                    return self.finish(SolveStatus::LimitReached);
                }
                let depth = self.stack.len() as u32;
                let use_sb = self.engine.strong_branching_size > 0
                    && depth <= self.engine.strong_branching_depth;
                let picked = if use_sb {
                    self.strong_branching_select().map(|id| (id, false))
                } else {
                    let t = self.selections;
                    let picked = select_choice(
                        &self.pool,
                        &self.store,
                        t,
                        &mut self.rng,
                        &self.strategy,
                        self.epsilon,
                    );
                    if picked.is_some() {
                        self.selections += 1;
                    }
                    picked
                };
                let (mut chosen, exploratory) = match picked {
                    Some(p) => p,
                    None => match self.exhausted_path() {
                        ExhaustedOutcome::NewChoices => continue 'expansion,
                        ExhaustedOutcome::NodeFailed => break 'expansion,
                    },
                };
                if exploratory {
                    self.counters.exploratory += 1;
                }
                let mut bonus_done = false;
                if exploratory && self.strategy.rollback {
                    match self.explore_with_rollback(chosen) {
                        RollbackOutcome::Committed { both_failed } => bonus_done = both_failed,
                        RollbackOutcome::RolledBack => {
                            self.counters.rollbacks += 1;
                            let ids = self.pool.undecided_available(&self.store);
                            chosen = greedy_pick(&self.pool, &ids, &mut self.rng);
                        }
                    }
                }
                if !self.branch_on(chosen, bonus_done) {
                    break 'expansion;
                }
            }
            self.fail_count += 1;
            self.counters.fails += 1;

            // Backtracking, possibly through a restart.
            loop {
                if self.restart_due() {
                    if !self.do_restart() {
                        return self.finish_verdict();
                    }
                    continue 'search;
                }
                let entry = match self.stack.pop() {
                    None => return self.finish_verdict(),
                    Some(e) => e,
                };
                self.store.restore(entry.mark);
                if entry.pos == Pos::Right {
                    self.pool.return_to_pool(entry.choice);
                    continue;
                }
                if self.budget_exhausted() {
                    return self.finish(SolveStatus::LimitReached);
                }
                // Re-expand the right side of the popped choice.
                let depth = self.stack.len();
                let right = self.pool.get(entry.choice).literal(Pos::Right);
                let mark = self.store.checkpoint();
                let outcome = self.node_propagate(Some(right));
                self.counters.branches += 1;
                let lr = local_rating(outcome, self.engine.sfds_mode);
                update_branch_rating(
                    self.pool.get_mut(entry.choice),
                    Pos::Right,
                    lr,
                    depth,
                    &self.strategy,
                    &mut self.averages,
                );
                if !outcome.is_fail() {
                    self.stack.push(StackEntry {
                        choice: entry.choice,
                        pos: Pos::Right,
                        mark,
                        failed: false,
                        bonus_done: false,
                    });
                    continue 'search;
                }
                self.store.restore(mark);
                self.fail_count += 1;
                self.counters.fails += 1;
                if entry.failed && !entry.bonus_done {
                    apply_both_fail_bonus(self.pool.get_mut(entry.choice), &self.strategy);
                }
                self.pool.return_to_pool(entry.choice);
            }
        }
    }

    fn node_propagate(&mut self, branch: Option<Literal>) -> PropagationOutcome {
        let nogoods: &[Nogood] = if self.engine.use_nogoods {
            &self.nogoods
        } else {
            &[]
        };
        propagate(&mut self.store, self.model, self.dynamic_cap, nogoods, branch)
    }

    /// Rotates, propagates the left branch, rates it and pushes it.
    /// Returns false when the branch failed.
    fn branch_on(&mut self, id: ChoiceId, bonus_done: bool) -> bool {
        self.pool.mark_in_use(id);
        let choice = self.pool.get_mut(id);
        choice.rotate_branches();
        debug_assert!(choice.ratings[0] <= choice.ratings[1]);
        let left = choice.literal(Pos::Left);
        let depth = self.stack.len();
        let mark = self.store.checkpoint();
        let outcome = self.node_propagate(Some(left));
        self.counters.branches += 1;
        let lr = local_rating(outcome, self.engine.sfds_mode);
        update_branch_rating(
            self.pool.get_mut(id),
            Pos::Left,
            lr,
            depth,
            &self.strategy,
            &mut self.averages,
        );
        self.stack.push(StackEntry {
            choice: id,
            pos: Pos::Left,
            mark,
            failed: outcome.is_fail(),
            bonus_done,
        });
        !outcome.is_fail()
    }

    /// Pool exhausted at a feasible node: alternate set-times solutions and
    /// objective tightening until the node fails or finer splits appear.
    fn exhausted_path(&mut self) -> ExhaustedOutcome {
        loop {
            if self.node_propagate(None).is_fail() {
                return ExhaustedOutcome::NodeFailed;
            }
            match self.set_times() {
                Some(makespan) => self.found_solution(makespan),
                None => {
                    let added = generate_more_choices(
                        &mut self.pool,
                        &self.store,
                        self.strategy.initial_rating,
                    );
                    assert!(
                        !added.is_empty(),
                        "set-times failed but no variable window is splittable"
                    );
                    return ExhaustedOutcome::NewChoices;
                }
            }
        }
    }

    /// Chronological greedy fixing without backtracking; restores the store
    /// whether or not it reaches a full assignment.
    fn set_times(&mut self) -> Option<Time> {
        let mark = self.store.checkpoint();
        let mut ok = true;
        loop {
            let mut next: Option<(Time, Time, VarId)> = None;
            for i in 0..self.store.num_vars() {
                let v = VarId(i as u32);
                let (lo, hi) = self.store.window(v);
                if lo < hi {
                    let key = (lo, hi, v);
                    if next.is_none_or(|cur| key < cur) {
                        next = Some(key);
                    }
                }
            }
            let Some((lo, _, v)) = next else { break };
            let fix = Literal {
                var: v,
                pivot: lo,
                side: Side::LessEq,
            };
            if self.node_propagate(Some(fix)).is_fail() {
                ok = false;
                break;
            }
        }
        let result = if ok {
            let starts: Vec<Time> = (0..self.store.num_vars())
                .map(|i| self.store.start_min(VarId(i as u32)))
                .collect();
            Some(self.model.makespan(&starts))
        } else {
            None
        };
        self.store.restore(mark);
        result
    }

    fn found_solution(&mut self, makespan: Time) {
        self.best_objective = Some(match self.best_objective {
            Some(b) => b.min(makespan),
            None => makespan,
        });
        let cap = makespan - 1;
        self.dynamic_cap = Some(match self.dynamic_cap {
            Some(c) => c.min(cap),
            None => cap,
        });
        if self.engine.reset_restarts_after_solution {
            self.fail_limit = self.engine.initial_restart_limit;
        }
        if let Some(limit) = self.engine.max_counter_after_solution {
            for c in self.pool.iter_mut() {
                c.counts[0] = c.counts[0].min(limit);
                c.counts[1] = c.counts[1].min(limit);
            }
        }
    }

    /// Probes one positional branch at the current node, rates it, and
    /// restores the store.
    fn probe_branch(&mut self, id: ChoiceId, pos: Pos) -> (f64, bool) {
        let lit = self.pool.get(id).literal(pos);
        let depth = self.stack.len();
        let mark = self.store.checkpoint();
        let outcome = self.node_propagate(Some(lit));
        self.store.restore(mark);
        let lr = local_rating(outcome, self.engine.sfds_mode);
        update_branch_rating(
            self.pool.get_mut(id),
            pos,
            lr,
            depth,
            &self.strategy,
            &mut self.averages,
        );
        (lr, outcome.is_fail())
    }

    /// Probes the best-rated undecided choices and returns the one whose
    /// criterion branch propagated the most; a failing probe wins outright.
    fn strong_branching_select(&mut self) -> Option<ChoiceId> {
        let mut ids = self.pool.undecided_available(&self.store);
        if ids.is_empty() {
            return None;
        }
        ids.sort_by(|&a, &b| {
            self.pool
                .get(a)
                .rating()
                .total_cmp(&self.pool.get(b).rating())
                .then(a.index().cmp(&b.index()))
        });
        ids.truncate(self.engine.strong_branching_size as usize);
        let mut best: Option<(f64, ChoiceId)> = None;
        for id in ids {
            self.pool.get_mut(id).rotate_branches();
            let score = match self.engine.strong_branching_criterion {
                SbCriterion::Left => {
                    self.counters.sb_probes += 1;
                    let (lr, failed) = self.probe_branch(id, Pos::Left);
                    if failed {
                        return Some(id);
                    }
                    lr
                }
                SbCriterion::Right => {
                    self.counters.sb_probes += 1;
                    let (lr, failed) = self.probe_branch(id, Pos::Right);
                    if failed {
                        return Some(id);
                    }
                    lr
                }
                SbCriterion::Both => {
                    self.counters.sb_probes += 2;
                    let (l, lf) = self.probe_branch(id, Pos::Left);
                    if lf {
                        return Some(id);
                    }
                    let (r, rf) = self.probe_branch(id, Pos::Right);
                    if rf {
                        return Some(id);
                    }
                    l + r
                }
            };
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, id));
            }
        }
        best.map(|(_, id)| id)
    }

    /// Probes both branches of an exploratory choice. Commits when at least
    /// one probe fails; otherwise the pick is rolled back with its rating
    /// updates kept.
    fn explore_with_rollback(&mut self, id: ChoiceId) -> RollbackOutcome {
        let (_, left_failed) = self.probe_branch(id, Pos::Left);
        let (_, right_failed) = self.probe_branch(id, Pos::Right);
        if left_failed && right_failed {
            apply_both_fail_bonus(self.pool.get_mut(id), &self.strategy);
            RollbackOutcome::Committed { both_failed: true }
        } else if left_failed || right_failed {
            RollbackOutcome::Committed { both_failed: false }
        } else {
            RollbackOutcome::RolledBack
        }
    }

    fn restart_due(&self) -> bool {
        self.engine.restarts_enabled && (self.fail_count as f64) >= self.fail_limit.ceil()
    }

    /// Records a nogood from the current path, returns everything to the
    /// pool, grows the fail limit and re-propagates the root. Returns false
    /// when the root itself now fails.
    fn do_restart(&mut self) -> bool {
        self.counters.restart_fail_counts.push(self.fail_count);
        self.counters.restarts += 1;
        if self.engine.use_nogoods {
            let path: Vec<(Literal, Pos)> = self
                .stack
                .iter()
                .map(|e| (self.pool.get(e.choice).literal(e.pos), e.pos))
                .collect();
            if let Some(ng) = derive_nogood(&path) {
                self.nogoods.push(ng);
                self.counters.nogoods += 1;
            }
        }
        while let Some(e) = self.stack.pop() {
            self.store.restore(e.mark);
            self.pool.return_to_pool(e.choice);
        }
        self.fail_limit *= self.engine.restart_growth_factor;
        self.fail_count = 0;
        self.epsilon *= self.strategy.epsilon_decay;
        if let Some(cap) = self.engine.max_counter_after_restart {
            for c in self.pool.iter_mut() {
                c.counts[0] = c.counts[0].min(cap);
                c.counts[1] = c.counts[1].min(cap);
            }
        }
        !self.node_propagate(None).is_fail()
    }

    fn budget_exhausted(&self) -> bool {
        if let Some(b) = self.limits.branch_limit {
            if self.counters.branches >= b {
                return true;
            }
        }
        if let Some(t) = self.limits.time_limit {
            if self.started.elapsed() >= t {
                return true;
            }
        }
        false
    }

    fn finish_verdict(&mut self) -> SolveResult {
        let status = match self.best_objective {
            Some(m) => SolveStatus::SolutionFound(m),
            None => SolveStatus::Infeasible,
        };
        self.finish(status)
    }

    fn finish(&mut self, status: SolveStatus) -> SolveResult {
        let proven_bound = match status {
            SolveStatus::SolutionFound(m) => Some(m),
            SolveStatus::Infeasible => self.model.objective_cap().map(|c| c + 1),
            SolveStatus::LimitReached => None,
        };
        SolveResult {
            status,
            branches: self.counters.branches,
            fails: self.counters.fails,
            restarts: self.counters.restarts,
            rollbacks: self.counters.rollbacks,
            exploratory_selections: self.counters.exploratory,
            strong_branching_probes: self.counters.sb_probes,
            nogoods_recorded: self.counters.nogoods,
            best_objective: self.best_objective,
            proven_bound,
            elapsed: self.started.elapsed(),
            restart_fail_counts: std::mem::take(&mut self.counters.restart_fail_counts),
        }
    }
}

/// The certified nogood of a restart path: when the deepest decision is a
/// left (first-explored) branch, the path up to it implies its negation.
/// Paths ending in a right branch certify nothing new.
pub fn derive_nogood(path: &[(Literal, Pos)]) -> Option<Nogood> {
    let ((last_lit, last_pos), prior) = path.split_last()?;
    if *last_pos != Pos::Left {
        return None;
    }
    Some(Nogood {
        antecedents: prior.iter().map(|(l, _)| *l).collect(),
        consequent: last_lit.negated(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;

    /// Two jobs, two machines: J1 = M1(3) then M2(2); J2 = M2(2) then M1(3).
    /// The optimal makespan is 6.
    fn jssp_2x2(cap: Option<Time>) -> Model {
        let mut b = ModelBuilder::new();
        let horizon = 10;
        let j1m1 = b.new_interval(0, horizon - 3, 3).unwrap();
        let j1m2 = b.new_interval(0, horizon - 2, 2).unwrap();
        let j2m2 = b.new_interval(0, horizon - 2, 2).unwrap();
        let j2m1 = b.new_interval(0, horizon - 3, 3).unwrap();
        b.add_precedence(j1m1, j1m2, 0).unwrap();
        b.add_precedence(j2m2, j2m1, 0).unwrap();
        b.add_no_overlap(vec![j1m1, j2m1]).unwrap();
        b.add_no_overlap(vec![j1m2, j2m2]).unwrap();
        if let Some(c) = cap {
            b.limit_objective(c);
        }
        b.build()
    }

    fn quick_configs() -> (StrategyConfig, EngineConfig) {
        (StrategyConfig::default(), EngineConfig::default())
    }

    #[test]
    fn tiny_jssp_cap_below_optimum_is_infeasible() {
        let model = jssp_2x2(Some(5));
        let (strat, eng) = quick_configs();
        let res = solve(&model, &strat, &eng, 1, &Limits::none());
        assert_eq!(res.status, SolveStatus::Infeasible);
        assert_eq!(res.proven_bound, Some(6));
    }

    #[test]
    fn tiny_jssp_cap_at_optimum_finds_it() {
        let model = jssp_2x2(Some(6));
        let (strat, eng) = quick_configs();
        let res = solve(&model, &strat, &eng, 1, &Limits::none());
        assert_eq!(res.status, SolveStatus::SolutionFound(6));
        assert_eq!(res.proven_bound, Some(6));
    }

    #[test]
    fn uncapped_search_proves_the_optimum() {
        let model = jssp_2x2(None);
        let (strat, eng) = quick_configs();
        let res = solve(&model, &strat, &eng, 3, &Limits::none());
        assert_eq!(res.status, SolveStatus::SolutionFound(6));
    }

    #[test]
    fn branch_limit_zero_stops_immediately() {
        let model = jssp_2x2(Some(5));
        let (strat, eng) = quick_configs();
        let res = solve(&model, &strat, &eng, 1, &Limits::branches(0));
        assert_eq!(res.status, SolveStatus::LimitReached);
        assert_eq!(res.branches, 0);
    }

    #[test]
    fn identical_runs_are_identical() {
        let model = jssp_2x2(Some(5));
        let (strat, eng) = quick_configs();
        let a = solve(&model, &strat, &eng, 42, &Limits::none());
        let b = solve(&model, &strat, &eng, 42, &Limits::none());
        assert_eq!(a.status, b.status);
        assert_eq!(a.branches, b.branches);
        assert_eq!(a.fails, b.fails);
        assert_eq!(a.restarts, b.restarts);
    }

    #[test]
    fn geometric_restart_schedule_is_exact() {
        // Force frequent restarts on a slightly larger infeasible model.
        let mut b = ModelBuilder::new();
        let mut ops = Vec::new();
        for _ in 0..3 {
            for _ in 0..3 {
                ops.push(b.new_interval(0, 18, 3).unwrap());
            }
        }
        for j in 0..3 {
            b.add_precedence(ops[3 * j], ops[3 * j + 1], 0).unwrap();
            b.add_precedence(ops[3 * j + 1], ops[3 * j + 2], 0).unwrap();
        }
        for m in 0..3 {
            b.add_no_overlap((0..3).map(|j| ops[3 * j + m]).collect()).unwrap();
        }
        b.limit_objective(8); // three length-3 ops per machine cannot fit
        let model = b.build();
        let strat = StrategyConfig::default();
        let eng = EngineConfig {
            initial_restart_limit: 5.0,
            restart_growth_factor: 1.3,
            ..Default::default()
        };
        let res = solve(&model, &strat, &eng, 7, &Limits::none());
        let mut limit = 5.0f64;
        for &observed in &res.restart_fail_counts {
            assert_eq!(observed, limit.ceil() as u64);
            limit *= 1.3;
        }
        assert_eq!(res.status, SolveStatus::Infeasible);
    }

    #[test]
    fn nogood_derivation_matches_path_shape() {
        let lit = |v: u32, p: Time, side| Literal {
            var: VarId(v),
            pivot: p,
            side,
        };
        // Single left literal: its negation holds globally.
        let ng = derive_nogood(&[(lit(0, 5, Side::LessEq), Pos::Left)]).unwrap();
        assert!(ng.antecedents.is_empty());
        assert_eq!(ng.consequent, lit(0, 5, Side::Greater));

        // Right then left: r1 implies the negation of l2.
        let ng = derive_nogood(&[
            (lit(0, 5, Side::Greater), Pos::Right),
            (lit(1, 3, Side::LessEq), Pos::Left),
        ])
        .unwrap();
        assert_eq!(ng.antecedents, vec![lit(0, 5, Side::Greater)]);
        assert_eq!(ng.consequent, lit(1, 3, Side::Greater));

        // Only right literals: nothing is certified.
        assert!(derive_nogood(&[
            (lit(0, 5, Side::Greater), Pos::Right),
            (lit(1, 3, Side::LessEq), Pos::Right),
        ])
        .is_none());
        assert!(derive_nogood(&[]).is_none());
    }

    #[test]
    fn set_times_on_singleton_store_returns_assignment() {
        let mut b = ModelBuilder::new();
        b.new_interval(0, 0, 3).unwrap();
        b.new_interval(3, 3, 2).unwrap();
        let model = b.build();
        let (strat, eng) = quick_configs();
        let mut solver = Solver::new(&model, strat, eng, 1);
        assert!(!solver.node_propagate(None).is_fail());
        assert_eq!(solver.set_times(), Some(5));
    }

    #[test]
    fn set_times_reports_dead_ends() {
        // Three length-2 ops on one machine with windows [0,3]: only two fit,
        // but the root looks feasible to bounds propagation. Chronological
        // fixing runs into the wipeout and reports no solution.
        let mut b = ModelBuilder::new();
        let x = b.new_interval(0, 3, 2).unwrap();
        let y = b.new_interval(0, 3, 2).unwrap();
        let z = b.new_interval(0, 3, 2).unwrap();
        b.add_no_overlap(vec![x, y, z]).unwrap();
        let model = b.build();
        let (strat, eng) = quick_configs();
        let mut solver = Solver::new(&model, strat, eng, 1);
        assert!(!solver.node_propagate(None).is_fail());
        assert_eq!(solver.set_times(), None);
        // The store is back at its pre-probe state.
        assert_eq!(solver.store.window(x), (0, 3));
        assert_eq!(solver.store.window(z), (0, 3));
    }

    #[test]
    fn set_times_solves_the_2x2_at_the_root() {
        let model = jssp_2x2(Some(6));
        let (strat, eng) = quick_configs();
        let mut solver = Solver::new(&model, strat, eng, 1);
        assert!(!solver.node_propagate(None).is_fail());
        let makespan = solver.set_times().expect("root set-times solution");
        assert_eq!(makespan, 6);
    }

    /// Three unit-length ops on one machine with windows [0,1]: infeasible,
    /// but invisible to root propagation. Branching either way on (x, 0)
    /// wipes out the other two.
    fn both_fail_model() -> Model {
        let mut b = ModelBuilder::new();
        let x = b.new_interval(0, 1, 1).unwrap();
        let y = b.new_interval(0, 1, 1).unwrap();
        let z = b.new_interval(0, 1, 1).unwrap();
        b.add_no_overlap(vec![x, y, z]).unwrap();
        b.build()
    }

    #[test]
    fn strong_branching_returns_failing_probe_immediately() {
        let model = both_fail_model();
        let (strat, eng) = quick_configs();
        let mut solver = Solver::new(&model, strat, eng, 1);
        assert!(!solver.node_propagate(None).is_fail());
        solver.pool = ChoicePool::default();
        solver.pool.insert(VarId(0), 0, 0.3);
        solver.pool.insert(VarId(1), 0, 0.3);
        let picked = solver.strong_branching_select();
        assert_eq!(picked, Some(ChoiceId(0)));
        assert_eq!(solver.counters.sb_probes, 1);
        // The failing probe's rating update is kept.
        assert_eq!(solver.pool.get(ChoiceId(0)).ratings[0], 0.0);
    }

    #[test]
    fn strong_branching_picks_minimal_left_probe_score() {
        // Left cut on (c, 3) tightens a through the precedence, left cut on
        // (a, 5) tightens nothing: criterion Left prefers the former.
        let mut b = ModelBuilder::new();
        let a = b.new_interval(0, 9, 1).unwrap();
        let c = b.new_interval(0, 9, 2).unwrap();
        b.add_precedence(a, c, 0).unwrap();
        let model = b.build();
        let (strat, eng) = quick_configs();
        let mut solver = Solver::new(&model, strat, eng, 1);
        assert!(!solver.node_propagate(None).is_fail());
        solver.pool = ChoicePool::default();
        solver.pool.insert(a, 5, 0.3);
        solver.pool.insert(c, 3, 0.3);
        let picked = solver.strong_branching_select();
        assert_eq!(picked, Some(ChoiceId(1)));
        assert_eq!(solver.counters.sb_probes, 2);
    }

    #[test]
    fn strong_branching_size_zero_disables_probing() {
        let model = jssp_2x2(None);
        let strat = StrategyConfig::default();
        let eng = EngineConfig {
            strong_branching_size: 0,
            ..Default::default()
        };
        let res = solve(&model, &strat, &eng, 1, &Limits::none());
        assert_eq!(res.strong_branching_probes, 0);
        assert_eq!(res.status, SolveStatus::SolutionFound(6));

        let deep = EngineConfig::default();
        let res = solve(&model, &StrategyConfig::default(), &deep, 1, &Limits::none());
        assert!(res.strong_branching_probes > 0);
        assert_eq!(res.status, SolveStatus::SolutionFound(6));
    }

    #[test]
    fn rollback_keeps_rating_updates() {
        let model = jssp_2x2(None);
        let strat = StrategyConfig {
            rollback: true,
            ..Default::default()
        };
        let eng = EngineConfig::default();
        let mut solver = Solver::new(&model, strat, eng, 1);
        assert!(!solver.node_propagate(None).is_fail());
        let ids = solver.pool.undecided_available(&solver.store);
        let id = ids[0];
        let before = solver.pool.get(id).clone();
        let outcome = solver.explore_with_rollback(id);
        let after = solver.pool.get(id);
        assert_eq!(after.counts[0], before.counts[0] + 1);
        assert_eq!(after.counts[1], before.counts[1] + 1);
        match outcome {
            RollbackOutcome::RolledBack => {
                // Neither branch failed; ratings moved toward (1, 2].
                assert!(after.ratings[0] > 1.0 && after.ratings[1] > 1.0);
            }
            RollbackOutcome::Committed { .. } => {
                assert!(after.ratings[0] == 0.0 || after.ratings[1] == 0.0);
            }
        }
    }

    #[test]
    fn rollback_commits_on_both_fail() {
        let model = both_fail_model();
        let (strat, eng) = quick_configs();
        let mut solver = Solver::new(&model, strat, eng, 1);
        assert!(!solver.node_propagate(None).is_fail());
        solver.pool = ChoicePool::default();
        solver.pool.insert(VarId(0), 0, 0.3);
        match solver.explore_with_rollback(ChoiceId(0)) {
            RollbackOutcome::Committed { both_failed } => assert!(both_failed),
            RollbackOutcome::RolledBack => panic!("both branches fail, must commit"),
        }
        // Both probes rated the branches 0; the bonus keeps them at the
        // zero fixed point.
        assert_eq!(solver.pool.get(ChoiceId(0)).ratings, [0.0, 0.0]);
    }

    #[test]
    fn rollback_commits_when_one_branch_fails() {
        // w <= 0 squeezes the three unit ops into one remaining slot pair
        // and fails; w > 0 leaves everything open.
        let mut b = ModelBuilder::new();
        let x = b.new_interval(0, 1, 1).unwrap();
        let y = b.new_interval(0, 1, 1).unwrap();
        let z = b.new_interval(0, 1, 1).unwrap();
        let w = b.new_interval(0, 9, 1).unwrap();
        b.add_no_overlap(vec![x, y, z, w]).unwrap();
        let model = b.build();
        let (strat, eng) = quick_configs();
        let mut solver = Solver::new(&model, strat, eng, 1);
        assert!(!solver.node_propagate(None).is_fail());
        solver.pool = ChoicePool::default();
        solver.pool.insert(w, 0, 0.3);
        match solver.explore_with_rollback(ChoiceId(0)) {
            RollbackOutcome::Committed { both_failed } => assert!(!both_failed),
            RollbackOutcome::RolledBack => panic!("one branch fails, must commit"),
        }
        let probed = solver.pool.get(ChoiceId(0));
        assert_eq!(probed.ratings[0], 0.0);
        assert!(probed.ratings[1] > 1.0);
    }

    #[test]
    fn nogoods_do_not_change_the_verdict() {
        for cap in [5, 6] {
            let model = jssp_2x2(Some(cap));
            let strat = StrategyConfig::default();
            for seed in [1, 2, 3] {
                let with = solve(
                    &model,
                    &strat,
                    &EngineConfig {
                        use_nogoods: true,
                        initial_restart_limit: 4.0,
                        ..Default::default()
                    },
                    seed,
                    &Limits::none(),
                );
                let without = solve(
                    &model,
                    &strat,
                    &EngineConfig {
                        use_nogoods: false,
                        initial_restart_limit: 4.0,
                        ..Default::default()
                    },
                    seed,
                    &Limits::none(),
                );
                assert_eq!(with.status, without.status);
            }
        }
    }
}
