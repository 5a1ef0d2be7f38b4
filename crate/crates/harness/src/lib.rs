//! Experiment harness around the search kernel: infeasibility proof runs,
//! lower-bound ramping, rating-carryover learning curves, parameter sweeps
//! and statistical comparison of result sets.
//!
//! Everything is reproducible: runs are driven by explicit seeds through a
//! counter-based generator, never by OS entropy, and identical
//! specifications produce identical result files up to the elapsed-time
//! column.

pub mod desk;
pub mod stats;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use fds_core::engine::{solve, EngineConfig, Limits, SolveResult, SolveStatus, Solver};
use fds_core::instances::{
    build_model, heuristic_lower_bound, read_results, Instance, ParseError, RunRecord,
};
use fds_core::model::Time;
use fds_core::oracle::{self, TinyKind};
use fds_core::rating::{RatingTable, StrategyConfig};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Results(#[from] fds_core::instances::ResultsError),
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("bad value '{value}' for parameter '{key}'")]
    BadValue { key: String, value: String },
    #[error("result sets cover different instances; only in A: {only_a:?}, only in B: {only_b:?}")]
    KeyMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },
    #[error("carryover needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
}

/// Full specification of one run: both config layers, the seed and budgets.
#[derive(Debug, Clone, Default)]
pub struct RunSpec {
    pub strategy: StrategyConfig,
    pub engine: EngineConfig,
    pub seed: u64,
    pub limits: Limits,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Canonical text of every parameter, hashed into a stable fingerprint.
pub fn config_fingerprint(strategy: &StrategyConfig, engine: &EngineConfig) -> String {
    let s = format!(
        "policy={};epsilon={};epsilon-decay={};tau={};rollback={};rating-average-length={};\
         initial-rating={};both-fail-reward-factor={};rating-average-comparison={};\
         freeze-ratings={};thompson-sigma0={};initial-restart-limit={};restart-growth-factor={};\
         restarts-enabled={};use-nogoods={};strong-branching-size={};strong-branching-depth={};\
         strong-branching-criterion={};max-counter-after-restart={:?};\
         max-counter-after-solution={:?};reset-restarts-after-solution={};length-step-ratio={};\
         uniform-choice-step={};max-initial-choices-per-variable={};sfds-mode={}",
        strategy.policy.name(),
        strategy.epsilon,
        strategy.epsilon_decay,
        strategy.tau,
        strategy.rollback,
        strategy.rating_average_length,
        strategy.initial_rating,
        strategy.both_fail_reward_factor,
        strategy.rating_average_comparison,
        strategy.freeze_ratings,
        strategy.thompson_sigma0,
        engine.initial_restart_limit,
        engine.restart_growth_factor,
        engine.restarts_enabled,
        engine.use_nogoods,
        engine.strong_branching_size,
        engine.strong_branching_depth,
        engine.strong_branching_criterion.name(),
        engine.max_counter_after_restart,
        engine.max_counter_after_solution,
        engine.reset_restarts_after_solution,
        engine.length_step_ratio,
        engine.uniform_choice_step,
        engine.max_initial_choices_per_variable,
        engine.sfds_mode,
    );
    format!("{:016x}", fnv1a64(s.as_bytes()))
}

/// Applies one `kebab-case-key = value` setting, as used by sweep grids.
/// Keys match the CLI flag names.
pub fn apply_param(
    strategy: &mut StrategyConfig,
    engine: &mut EngineConfig,
    key: &str,
    value: &str,
) -> Result<(), HarnessError> {
    let bad = || HarnessError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    };
    macro_rules! set {
        ($field:expr) => {
            $field = value.parse().map_err(|_| bad())?
        };
    }
    match key {
        "strategy" => set!(strategy.policy),
        "epsilon" => set!(strategy.epsilon),
        "epsilon-decay" => set!(strategy.epsilon_decay),
        "tau" => set!(strategy.tau),
        "rollback" => set!(strategy.rollback),
        "rating-average-length" => set!(strategy.rating_average_length),
        "initial-rating" => set!(strategy.initial_rating),
        "both-fail-reward-factor" => set!(strategy.both_fail_reward_factor),
        "rating-average-comparison" => set!(strategy.rating_average_comparison),
        "freeze-ratings" => set!(strategy.freeze_ratings),
        "thompson-sigma0" => set!(strategy.thompson_sigma0),
        "initial-restart-limit" => set!(engine.initial_restart_limit),
        "restart-growth-factor" => set!(engine.restart_growth_factor),
        "use-nogoods" => set!(engine.use_nogoods),
        "strong-branching-size" => set!(engine.strong_branching_size),
        "strong-branching-depth" => set!(engine.strong_branching_depth),
        "strong-branching-criterion" => set!(engine.strong_branching_criterion),
        "max-counter-after-restart" => engine.max_counter_after_restart = Some(value.parse().map_err(|_| bad())?),
        "max-counter-after-solution" => engine.max_counter_after_solution = Some(value.parse().map_err(|_| bad())?),
        "reset-restarts-after-solution" => set!(engine.reset_restarts_after_solution),
        "length-step-ratio" => set!(engine.length_step_ratio),
        "uniform-choice-step" => set!(engine.uniform_choice_step),
        "max-initial-choices-per-variable" => set!(engine.max_initial_choices_per_variable),
        "sfds-mode" => set!(engine.sfds_mode),
        other => return Err(HarnessError::UnknownParameter(other.to_string())),
    }
    Ok(())
}

fn record_of(instance: &Instance, spec: &RunSpec, res: &SolveResult) -> RunRecord {
    RunRecord::from_result(
        instance.name(),
        spec.strategy.policy.name(),
        spec.seed,
        &config_fingerprint(&spec.strategy, &spec.engine),
        res,
    )
}

/// Builds the capped model, runs one proof attempt and reports it.
pub fn cmd_prove(
    instance: &Instance,
    cap: Time,
    spec: &RunSpec,
) -> Result<(RunRecord, SolveResult), HarnessError> {
    let model = build_model(instance, Some(cap))?;
    let res = solve(&model, &spec.strategy, &spec.engine, spec.seed, &spec.limits);
    Ok((record_of(instance, spec, &res), res))
}

/// Outcome of the lower-bound ramp.
#[derive(Debug, Clone)]
pub struct LbReport {
    /// Best proven lower bound: one above the highest cap proven
    /// infeasible, or the optimum itself when a proof attempt found it.
    pub bound: Time,
    /// True when the ramp ended by finding (and proving) the optimum.
    pub closed: bool,
    pub records: Vec<RunRecord>,
}

/// Proves increasing caps infeasible until the budget runs out, starting
/// from the critical-path/load bound.
pub fn cmd_lb_search(
    instance: &Instance,
    time_limit: Duration,
    spec: &RunSpec,
) -> Result<LbReport, HarnessError> {
    let started = Instant::now();
    let mut candidate = heuristic_lower_bound(instance);
    let mut records = Vec::new();
    let mut closed = false;
    while let Some(remaining) = time_limit.checked_sub(started.elapsed()) {
        if remaining.is_zero() {
            break;
        }
        let model = build_model(instance, Some(candidate))?;
        let step_limits = Limits {
            time_limit: Some(remaining),
            branch_limit: spec.limits.branch_limit,
        };
        let res = solve(&model, &spec.strategy, &spec.engine, spec.seed, &step_limits);
        records.push(record_of(instance, spec, &res));
        match res.status {
            SolveStatus::Infeasible => candidate += 1,
            SolveStatus::SolutionFound(m) => {
                // The cap was achievable: m is the proven optimum.
                candidate = m;
                closed = true;
                break;
            }
            SolveStatus::LimitReached => break,
        }
    }
    Ok(LbReport {
        bound: candidate,
        closed,
        records,
    })
}

/// Learning-curve report of repeated runs with rating carryover.
#[derive(Debug, Clone)]
pub struct CarryoverReport {
    pub branches: Vec<u64>,
    /// `branches[i] / branches[0]` for each completed run.
    pub ratios: Vec<f64>,
    /// Rollback share per run, when exploration happened.
    pub rollback_rates: Vec<Option<f64>>,
    /// A run hit its budget and the experiment stopped early.
    pub aborted: bool,
    pub final_ratings: Option<RatingTable>,
}

/// Runs the same capped proof `k` times, restarts and nogoods disabled,
/// carrying the learned ratings from each run into the next. With
/// `freeze_from_second_run` the carried ratings are frozen, reproducing
/// the rating-freeze comparison.
pub fn cmd_carryover(
    instance: &Instance,
    cap: Time,
    k: usize,
    spec: &RunSpec,
    freeze_from_second_run: bool,
) -> Result<CarryoverReport, HarnessError> {
    if k < 2 {
        return Err(HarnessError::TooFewRuns(k));
    }
    let model = build_model(instance, Some(cap))?;
    let engine = EngineConfig {
        restarts_enabled: false,
        use_nogoods: false,
        ..spec.engine.clone()
    };
    let mut table: Option<RatingTable> = None;
    let mut branches = Vec::with_capacity(k);
    let mut rollback_rates = Vec::with_capacity(k);
    let mut aborted = false;
    for run in 0..k {
        let mut strategy = spec.strategy.clone();
        if freeze_from_second_run && run > 0 {
            strategy.freeze_ratings = true;
        }
        let mut solver = Solver::new(&model, strategy, engine.clone(), spec.seed + run as u64);
        if let Some(t) = &table {
            solver.import_ratings(t);
        }
        let res = solver.run(&spec.limits);
        branches.push(res.branches);
        rollback_rates.push(res.rollback_rate());
        table = Some(solver.export_ratings());
        if res.status == SolveStatus::LimitReached {
            aborted = true;
            break;
        }
    }
    let first = branches.first().copied().unwrap_or(0) as f64;
    let ratios = branches.iter().map(|&b| b as f64 / first).collect();
    Ok(CarryoverReport {
        branches,
        ratios,
        rollback_rates,
        aborted,
        final_ratings: table,
    })
}

/// One grid cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub assignments: Vec<(String, String)>,
    pub total_branches: u64,
    pub total_elapsed_s: f64,
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    /// Index of the cell with the fewest total branches.
    pub best: usize,
}

/// Cartesian-product evaluation of a parameter grid over capped instances.
/// An empty grid evaluates the baseline configuration once.
pub fn cmd_sweep(
    grid: &[(String, Vec<String>)],
    instances: &[(Instance, Time)],
    seeds: &[u64],
    base: &RunSpec,
) -> Result<SweepReport, HarnessError> {
    let mut cells = Vec::new();
    let mut assignment = Vec::new();
    build_cells(grid, 0, &mut assignment, &mut cells);
    let mut report_cells = Vec::with_capacity(cells.len());
    for cell in &cells {
        let mut strategy = base.strategy.clone();
        let mut engine = base.engine.clone();
        for (key, value) in cell {
            apply_param(&mut strategy, &mut engine, key, value)?;
        }
        let mut total_branches = 0;
        let mut total_elapsed = 0.0;
        let mut runs = 0;
        for (instance, cap) in instances {
            let model = build_model(instance, Some(*cap))?;
            for &seed in seeds {
                let res = solve(&model, &strategy, &engine, seed, &base.limits);
                total_branches += res.branches;
                total_elapsed += res.elapsed.as_secs_f64();
                runs += 1;
            }
        }
        report_cells.push(SweepCell {
            assignments: cell.clone(),
            total_branches,
            total_elapsed_s: total_elapsed,
            runs,
        });
    }
    let best = report_cells
        .iter()
        .enumerate()
        .min_by_key(|(_, c)| c.total_branches)
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(SweepReport {
        cells: report_cells,
        best,
    })
}

fn build_cells(
    grid: &[(String, Vec<String>)],
    depth: usize,
    current: &mut Vec<(String, String)>,
    out: &mut Vec<Vec<(String, String)>>,
) {
    if depth == grid.len() {
        out.push(current.clone());
        return;
    }
    let (key, values) = &grid[depth];
    for v in values {
        current.push((key.clone(), v.clone()));
        build_cells(grid, depth + 1, current, out);
        current.pop();
    }
}

/// Which result-file column a comparison runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Branches,
    ElapsedSeconds,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "branches" => Ok(Metric::Branches),
            "time" => Ok(Metric::ElapsedSeconds),
            other => Err(format!("unknown metric '{other}' (use branches|time)")),
        }
    }
}

impl Metric {
    fn value(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Branches => r.branches as f64,
            Metric::ElapsedSeconds => r.elapsed_s,
        }
    }
}

/// Paired comparison of two result sets keyed by instance.
#[derive(Debug, Clone)]
pub struct CompareReport {
    /// Instance, mean of A, mean of B (over seeds).
    pub per_instance: Vec<(String, f64, f64)>,
    /// Mean of the paired differences A - B.
    pub mean_diff: f64,
    pub wilcoxon: Option<stats::WilcoxonResult>,
    pub paired_t: Option<stats::PairedTResult>,
    pub significant_05: bool,
    pub significant_005: bool,
}

fn per_instance_means(records: &[RunRecord], metric: Metric) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.instance.clone()).or_insert((0.0, 0));
        e.0 += metric.value(r);
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

/// Compares two in-memory result sets.
pub fn compare_records(
    a: &[RunRecord],
    b: &[RunRecord],
    metric: Metric,
) -> Result<CompareReport, HarnessError> {
    let means_a = per_instance_means(a, metric);
    let means_b = per_instance_means(b, metric);
    let only_a: Vec<String> = means_a
        .keys()
        .filter(|k| !means_b.contains_key(*k))
        .cloned()
        .collect();
    let only_b: Vec<String> = means_b
        .keys()
        .filter(|k| !means_a.contains_key(*k))
        .cloned()
        .collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(HarnessError::KeyMismatch { only_a, only_b });
    }
    let mut per_instance = Vec::with_capacity(means_a.len());
    let mut diffs = Vec::with_capacity(means_a.len());
    for (k, va) in &means_a {
        let vb = means_b[k];
        per_instance.push((k.clone(), *va, vb));
        diffs.push(*va - vb);
    }
    let mean_diff = if diffs.is_empty() {
        0.0
    } else {
        diffs.iter().sum::<f64>() / diffs.len() as f64
    };
    let wilcoxon = stats::wilcoxon_signed_rank(&diffs);
    let paired_t = stats::paired_t(&diffs);
    let p = wilcoxon.as_ref().map(|w| w.p).unwrap_or(1.0);
    Ok(CompareReport {
        per_instance,
        mean_diff,
        wilcoxon,
        paired_t,
        significant_05: p < 0.05,
        significant_005: p < 0.005,
    })
}

/// Loads two result files and compares them on the given metric.
pub fn cmd_compare(
    path_a: &std::path::Path,
    path_b: &std::path::Path,
    metric: Metric,
) -> Result<CompareReport, HarnessError> {
    let a = read_results(path_a)?;
    let b = read_results(path_b)?;
    compare_records(&a, &b, metric)
}

/// One line of the oracle cross-check.
#[derive(Debug, Clone)]
pub struct OracleCheckReport {
    pub checked: usize,
    pub mismatches: Vec<String>,
}

/// Verifies engine verdicts against the exhaustive oracle on random tiny
/// instances: cap = optimum must be solvable, cap = optimum - 1 must not.
pub fn cmd_oracle_check(
    kind: TinyKind,
    count: usize,
    base_seed: u64,
    spec: &RunSpec,
) -> Result<OracleCheckReport, HarnessError> {
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for i in 0..count {
        let instance = oracle::random_tiny_instance(kind, base_seed + i as u64);
        let optimum = oracle::brute_force_optimum(&instance)
            .expect("tiny generator stays inside the oracle guard");
        checked += 1;
        let at = build_model(&instance, Some(optimum))?;
        let res = solve(&at, &spec.strategy, &spec.engine, spec.seed, &spec.limits);
        if res.status != SolveStatus::SolutionFound(optimum) {
            mismatches.push(format!(
                "{}: cap {} expected solution({}), got {:?}",
                instance.name(),
                optimum,
                optimum,
                res.status
            ));
        }
        if optimum > 0 {
            let below = build_model(&instance, Some(optimum - 1))?;
            let res = solve(&below, &spec.strategy, &spec.engine, spec.seed, &spec.limits);
            if res.status != SolveStatus::Infeasible {
                mismatches.push(format!(
                    "{}: cap {} expected infeasible, got {:?}",
                    instance.name(),
                    optimum - 1,
                    res.status
                ));
            }
        }
    }
    Ok(OracleCheckReport {
        checked,
        mismatches,
    })
}

/// Proven optimum of a desk instance, computed by an uncapped complete run.
/// Used to pair experiment instances with infeasible caps.
pub fn desk_optimum(instance: &Instance, spec: &RunSpec) -> Result<Option<Time>, HarnessError> {
    let model = build_model(instance, None)?;
    let res = solve(&model, &spec.strategy, &spec.engine, spec.seed, &spec.limits);
    Ok(match res.status {
        SolveStatus::SolutionFound(m) => Some(m),
        _ => None,
    })
}
