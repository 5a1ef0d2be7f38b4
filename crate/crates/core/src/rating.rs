//! Branch-rating updates and bandit-style choice selection.
//!
//! A choice is scored by the sum of its two branch ratings; the bandit view
//! negates that sum into a Q-value, so maximizing Q minimizes the rating.
//! Updates use the hybrid learning rate `alpha = 1/min(updates, L)`: an
//! arithmetic mean for the first `L` updates of a branch, a constant
//! exponential average afterwards.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::choice::{Choice, ChoiceId, ChoicePool, Pos};
use crate::domain::{DomainStore, Side};
use crate::model::{Time, VarId};

/// Choice-selection policy. The last four alternate between a greedy pick
/// and the named exploration policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Greedy,
    EpsilonGreedy,
    Boltzmann,
    Ucb1,
    Thompson,
    BGreedy,
    UGreedy,
    TGreedy,
}

impl Policy {
    pub const ALL: [Policy; 8] = [
        Policy::Greedy,
        Policy::EpsilonGreedy,
        Policy::Boltzmann,
        Policy::Ucb1,
        Policy::Thompson,
        Policy::BGreedy,
        Policy::UGreedy,
        Policy::TGreedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Greedy => "greedy",
            Policy::EpsilonGreedy => "epsilon-greedy",
            Policy::Boltzmann => "boltzmann",
            Policy::Ucb1 => "ucb1",
            Policy::Thompson => "thompson",
            Policy::BGreedy => "b-greedy",
            Policy::UGreedy => "u-greedy",
            Policy::TGreedy => "t-greedy",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown strategy '{s}'"))
    }
}

/// Full parameterization of rating updates and selection.
#[derive(Debug, Clone)]
pub struct StrategyConfig {
    pub policy: Policy,
    /// Exploration probability of the hybrid policies.
    pub epsilon: f64,
    /// Multiplier applied to epsilon at each restart; 1.0 disables decay.
    pub epsilon_decay: f64,
    /// Boltzmann temperature.
    pub tau: f64,
    /// Probe exploratory choices and keep only those with a failing branch.
    pub rollback: bool,
    /// `L`: updates after which alpha stays constant at `1/L`.
    pub rating_average_length: u32,
    pub initial_rating: f64,
    /// Multiplier applied to both ratings when both branches fail at once.
    pub both_fail_reward_factor: f64,
    /// Divide local ratings by the running per-depth average.
    pub rating_average_comparison: bool,
    /// Freeze all ratings and counters for the whole run.
    pub freeze_ratings: bool,
    /// Base spread of the Thompson sampler.
    pub thompson_sigma0: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            policy: Policy::BGreedy,
            epsilon: 0.10,
            epsilon_decay: 1.0,
            tau: 1.0,
            rollback: true,
            rating_average_length: 30,
            initial_rating: 0.3,
            both_fail_reward_factor: 0.9,
            rating_average_comparison: false,
            freeze_ratings: false,
            thompson_sigma0: 1.0,
        }
    }
}

/// Running average of local ratings per tree depth, used only when
/// `rating_average_comparison` is on. Seeded with 1 so it stays positive.
#[derive(Debug, Clone, Default)]
pub struct DepthAverages {
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl DepthAverages {
    pub fn average(&self, depth: usize) -> f64 {
        if depth < self.sums.len() {
            (1.0 + self.sums[depth]) / (1 + self.counts[depth]) as f64
        } else {
            1.0
        }
    }

    fn record(&mut self, depth: usize, local_rating: f64) {
        if depth >= self.sums.len() {
            self.sums.resize(depth + 1, 0.0);
            self.counts.resize(depth + 1, 0);
        }
        self.sums[depth] += local_rating;
        self.counts[depth] += 1;
    }
}

/// Bandit view of a choice: the negated rating sum.
#[inline]
pub fn q_value(choice: &Choice) -> f64 {
    -choice.rating()
}

/// Folds one observed local rating into a branch.
///
/// No-op when ratings are frozen. The result is clamped to `[0, 2]`.
pub fn update_branch_rating(
    choice: &mut Choice,
    pos: Pos,
    local_rating: f64,
    depth: usize,
    cfg: &StrategyConfig,
    averages: &mut DepthAverages,
) {
    if cfg.freeze_ratings {
        return;
    }
    let i = pos.index();
    choice.counts[i] = (choice.counts[i] + 1).min(cfg.rating_average_length.max(1));
    let alpha = 1.0 / choice.counts[i] as f64;
    let observed = if cfg.rating_average_comparison {
        local_rating / averages.average(depth)
    } else {
        local_rating
    };
    let updated = (1.0 - alpha) * choice.ratings[i] + alpha * observed;
    choice.ratings[i] = updated.clamp(0.0, 2.0);
    if cfg.rating_average_comparison {
        averages.record(depth, local_rating);
    }
}

/// Multiplies both branch ratings by the both-fail factor.
pub fn apply_both_fail_bonus(choice: &mut Choice, cfg: &StrategyConfig) {
    if cfg.freeze_ratings {
        return;
    }
    let f = cfg.both_fail_reward_factor;
    choice.ratings[0] = (choice.ratings[0] * f).clamp(0.0, 2.0);
    choice.ratings[1] = (choice.ratings[1] * f).clamp(0.0, 2.0);
}

/// Softmax of `q/tau`, numerically stabilized; probabilities sum to 1.
pub fn boltzmann_probabilities(qs: &[f64], tau: f64) -> Vec<f64> {
    assert!(tau > 0.0);
    let max = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = qs.iter().map(|q| ((q - max) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn pick_uniform<R: Rng>(ids: &[ChoiceId], rng: &mut R) -> ChoiceId {
    ids[rng.gen_range(0..ids.len())]
}

/// Greedy pick: minimal rating sum, ties broken uniformly at random.
pub fn greedy_pick<R: Rng>(pool: &ChoicePool, ids: &[ChoiceId], rng: &mut R) -> ChoiceId {
    let best = ids
        .iter()
        .map(|&id| pool.get(id).rating())
        .fold(f64::INFINITY, f64::min);
    let tied: Vec<ChoiceId> = ids
        .iter()
        .copied()
        .filter(|&id| pool.get(id).rating() == best)
        .collect();
    pick_uniform(&tied, rng)
}

fn boltzmann_pick<R: Rng>(pool: &ChoicePool, ids: &[ChoiceId], tau: f64, rng: &mut R) -> ChoiceId {
    let qs: Vec<f64> = ids.iter().map(|&id| q_value(pool.get(id))).collect();
    let probs = boltzmann_probabilities(&qs, tau);
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return ids[i];
        }
    }
    *ids.last().unwrap()
}

fn ucb1_pick<R: Rng>(pool: &ChoicePool, ids: &[ChoiceId], t: u64, rng: &mut R) -> ChoiceId {
    let unplayed: Vec<ChoiceId> = ids
        .iter()
        .copied()
        .filter(|&id| {
            let c = pool.get(id);
            c.counts[0] + c.counts[1] == 0
        })
        .collect();
    if !unplayed.is_empty() {
        return pick_uniform(&unplayed, rng);
    }
    let ln_t = (t.max(1) as f64).ln();
    let score = |id: ChoiceId| {
        let c = pool.get(id);
        let n = (c.counts[0] + c.counts[1]) as f64;
        q_value(c) + (2.0 * ln_t / n).sqrt()
    };
    let best = ids.iter().map(|&id| score(id)).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<ChoiceId> = ids.iter().copied().filter(|&id| score(id) == best).collect();
    pick_uniform(&tied, rng)
}

fn thompson_pick<R: Rng>(
    pool: &ChoicePool,
    ids: &[ChoiceId],
    sigma0: f64,
    rng: &mut R,
) -> ChoiceId {
    let mut best = f64::NEG_INFINITY;
    let mut pick = ids[0];
    for &id in ids {
        let c = pool.get(id);
        let n = (c.counts[0] + c.counts[1]) as f64;
        let sigma = sigma0 / (n + 1.0).sqrt();
        let sample = Normal::new(q_value(c), sigma).unwrap().sample(rng);
        if sample > best {
            best = sample;
            pick = id;
        }
    }
    pick
}

/// Selects among the undecided, available choices of the pool.
///
/// Returns the chosen id and whether the pick was exploratory (a hybrid
/// policy's delegated pick). `None` signals that the pool is exhausted.
pub fn select_choice<R: Rng>(
    pool: &ChoicePool,
    store: &DomainStore,
    t: u64,
    rng: &mut R,
    cfg: &StrategyConfig,
    epsilon: f64,
) -> Option<(ChoiceId, bool)> {
    let ids = pool.undecided_available(store);
    if ids.is_empty() {
        return None;
    }
    let picked = match cfg.policy {
        Policy::Greedy => (greedy_pick(pool, &ids, rng), false),
        Policy::Boltzmann => (boltzmann_pick(pool, &ids, cfg.tau, rng), false),
        Policy::Ucb1 => (ucb1_pick(pool, &ids, t, rng), false),
        Policy::Thompson => (thompson_pick(pool, &ids, cfg.thompson_sigma0, rng), false),
        Policy::EpsilonGreedy => {
            if rng.gen::<f64>() < epsilon {
                (pick_uniform(&ids, rng), true)
            } else {
                (greedy_pick(pool, &ids, rng), false)
            }
        }
        Policy::BGreedy => {
            if rng.gen::<f64>() < epsilon {
                (boltzmann_pick(pool, &ids, cfg.tau, rng), true)
            } else {
                (greedy_pick(pool, &ids, rng), false)
            }
        }
        Policy::UGreedy => {
            if rng.gen::<f64>() < epsilon {
                (ucb1_pick(pool, &ids, t, rng), true)
            } else {
                (greedy_pick(pool, &ids, rng), false)
            }
        }
        Policy::TGreedy => {
            if rng.gen::<f64>() < epsilon {
                (thompson_pick(pool, &ids, cfg.thompson_sigma0, rng), true)
            } else {
                (greedy_pick(pool, &ids, rng), false)
            }
        }
    };
    Some(picked)
}

/// Snapshot of all branch ratings keyed by `(variable, pivot)`, in the
/// canonical side order `(<=, >)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingTable {
    pub entries: Vec<RatingEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingEntry {
    pub var: VarId,
    pub pivot: Time,
    pub le_rating: f64,
    pub gt_rating: f64,
    pub le_count: u32,
    pub gt_count: u32,
}

#[derive(Debug, Error)]
pub enum RatingTableError {
    #[error("malformed rating table line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Counters reported by [`import_ratings`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImportStats {
    pub applied: usize,
    /// Table keys with no matching choice in the pool.
    pub unknown_keys: usize,
}

/// Exports the pool's ratings as an immutable snapshot.
pub fn export_ratings(pool: &ChoicePool) -> RatingTable {
    let entries = pool
        .iter()
        .map(|c| {
            let (le_rating, le_count) = c.side_state(Side::LessEq);
            let (gt_rating, gt_count) = c.side_state(Side::Greater);
            RatingEntry {
                var: c.var,
                pivot: c.pivot,
                le_rating,
                gt_rating,
                le_count,
                gt_count,
            }
        })
        .collect();
    RatingTable { entries }
}

/// Overlays a rating table onto a pool with matching choice identities.
/// Unknown keys are counted and skipped; pool choices missing from the
/// table keep their current state.
pub fn import_ratings(pool: &mut ChoicePool, table: &RatingTable) -> ImportStats {
    let mut stats = ImportStats::default();
    for e in &table.entries {
        match pool.lookup(e.var, e.pivot) {
            Some(id) => {
                let c = pool.get_mut(id);
                c.sides = [Side::LessEq, Side::Greater];
                c.ratings = [e.le_rating, e.gt_rating];
                c.counts = [e.le_count, e.gt_count];
                stats.applied += 1;
            }
            None => stats.unknown_keys += 1,
        }
    }
    stats
}

impl RatingTable {
    /// One `var:pivot le_rating gt_rating le_count gt_count` line per entry.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<(), RatingTableError> {
        for e in &self.entries {
            writeln!(
                w,
                "{}:{} {} {} {} {}",
                e.var.0, e.pivot, e.le_rating, e.gt_rating, e.le_count, e.gt_count
            )?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<RatingTable, RatingTableError> {
        let mut entries = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mal = |reason: &str| RatingTableError::Malformed {
                line: lineno + 1,
                reason: reason.to_string(),
            };
            let mut fields = line.split_whitespace();
            let key = fields.next().ok_or_else(|| mal("missing key"))?;
            let (var, pivot) = key
                .split_once(':')
                .ok_or_else(|| mal("key is not var:pivot"))?;
            let var = VarId(var.parse().map_err(|_| mal("bad variable id"))?);
            let pivot: Time = pivot.parse().map_err(|_| mal("bad pivot"))?;
            let mut num = |what: &str| -> Result<f64, RatingTableError> {
                fields
                    .next()
                    .ok_or_else(|| mal(&format!("missing {what}")))?
                    .parse()
                    .map_err(|_| mal(&format!("bad {what}")))
            };
            let le_rating = num("le rating")?;
            let gt_rating = num("gt rating")?;
            let le_count = num("le count")? as u32;
            let gt_count = num("gt count")? as u32;
            if fields.next().is_some() {
                return Err(mal("trailing fields"));
            }
            entries.push(RatingEntry {
                var,
                pivot,
                le_rating,
                gt_rating,
                le_count,
                gt_count,
            });
        }
        Ok(RatingTable { entries })
    }
}
