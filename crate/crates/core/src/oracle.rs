//! Ground-truth solver for tiny instances.
//!
//! Deliberately shares nothing with the search engine but the parsed
//! instance types: no propagators, no choices, no ratings. Job-shop optima
//! come from enumerating every per-machine operation order and taking the
//! longest path of the resulting graph; project optima come from running
//! the serial schedule-generation scheme over every precedence-feasible
//! activity order. Both enumerations cover an optimal schedule, so the
//! minimum over them is exact.

use thiserror::Error;

use crate::instances::{Instance, JsspInstance, Operation, RcpspInstance};
use crate::model::Time;

/// Hard cap on instance size; enumeration beyond it would blow up.
pub const MAX_ORACLE_SIZE: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {size} operations, oracle is guarded at {max}")]
    TooLarge { size: usize, max: usize },
}

/// Result of an exhaustive evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleResult {
    /// Minimal makespan, or `None` when nothing fits under the cap.
    pub optimum: Option<Time>,
    /// Orderings examined.
    pub nodes: u64,
}

fn guard(instance: &Instance) -> Result<(), OracleError> {
    let size = instance.size();
    if size > MAX_ORACLE_SIZE {
        Err(OracleError::TooLarge {
            size,
            max: MAX_ORACLE_SIZE,
        })
    } else {
        Ok(())
    }
}

/// Exhaustively evaluates the instance, optionally under a makespan cap.
pub fn evaluate(instance: &Instance, cap: Option<Time>) -> Result<OracleResult, OracleError> {
    guard(instance)?;
    let (best, nodes) = match instance {
        Instance::Jssp(inst) => jssp_optimum(inst),
        Instance::Rcpsp(inst) => rcpsp_optimum(inst),
    };
    let optimum = match (best, cap) {
        (Some(m), Some(c)) if m > c => None,
        (found, _) => found,
    };
    Ok(OracleResult { optimum, nodes })
}

/// Exact minimal makespan by exhaustive enumeration.
pub fn brute_force_optimum(instance: &Instance) -> Result<Time, OracleError> {
    let res = evaluate(instance, None)?;
    // An uncapped scheduling instance always has the serialized schedule.
    Ok(res.optimum.unwrap_or(0))
}

/// Whether some complete assignment meets all constraints with makespan at
/// most `cap`.
pub fn brute_force_feasible(instance: &Instance, cap: Time) -> Result<bool, OracleError> {
    Ok(evaluate(instance, Some(cap))?.optimum.is_some())
}

fn jssp_optimum(inst: &JsspInstance) -> (Option<Time>, u64) {
    // Global op ids in job order.
    let mut ops: Vec<Operation> = Vec::new();
    let mut job_of: Vec<usize> = Vec::new();
    let mut job_start: Vec<usize> = Vec::new();
    for (j, job) in inst.jobs.iter().enumerate() {
        job_start.push(ops.len());
        for &op in job {
            ops.push(op);
            job_of.push(j);
        }
    }
    if ops.is_empty() {
        return (Some(0), 1);
    }
    let n = ops.len();
    let mut per_machine: Vec<Vec<usize>> = vec![Vec::new(); inst.num_machines];
    for (i, op) in ops.iter().enumerate() {
        per_machine[op.machine].push(i);
    }
    per_machine.retain(|v| v.len() >= 2);

    // Fixed job-chain arcs.
    let mut base_arcs: Vec<(usize, usize)> = Vec::new();
    for (j, job) in inst.jobs.iter().enumerate() {
        for k in 1..job.len() {
            base_arcs.push((job_start[j] + k - 1, job_start[j] + k));
        }
    }

    let mut best: Option<Time> = None;
    let mut nodes = 0u64;
    let mut orders: Vec<Vec<usize>> = Vec::new();
    enumerate_orders(&per_machine, 0, &mut orders, &mut |machine_orders| {
        nodes += 1;
        let mut arcs = base_arcs.clone();
        for order in machine_orders {
            for w in order.windows(2) {
                arcs.push((w[0], w[1]));
            }
        }
        if let Some(makespan) = longest_path(n, &ops, &arcs) {
            best = Some(best.map_or(makespan, |b: Time| b.min(makespan)));
        }
    });
    (best, nodes)
}

/// Calls `visit` with every combination of permutations of the machine op
/// lists, reusing `current` as the partial assignment.
fn enumerate_orders(
    machines: &[Vec<usize>],
    depth: usize,
    current: &mut Vec<Vec<usize>>,
    visit: &mut impl FnMut(&[Vec<usize>]),
) {
    if depth == machines.len() {
        visit(current);
        return;
    }
    let mut perm = machines[depth].clone();
    permute(&mut perm, 0, &mut |order| {
        current.push(order.to_vec());
        enumerate_orders(machines, depth + 1, current, visit);
        current.pop();
    });
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Earliest-start makespan of the arc-ordered ops, `None` on a cycle.
fn longest_path(n: usize, ops: &[Operation], arcs: &[(usize, usize)]) -> Option<Time> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for &(a, b) in arcs {
        out[a].push(b);
        indegree[b] += 1;
    }
    let mut start = vec![0 as Time; n];
    let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut seen = 0;
    let mut makespan = 0;
    while let Some(a) = queue.pop() {
        seen += 1;
        let end = start[a] + ops[a].duration;
        makespan = makespan.max(end);
        for &b in &out[a] {
            start[b] = start[b].max(end);
            indegree[b] -= 1;
            if indegree[b] == 0 {
                queue.push(b);
            }
        }
    }
    (seen == n).then_some(makespan)
}

fn rcpsp_optimum(inst: &RcpspInstance) -> (Option<Time>, u64) {
    let n = inst.num_activities();
    if n == 0 {
        return (Some(0), 1);
    }
    // Restrict to real activities; each zero-duration, zero-demand dummy is
    // schedulable at the boundary for free, and real->real arcs are direct.
    let real: Vec<usize> = (0..n)
        .filter(|&a| inst.durations[a] > 0 || inst.demands[a].iter().any(|&d| d > 0))
        .collect();
    if real.is_empty() {
        return (Some(0), 1);
    }
    let index_of = |a: usize| real.iter().position(|&x| x == a);
    let m = real.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(a, b) in &inst.precedences {
        if let (Some(ia), Some(ib)) = (index_of(a), index_of(b)) {
            preds[ib].push(ia);
        }
    }
    let horizon: Time = real.iter().map(|&a| inst.durations[a]).sum();
    let mut scheduled: Vec<Option<(Time, Time)>> = vec![None; m];
    let mut usage: Vec<Vec<i64>> =
        vec![vec![0; horizon.max(1) as usize]; inst.capacities.len()];
    let mut best: Option<Time> = None;
    let mut nodes = 0u64;
    sgs_enumerate(
        inst,
        &real,
        &preds,
        &mut scheduled,
        &mut usage,
        0,
        0,
        &mut best,
        &mut nodes,
    );
    (best, nodes)
}

/// Depth-first enumeration of all precedence-feasible activity orders,
/// scheduling each next activity at its earliest resource-feasible time.
#[allow(clippy::too_many_arguments)]
fn sgs_enumerate(
    inst: &RcpspInstance,
    real: &[usize],
    preds: &[Vec<usize>],
    scheduled: &mut Vec<Option<(Time, Time)>>,
    usage: &mut Vec<Vec<i64>>,
    placed: usize,
    makespan: Time,
    best: &mut Option<Time>,
    nodes: &mut u64,
) {
    let m = real.len();
    if placed == m {
        *nodes += 1;
        *best = Some(best.map_or(makespan, |b| b.min(makespan)));
        return;
    }
    if let Some(b) = *best {
        if makespan >= b {
            return; // cannot improve: makespan only grows
        }
    }
    for i in 0..m {
        if scheduled[i].is_some() {
            continue;
        }
        if preds[i].iter().any(|&p| scheduled[p].is_none()) {
            continue;
        }
        let a = real[i];
        let dur = inst.durations[a];
        let ready = preds[i]
            .iter()
            .map(|&p| scheduled[p].unwrap().1)
            .max()
            .unwrap_or(0);
        // Earliest start at or after `ready` where every resource fits.
        let mut t = ready;
        loop {
            let conflict = inst.capacities.iter().enumerate().find_map(|(r, &cap)| {
                let d = inst.demands[a].get(r).copied().unwrap_or(0);
                if d == 0 {
                    return None;
                }
                (t..t + dur).find(|&u| usage[r][u as usize] + d > cap)
            });
            match conflict {
                Some(u) => t = u + 1,
                None => break,
            }
        }
        let end = t + dur;
        scheduled[i] = Some((t, end));
        for (r, &_cap) in inst.capacities.iter().enumerate() {
            let d = inst.demands[a].get(r).copied().unwrap_or(0);
            if d != 0 {
                for u in t..end {
                    usage[r][u as usize] += d;
                }
            }
        }
        sgs_enumerate(
            inst,
            real,
            preds,
            scheduled,
            usage,
            placed + 1,
            makespan.max(end),
            best,
            nodes,
        );
        for (r, &_cap) in inst.capacities.iter().enumerate() {
            let d = inst.demands[a].get(r).copied().unwrap_or(0);
            if d != 0 {
                for u in t..end {
                    usage[r][u as usize] -= d;
                }
            }
        }
        scheduled[i] = None;
    }
}

/// Instance class of the tiny generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TinyKind {
    Jssp,
    Rcpsp,
}

impl std::str::FromStr for TinyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jssp" => Ok(TinyKind::Jssp),
            "rcpsp" => Ok(TinyKind::Rcpsp),
            other => Err(format!("unknown instance kind '{other}'")),
        }
    }
}

/// Deterministic tiny instance within the oracle size guard: job shops up
/// to 3x3 with durations 1-9, projects up to 6 activities on up to 2
/// resources.
pub fn random_tiny_instance(kind: TinyKind, seed: u64) -> Instance {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    match kind {
        TinyKind::Jssp => {
            let jobs = rng.gen_range(2..=3);
            let machines = rng.gen_range(2..=3usize);
            let mut job_ops = Vec::with_capacity(jobs);
            for _ in 0..jobs {
                let mut order: Vec<usize> = (0..machines).collect();
                for i in (1..order.len()).rev() {
                    order.swap(i, rng.gen_range(0..=i));
                }
                job_ops.push(
                    order
                        .into_iter()
                        .map(|machine| Operation {
                            machine,
                            duration: rng.gen_range(1..=9),
                        })
                        .collect(),
                );
            }
            Instance::Jssp(JsspInstance {
                name: format!("tiny-jssp-{seed}"),
                num_machines: machines,
                jobs: job_ops,
            })
        }
        TinyKind::Rcpsp => {
            let n = rng.gen_range(3..=6);
            let resources = rng.gen_range(1..=2usize);
            let capacities: Vec<i64> = (0..resources).map(|_| rng.gen_range(2..=4)).collect();
            // Activities 0 and n+1 are the dummy source and sink.
            let mut durations = vec![0; n + 2];
            let mut demands = vec![vec![0; resources]; n + 2];
            for a in 1..=n {
                durations[a] = rng.gen_range(1..=9);
                for r in 0..resources {
                    demands[a][r] = rng.gen_range(0..=capacities[r]);
                }
                if demands[a].iter().all(|&d| d == 0) {
                    demands[a][0] = 1;
                }
            }
            let mut precedences = Vec::new();
            for a in 1..=n {
                for b in (a + 1)..=n {
                    if rng.gen_bool(0.3) {
                        precedences.push((a, b));
                    }
                }
            }
            for a in 1..=n {
                if !precedences.iter().any(|&(_, b)| b == a) {
                    precedences.push((0, a));
                }
                if !precedences.iter().any(|&(x, _)| x == a) {
                    precedences.push((a, n + 1));
                }
            }
            Instance::Rcpsp(RcpspInstance {
                name: format!("tiny-rcpsp-{seed}"),
                durations,
                demands,
                precedences,
                capacities,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::parse_jssp;

    fn two_by_two() -> Instance {
        Instance::Jssp(parse_jssp("tiny", "2 2\n0 3 1 2\n1 2 0 3\n").unwrap())
    }

    #[test]
    fn two_by_two_optimum_is_six() {
        assert_eq!(brute_force_optimum(&two_by_two()).unwrap(), 6);
    }

    #[test]
    fn feasibility_flips_at_the_optimum() {
        let inst = two_by_two();
        assert!(!brute_force_feasible(&inst, 5).unwrap());
        assert!(brute_force_feasible(&inst, 6).unwrap());
        assert!(!brute_force_feasible(&inst, 0).unwrap());
    }

    #[test]
    fn rcpsp_worked_example_is_seven() {
        // d = (2,3,2), demands (1,2,1), capacity 2, arc 1 -> 3. The
        // demand-2 activity can never overlap anything.
        let inst = Instance::Rcpsp(RcpspInstance {
            name: "worked".into(),
            durations: vec![0, 2, 3, 2, 0],
            demands: vec![vec![0], vec![1], vec![2], vec![1], vec![0]],
            precedences: vec![(0, 1), (0, 2), (1, 3), (2, 4), (3, 4)],
            capacities: vec![2],
        });
        assert_eq!(brute_force_optimum(&inst).unwrap(), 7);
    }

    #[test]
    fn empty_instance_has_zero_makespan() {
        let inst = Instance::Jssp(JsspInstance {
            name: "empty".into(),
            num_machines: 0,
            jobs: vec![],
        });
        assert_eq!(brute_force_optimum(&inst).unwrap(), 0);
    }

    #[test]
    fn size_guard_refuses_large_instances() {
        let inst = Instance::Jssp(JsspInstance {
            name: "big".into(),
            num_machines: 4,
            jobs: vec![
                vec![Operation { machine: 0, duration: 1 }; 4],
                vec![Operation { machine: 1, duration: 1 }; 4],
                vec![Operation { machine: 2, duration: 1 }; 4],
            ],
        });
        assert_eq!(
            brute_force_optimum(&inst),
            Err(OracleError::TooLarge { size: 12, max: 10 })
        );
    }

    #[test]
    fn generator_is_deterministic() {
        for kind in [TinyKind::Jssp, TinyKind::Rcpsp] {
            let a = random_tiny_instance(kind, 1);
            let b = random_tiny_instance(kind, 1);
            assert_eq!(a, b);
            let c = random_tiny_instance(kind, 2);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn generated_instances_stay_in_the_guard_and_terminate() {
        for seed in 0..10 {
            for kind in [TinyKind::Jssp, TinyKind::Rcpsp] {
                let inst = random_tiny_instance(kind, seed);
                assert!(inst.size() <= MAX_ORACLE_SIZE);
                let opt = brute_force_optimum(&inst).unwrap();
                assert!(opt > 0);
                assert!(brute_force_feasible(&inst, opt).unwrap());
                assert!(!brute_force_feasible(&inst, opt - 1).unwrap());
            }
        }
    }

    #[test]
    fn generated_rcpsp_is_acyclic() {
        for seed in 0..20 {
            let inst = random_tiny_instance(TinyKind::Rcpsp, seed);
            let Instance::Rcpsp(r) = &inst else { unreachable!() };
            // A successful oracle run requires a topological order to exist.
            assert!(brute_force_optimum(&inst).is_ok());
            assert!(r.precedences.iter().all(|&(a, b)| a != b));
        }
    }
}
