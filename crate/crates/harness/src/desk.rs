//! Deterministic desk-scale instance generation for experiments and the
//! acceptance suite: small enough to prove in seconds, large enough that
//! choice ordering matters.

use fds_core::instances::{JsspInstance, Operation, RcpspInstance};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Job shop with every job visiting every machine once in a random order,
/// durations 1-9.
pub fn medium_jssp(jobs: usize, machines: usize, seed: u64) -> JsspInstance {
    medium_jssp_durations(jobs, machines, seed, 1, 9)
}

/// As [`medium_jssp`] with an explicit duration range.
pub fn medium_jssp_durations(
    jobs: usize,
    machines: usize,
    seed: u64,
    dur_lo: i64,
    dur_hi: i64,
) -> JsspInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
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
                    duration: rng.gen_range(dur_lo..=dur_hi),
                })
                .collect(),
        );
    }
    JsspInstance {
        name: format!("jssp-{jobs}x{machines}-d{dur_lo}-{dur_hi}-s{seed}"),
        num_machines: machines,
        jobs: job_ops,
    }
}

/// Project instance with dummy source/sink, durations 1-9 and fairly tight
/// renewable resources.
pub fn medium_rcpsp(activities: usize, resources: usize, seed: u64) -> RcpspInstance {
    medium_rcpsp_durations(activities, resources, seed, 1, 9)
}

/// As [`medium_rcpsp`] with an explicit duration range.
pub fn medium_rcpsp_durations(
    activities: usize,
    resources: usize,
    seed: u64,
    dur_lo: i64,
    dur_hi: i64,
) -> RcpspInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = activities;
    let capacities: Vec<i64> = (0..resources).map(|_| rng.gen_range(3..=5)).collect();
    let mut durations = vec![0; n + 2];
    let mut demands = vec![vec![0; resources]; n + 2];
    for a in 1..=n {
        durations[a] = rng.gen_range(dur_lo..=dur_hi);
        for r in 0..resources {
            demands[a][r] = rng.gen_range(0..=capacities[r].min(3));
        }
        if demands[a].iter().all(|&d| d == 0) {
            demands[a][rng.gen_range(0..resources)] = 1;
        }
    }
    let mut precedences = Vec::new();
    for a in 1..=n {
        for b in (a + 1)..=n {
            if rng.gen_bool(0.2) {
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
    RcpspInstance {
        name: format!("rcpsp-{n}x{resources}-d{dur_lo}-{dur_hi}-s{seed}"),
        durations,
        demands,
        precedences,
        capacities,
    }
}

/// Resource-heavy project family used by the pivot-spacing sweep: twelve
/// activities on two capacity-4..5 resources with sparse precedences, so
/// the cumulative constraints dominate the proofs.
pub fn sweep_rcpsp(seed: u64) -> RcpspInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 12;
    let resources = 2;
    let capacities: Vec<i64> = (0..resources).map(|_| rng.gen_range(4..=5)).collect();
    let mut durations = vec![0; n + 2];
    let mut demands = vec![vec![0; resources]; n + 2];
    for a in 1..=n {
        durations[a] = rng.gen_range(1..=9);
        for r in 0..resources {
            demands[a][r] = rng.gen_range(0..=3.min(capacities[r]));
        }
        if demands[a].iter().all(|&d| d == 0) {
            demands[a][rng.gen_range(0..resources)] = 1;
        }
    }
    let mut precedences = Vec::new();
    for a in 1..=n {
        for b in (a + 1)..=n {
            if rng.gen_ratio(10, 100) {
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
    RcpspInstance {
        name: format!("sweep-rcpsp-{seed}"),
        durations,
        demands,
        precedences,
        capacities,
    }
}

/// Standard job-shop text form of an instance.
pub fn jssp_text(inst: &JsspInstance) -> String {
    let mut out = format!("{} {}\n", inst.jobs.len(), inst.num_machines);
    for job in &inst.jobs {
        let line: Vec<String> = job
            .iter()
            .flat_map(|op| [op.machine.to_string(), op.duration.to_string()])
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
