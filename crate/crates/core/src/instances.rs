//! Benchmark instance parsing and model construction.
//!
//! Reads the standard job-shop text layout (header line `jobs machines`,
//! then one `machine duration` pair per operation) and single-mode PSPLIB
//! `.sm` project files. Parsed instances build into [`Model`]s with an
//! optional makespan cap; run outcomes serialize as one-record-per-line
//! delimiter-separated files with a header row.

use std::collections::VecDeque;
use std::path::Path;

use thiserror::Error;

use crate::engine::{SolveResult, SolveStatus};
use crate::model::{Model, ModelBuilder, ModelError, Time, VarId};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("section '{section}': {reason}")]
    Section { section: String, reason: String },
    #[error("precedence graph has a cycle through activity {0}")]
    Cyclic(usize),
    #[error("model construction failed: {0}")]
    Model(#[from] ModelError),
}

fn syntax(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: line + 1,
        reason: reason.into(),
    }
}

/// One operation of a job: which machine it runs on and for how long.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Operation {
    pub machine: usize,
    pub duration: Time,
}

/// A job-shop instance: per job, the machine-ordered operation sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsspInstance {
    pub name: String,
    pub num_machines: usize,
    pub jobs: Vec<Vec<Operation>>,
}

/// A resource-constrained project instance including the dummy source and
/// sink activities (zero duration, zero demand).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RcpspInstance {
    pub name: String,
    pub durations: Vec<Time>,
    /// `demands[a][r]` of activity `a` on renewable resource `r`.
    pub demands: Vec<Vec<i64>>,
    /// Arcs `a -> b`: activity `a` ends before `b` starts.
    pub precedences: Vec<(usize, usize)>,
    pub capacities: Vec<i64>,
}

impl RcpspInstance {
    pub fn num_activities(&self) -> usize {
        self.durations.len()
    }

    /// Activities excluding the dummy source/sink.
    pub fn num_real_activities(&self) -> usize {
        self.num_activities().saturating_sub(2)
    }
}

/// Either benchmark class, as parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Jssp(JsspInstance),
    Rcpsp(RcpspInstance),
}

impl Instance {
    pub fn name(&self) -> &str {
        match self {
            Instance::Jssp(i) => &i.name,
            Instance::Rcpsp(i) => &i.name,
        }
    }

    /// Operation count for JSSP, non-dummy activity count for RCPSP.
    pub fn size(&self) -> usize {
        match self {
            Instance::Jssp(i) => i.jobs.iter().map(|j| j.len()).sum(),
            Instance::Rcpsp(i) => i.num_real_activities(),
        }
    }

    /// Picks the parser from the content: PSPLIB files carry their section
    /// headers, everything else is treated as job-shop text.
    pub fn parse_auto(name: &str, text: &str) -> Result<Instance, ParseError> {
        if text.contains("PRECEDENCE RELATIONS") {
            Ok(Instance::Rcpsp(parse_psplib(name, text)?))
        } else {
            Ok(Instance::Jssp(parse_jssp(name, text)?))
        }
    }
}

/// Parses the standard job-shop layout.
pub fn parse_jssp(name: &str, text: &str) -> Result<JsspInstance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| syntax(0, "empty instance"))?;
    let mut head = header.split_whitespace();
    let num_jobs: usize = head
        .next()
        .ok_or_else(|| syntax(header_no, "missing job count"))?
        .parse()
        .map_err(|_| syntax(header_no, "bad job count"))?;
    let num_machines: usize = head
        .next()
        .ok_or_else(|| syntax(header_no, "missing machine count"))?
        .parse()
        .map_err(|_| syntax(header_no, "bad machine count"))?;

    let mut jobs = Vec::with_capacity(num_jobs);
    for _ in 0..num_jobs {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| syntax(0, format!("expected {num_jobs} job lines")))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !tokens.len().is_multiple_of(2) {
            return Err(syntax(line_no, "odd token count (machine/duration pairs)"));
        }
        let mut ops = Vec::with_capacity(tokens.len() / 2);
        for pair in tokens.chunks(2) {
            let machine: usize = pair[0]
                .parse()
                .map_err(|_| syntax(line_no, format!("bad machine id '{}'", pair[0])))?;
            let duration: Time = pair[1]
                .parse()
                .map_err(|_| syntax(line_no, format!("bad duration '{}'", pair[1])))?;
            if machine >= num_machines {
                return Err(syntax(
                    line_no,
                    format!("machine id {machine} >= machine count {num_machines}"),
                ));
            }
            if duration < 0 {
                return Err(syntax(line_no, format!("negative duration {duration}")));
            }
            ops.push(Operation { machine, duration });
        }
        jobs.push(ops);
    }
    Ok(JsspInstance {
        name: name.to_string(),
        num_machines,
        jobs,
    })
}

fn section_err(section: &str, reason: impl Into<String>) -> ParseError {
    ParseError::Section {
        section: section.to_string(),
        reason: reason.into(),
    }
}

/// Parses a single-mode PSPLIB `.sm` file. Dummy source/sink activities are
/// kept as zero-length entries so the arc structure survives verbatim.
pub fn parse_psplib(name: &str, text: &str) -> Result<RcpspInstance, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let find_line = |needle: &str| lines.iter().position(|l| l.contains(needle));

    let jobs_line = find_line("jobs (incl. supersource/sink")
        .ok_or_else(|| section_err("header", "missing 'jobs (incl. supersource/sink)'"))?;
    let num_jobs: usize = lines[jobs_line]
        .rsplit(':')
        .next()
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| section_err("header", "unreadable job count"))?;

    let prec_line = find_line("PRECEDENCE RELATIONS")
        .ok_or_else(|| section_err("PRECEDENCE RELATIONS", "section missing"))?;
    let mut precedences = Vec::new();
    let mut successors_seen = 0;
    for raw in &lines[prec_line + 2..] {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            break;
        }
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| section_err("PRECEDENCE RELATIONS", format!("bad line '{line}'")))?;
        if nums.len() < 3 {
            return Err(section_err(
                "PRECEDENCE RELATIONS",
                format!("short line '{line}'"),
            ));
        }
        let job = nums[0] as usize;
        let count = nums[2] as usize;
        if nums.len() != 3 + count {
            return Err(section_err(
                "PRECEDENCE RELATIONS",
                format!("successor count mismatch on job {job}"),
            ));
        }
        for &succ in &nums[3..] {
            let succ = succ as usize;
            if job < 1 || job > num_jobs || succ < 1 || succ > num_jobs {
                return Err(section_err(
                    "PRECEDENCE RELATIONS",
                    format!("job id out of range in arc {job} -> {succ}"),
                ));
            }
            precedences.push((job - 1, succ - 1));
        }
        successors_seen += 1;
    }
    if successors_seen != num_jobs {
        return Err(section_err(
            "PRECEDENCE RELATIONS",
            format!("{successors_seen} job lines, header says {num_jobs}"),
        ));
    }

    let req_line = find_line("REQUESTS/DURATIONS")
        .ok_or_else(|| section_err("REQUESTS/DURATIONS", "section missing"))?;
    let mut durations = vec![0; num_jobs];
    let mut demands: Vec<Vec<i64>> = vec![Vec::new(); num_jobs];
    let mut req_seen = 0;
    for raw in &lines[req_line + 1..] {
        let line = raw.trim();
        if line.starts_with('*') && req_seen > 0 {
            break;
        }
        if line.is_empty() || line.starts_with('*') || line.starts_with("jobnr") || line.starts_with('-') {
            continue;
        }
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| section_err("REQUESTS/DURATIONS", format!("bad line '{line}'")))?;
        if nums.len() < 3 {
            return Err(section_err(
                "REQUESTS/DURATIONS",
                format!("short line '{line}'"),
            ));
        }
        let job = nums[0] as usize;
        if job < 1 || job > num_jobs {
            return Err(section_err(
                "REQUESTS/DURATIONS",
                format!("job id {job} out of range"),
            ));
        }
        durations[job - 1] = nums[2];
        demands[job - 1] = nums[3..].to_vec();
        req_seen += 1;
    }
    if req_seen != num_jobs {
        return Err(section_err(
            "REQUESTS/DURATIONS",
            format!("{req_seen} rows, header says {num_jobs}"),
        ));
    }

    let avail_line = find_line("RESOURCEAVAILABILITIES")
        .ok_or_else(|| section_err("RESOURCEAVAILABILITIES", "section missing"))?;
    let mut capacities = Vec::new();
    for raw in &lines[avail_line + 1..] {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            if !capacities.is_empty() {
                break;
            }
            continue;
        }
        if line.starts_with('R') || line.starts_with('#') {
            continue;
        }
        capacities = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| section_err("RESOURCEAVAILABILITIES", format!("bad line '{line}'")))?;
        break;
    }
    if capacities.is_empty() {
        return Err(section_err("RESOURCEAVAILABILITIES", "no capacity row"));
    }
    let num_resources = capacities.len();
    for (job, d) in demands.iter_mut().enumerate() {
        if d.len() != num_resources {
            return Err(section_err(
                "REQUESTS/DURATIONS",
                format!(
                    "job {} lists {} demands, expected {}",
                    job + 1,
                    d.len(),
                    num_resources
                ),
            ));
        }
    }

    Ok(RcpspInstance {
        name: name.to_string(),
        durations,
        demands,
        precedences,
        capacities,
    })
}

fn check_acyclic(n: usize, arcs: &[(usize, usize)]) -> Result<(), ParseError> {
    let mut indegree = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in arcs {
        out[a].push(b);
        indegree[b] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut seen = 0;
    while let Some(a) = queue.pop_front() {
        seen += 1;
        for &b in &out[a] {
            indegree[b] -= 1;
            if indegree[b] == 0 {
                queue.push_back(b);
            }
        }
    }
    if seen == n {
        Ok(())
    } else {
        let witness = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        Err(ParseError::Cyclic(witness + 1))
    }
}

/// Builds the constraint model of an instance. The horizon is the duration
/// sum, which every feasible schedule fits; `cap_override` applies a tighter
/// makespan cap on top.
pub fn build_model(instance: &Instance, cap_override: Option<Time>) -> Result<Model, ParseError> {
    let mut b = ModelBuilder::new();
    match instance {
        Instance::Jssp(inst) => {
            let horizon: Time = inst
                .jobs
                .iter()
                .flat_map(|j| j.iter().map(|o| o.duration))
                .sum();
            let mut per_machine: Vec<Vec<VarId>> = vec![Vec::new(); inst.num_machines];
            for job in &inst.jobs {
                let mut prev: Option<VarId> = None;
                for op in job {
                    let v = b.new_interval(0, horizon - op.duration, op.duration)?;
                    per_machine[op.machine].push(v);
                    if let Some(p) = prev {
                        b.add_precedence(p, v, 0)?;
                    }
                    prev = Some(v);
                }
            }
            for ops in per_machine {
                if ops.len() >= 2 {
                    b.add_no_overlap(ops)?;
                }
            }
        }
        Instance::Rcpsp(inst) => {
            let n = inst.num_activities();
            check_acyclic(n, &inst.precedences)?;
            let horizon: Time = inst.durations.iter().sum();
            let vars: Vec<VarId> = inst
                .durations
                .iter()
                .map(|&d| b.new_interval(0, horizon - d, d))
                .collect::<Result<_, _>>()?;
            for &(x, y) in &inst.precedences {
                b.add_precedence(vars[x], vars[y], 0)?;
            }
            for (r, &cap) in inst.capacities.iter().enumerate() {
                let mut users = Vec::new();
                let mut demands = Vec::new();
                for (a, v) in vars.iter().enumerate() {
                    let d = inst.demands[a].get(r).copied().unwrap_or(0);
                    if d > 0 {
                        users.push(*v);
                        demands.push(d);
                    }
                }
                b.add_cumulative(users, demands, cap)?;
            }
        }
    }
    if let Some(cap) = cap_override {
        b.limit_objective(cap);
    }
    Ok(b.build())
}

/// Valid makespan lower bound from critical paths and machine/resource
/// loads; the search only ever proves caps at or above it infeasible.
pub fn heuristic_lower_bound(instance: &Instance) -> Time {
    match instance {
        Instance::Jssp(inst) => {
            let job_bound = inst
                .jobs
                .iter()
                .map(|j| j.iter().map(|o| o.duration).sum::<Time>())
                .max()
                .unwrap_or(0);
            let mut machine_load = vec![0; inst.num_machines];
            for job in &inst.jobs {
                for op in job {
                    machine_load[op.machine] += op.duration;
                }
            }
            job_bound.max(machine_load.into_iter().max().unwrap_or(0))
        }
        Instance::Rcpsp(inst) => {
            let n = inst.num_activities();
            // Longest path over the precedence DAG.
            let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut indegree = vec![0usize; n];
            for &(a, c) in &inst.precedences {
                out[a].push(c);
                indegree[c] += 1;
            }
            let mut dist: Vec<Time> = inst.durations.clone();
            let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
            let mut critical = 0;
            while let Some(a) = queue.pop_front() {
                critical = critical.max(dist[a]);
                for &c in &out[a] {
                    dist[c] = dist[c].max(dist[a] + inst.durations[c]);
                    indegree[c] -= 1;
                    if indegree[c] == 0 {
                        queue.push_back(c);
                    }
                }
            }
            let mut best = critical;
            for (r, &cap) in inst.capacities.iter().enumerate() {
                if cap <= 0 {
                    continue;
                }
                let work: i64 = (0..n)
                    .map(|a| inst.demands[a].get(r).copied().unwrap_or(0) * inst.durations[a])
                    .sum();
                best = best.max((work + cap - 1) / cap);
            }
            best
        }
    }
}

/// Outcome of one solver run, flattened for result files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub strategy: String,
    pub seed: u64,
    /// Deterministic digest of the full parameter set.
    pub config_fingerprint: String,
    pub status: String,
    pub objective: Option<Time>,
    pub proven_bound: Option<Time>,
    pub branches: u64,
    pub restarts: u64,
    pub rollbacks: u64,
    pub elapsed_s: f64,
}

impl RunRecord {
    pub fn from_result(
        instance: &str,
        strategy: &str,
        seed: u64,
        fingerprint: &str,
        res: &SolveResult,
    ) -> Self {
        let status = match res.status {
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::SolutionFound(_) => "solution",
            SolveStatus::LimitReached => "limit",
        };
        RunRecord {
            instance: instance.to_string(),
            strategy: strategy.to_string(),
            seed,
            config_fingerprint: fingerprint.to_string(),
            status: status.to_string(),
            objective: res.best_objective,
            proven_bound: res.proven_bound,
            branches: res.branches,
            restarts: res.restarts,
            rollbacks: res.rollbacks,
            elapsed_s: res.elapsed.as_secs_f64(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
}

pub const RESULT_COLUMNS: [&str; 11] = [
    "instance",
    "strategy",
    "seed",
    "config",
    "status",
    "objective",
    "proven_bound",
    "branches",
    "restarts",
    "rollbacks",
    "elapsed_s",
];

fn opt_time_to_field(t: Option<Time>) -> String {
    t.map(|v| v.to_string()).unwrap_or_default()
}

fn field_to_opt_time(s: &str) -> Result<Option<Time>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("bad integer '{s}'"))
    }
}

/// Writes records as a comma-separated file with a header row.
pub fn write_results(records: &[RunRecord], path: &Path) -> Result<(), ResultsError> {
    let io_err = |source| ResultsError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => io_err(io),
        other => ResultsError::Format {
            path: path.display().to_string(),
            reason: format!("{other:?}"),
        },
    })?;
    w.write_record(RESULT_COLUMNS).map_err(|e| ResultsError::Format {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    for r in records {
        w.write_record([
            r.instance.as_str(),
            r.strategy.as_str(),
            &r.seed.to_string(),
            r.config_fingerprint.as_str(),
            r.status.as_str(),
            &opt_time_to_field(r.objective),
            &opt_time_to_field(r.proven_bound),
            &r.branches.to_string(),
            &r.restarts.to_string(),
            &r.rollbacks.to_string(),
            &r.elapsed_s.to_string(),
        ])
        .map_err(|e| ResultsError::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Reads a result file written by [`write_results`]; round-trips exactly.
pub fn read_results(path: &Path) -> Result<Vec<RunRecord>, ResultsError> {
    let fmt_err = |reason: String| ResultsError::Format {
        path: path.display().to_string(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => ResultsError::Io {
            path: path.display().to_string(),
            source: io,
        },
        other => fmt_err(format!("{other:?}")),
    })?;
    {
        let headers = r.headers().map_err(|e| fmt_err(e.to_string()))?;
        if headers.iter().ne(RESULT_COLUMNS) {
            return Err(fmt_err(format!("unexpected header row: {headers:?}")));
        }
    }
    let mut records = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| fmt_err(e.to_string()))?;
        if row.len() != RESULT_COLUMNS.len() {
            return Err(fmt_err(format!("row has {} fields", row.len())));
        }
        let parse_u64 = |s: &str| s.parse::<u64>().map_err(|_| fmt_err(format!("bad count '{s}'")));
        records.push(RunRecord {
            instance: row[0].to_string(),
            strategy: row[1].to_string(),
            seed: parse_u64(&row[2])?,
            config_fingerprint: row[3].to_string(),
            status: row[4].to_string(),
            objective: field_to_opt_time(&row[5]).map_err(&fmt_err)?,
            proven_bound: field_to_opt_time(&row[6]).map_err(&fmt_err)?,
            branches: parse_u64(&row[7])?,
            restarts: parse_u64(&row[8])?,
            rollbacks: parse_u64(&row[9])?,
            elapsed_s: row[10]
                .parse()
                .map_err(|_| fmt_err(format!("bad elapsed '{}'", &row[10])))?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Constraint;

    const TINY_JSSP: &str = "2 2\n0 3 1 2\n1 2 0 3\n";

    #[test]
    fn parses_the_two_by_two() {
        let inst = parse_jssp("tiny", TINY_JSSP).unwrap();
        assert_eq!(inst.jobs.len(), 2);
        assert_eq!(
            inst.jobs[0],
            vec![
                Operation { machine: 0, duration: 3 },
                Operation { machine: 1, duration: 2 }
            ]
        );
        assert_eq!(
            inst.jobs[1],
            vec![
                Operation { machine: 1, duration: 2 },
                Operation { machine: 0, duration: 3 }
            ]
        );
    }

    #[test]
    fn parses_single_op_instance() {
        let inst = parse_jssp("one", "1 1\n0 5\n").unwrap();
        assert_eq!(inst.jobs, vec![vec![Operation { machine: 0, duration: 5 }]]);
    }

    #[test]
    fn rejects_odd_token_count() {
        let err = parse_jssp("bad", "2 2\n0 3 1\n1 2 0 3\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_machine_id_out_of_range() {
        let err = parse_jssp("bad", "1 2\n0 3 2 4\n").unwrap_err();
        assert!(err.to_string().contains("machine id 2"));
    }

    #[test]
    fn rejects_negative_duration() {
        let err = parse_jssp("bad", "1 1\n0 -3\n").unwrap_err();
        assert!(err.to_string().contains("negative duration"));
    }

    fn mini_sm(successor_line: &str) -> String {
        format!(
            "************************************************************************\n\
             jobs (incl. supersource/sink ):  4\n\
             RESOURCES\n\
               - renewable                 :  2   R\n\
             ************************************************************************\n\
             PRECEDENCE RELATIONS:\n\
             jobnr.    #modes  #successors   successors\n\
                1        1          2           2   3\n\
                2        1          1           4\n\
             {successor_line}\n\
                4        1          0        \n\
             ************************************************************************\n\
             REQUESTS/DURATIONS:\n\
             jobnr. mode duration  R 1  R 2\n\
             ------------------------------------------------------------------------\n\
              1      1     0       0    0\n\
              2      1     3       2    1\n\
              3      1     2       1    0\n\
              4      1     0       0    0\n\
             ************************************************************************\n\
             RESOURCEAVAILABILITIES:\n\
               R 1  R 2\n\
                2    1\n\
             ************************************************************************\n"
        )
    }

    #[test]
    fn parses_mini_psplib() {
        let text = mini_sm("   3        1          1           4");
        let inst = parse_psplib("mini", &text).unwrap();
        assert_eq!(inst.num_activities(), 4);
        assert_eq!(inst.durations, vec![0, 3, 2, 0]);
        assert_eq!(inst.capacities, vec![2, 1]);
        assert_eq!(inst.demands[1], vec![2, 1]);
        assert_eq!(inst.precedences, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn cyclic_successors_fail_at_model_build() {
        let text = mini_sm("   3        1          1           1");
        let inst = parse_psplib("cyc", &text).unwrap();
        let err = build_model(&Instance::Rcpsp(inst), None).unwrap_err();
        assert!(matches!(err, ParseError::Cyclic(_)), "{err}");
    }

    #[test]
    fn missing_section_is_named() {
        let err = parse_psplib("bad", "jobs (incl. supersource/sink ):  4\n").unwrap_err();
        assert!(err.to_string().contains("PRECEDENCE RELATIONS"));
    }

    #[test]
    fn jssp_model_structure() {
        let inst = Instance::Jssp(parse_jssp("tiny", TINY_JSSP).unwrap());
        let model = build_model(&inst, None).unwrap();
        assert_eq!(model.num_vars(), 4);
        let mut precedences = 0;
        let mut no_overlaps = 0;
        for c in model.constraints() {
            match c {
                Constraint::Precedence { .. } => precedences += 1,
                Constraint::NoOverlap { .. } => no_overlaps += 1,
                _ => {}
            }
        }
        assert_eq!(precedences, 2);
        assert_eq!(no_overlaps, 2);
        // Horizon: sum of durations.
        assert_eq!(model.var(VarId(0)).start_max, 10 - 3);
    }

    #[test]
    fn rcpsp_model_has_one_cumulative_per_resource() {
        let text = mini_sm("   3        1          1           4");
        let inst = Instance::Rcpsp(parse_psplib("mini", &text).unwrap());
        let model = build_model(&inst, None).unwrap();
        let cumulatives = model
            .constraints()
            .iter()
            .filter(|c| matches!(c, Constraint::Cumulative { .. }))
            .count();
        assert_eq!(cumulatives, 2);
        assert_eq!(model.num_vars(), 4);
    }

    #[test]
    fn cap_override_is_applied() {
        let inst = Instance::Jssp(parse_jssp("tiny", TINY_JSSP).unwrap());
        let model = build_model(&inst, Some(6)).unwrap();
        assert_eq!(model.objective_cap(), Some(6));
        assert_eq!(model.var(VarId(0)).start_max, 3);
    }

    #[test]
    fn heuristic_bound_on_the_two_by_two() {
        let inst = Instance::Jssp(parse_jssp("tiny", TINY_JSSP).unwrap());
        // Machine loads: M0 = 6, M1 = 4; job lengths 5 and 5.
        assert_eq!(heuristic_lower_bound(&inst), 6);
    }

    #[test]
    fn horizon_admits_every_feasible_schedule() {
        use crate::oracle::{brute_force_feasible, brute_force_optimum, random_tiny_instance, TinyKind};
        for kind in [TinyKind::Jssp, TinyKind::Rcpsp] {
            for seed in 40..46 {
                let inst = random_tiny_instance(kind, seed);
                let model = build_model(&inst, None).unwrap();
                let horizon = model
                    .variables()
                    .iter()
                    .map(|v| v.start_max + v.length)
                    .max()
                    .unwrap();
                let optimum = brute_force_optimum(&inst).unwrap();
                assert!(optimum <= horizon);
                assert!(brute_force_feasible(&inst, horizon).unwrap());
            }
        }
    }

    #[test]
    fn results_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        let records = vec![
            RunRecord {
                instance: "a".into(),
                strategy: "b-greedy".into(),
                seed: 7,
                config_fingerprint: "deadbeef".into(),
                status: "infeasible".into(),
                objective: None,
                proven_bound: Some(42),
                branches: 1234,
                restarts: 3,
                rollbacks: 11,
                elapsed_s: 0.25,
            },
            RunRecord {
                instance: "c".into(),
                strategy: "greedy".into(),
                seed: 8,
                config_fingerprint: "deadbeef".into(),
                status: "solution".into(),
                objective: Some(99),
                proven_bound: Some(99),
                branches: 55,
                restarts: 0,
                rollbacks: 0,
                elapsed_s: 0.125,
            },
            RunRecord {
                instance: "d".into(),
                strategy: "ucb1".into(),
                seed: 9,
                config_fingerprint: "feedc0de".into(),
                status: "limit".into(),
                objective: None,
                proven_bound: None,
                branches: 10,
                restarts: 1,
                rollbacks: 2,
                elapsed_s: 1.5,
            },
        ];
        write_results(&records, &path).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn empty_record_list_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_results(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("instance,"));
        assert!(read_results(&path).unwrap().is_empty());
    }

    #[test]
    fn missing_file_is_an_io_error_with_path() {
        let err = read_results(Path::new("/nonexistent/file.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/file.csv"));
    }
}
