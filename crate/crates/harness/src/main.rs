//! Command-line surface of the search kernel: proof runs, lower-bound
//! ramping, carryover learning curves, parameter sweeps, result-set
//! comparison and the oracle cross-check.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};

use fds_core::engine::{EngineConfig, Limits, SbCriterion};
use fds_core::instances::{write_results, Instance, RunRecord};
use fds_core::model::Time;
use fds_core::oracle::TinyKind;
use fds_core::rating::{Policy, RatingTable, StrategyConfig};
use fds_harness::{
    cmd_carryover, cmd_compare, cmd_lb_search, cmd_oracle_check, cmd_prove, cmd_sweep, desk,
    Metric, RunSpec,
};

#[derive(Parser)]
#[command(
    name = "fds",
    about = "Failure-directed search kernel for job-shop and project scheduling",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Strategy, engine and budget flags shared by the run-style subcommands.
/// Boolean flags take an explicit value, e.g. `--use-nogoods false`.
#[derive(Args, Debug, Clone)]
struct ConfigFlags {
    /// greedy | epsilon-greedy | boltzmann | ucb1 | thompson | b-greedy |
    /// u-greedy | t-greedy
    #[arg(long, default_value = "b-greedy")]
    strategy: Policy,
    /// Exploration rate of the hybrid strategies.
    #[arg(long, default_value_t = 0.10)]
    epsilon: f64,
    /// Multiplier applied to epsilon at each restart.
    #[arg(long, default_value_t = 1.0)]
    epsilon_decay: f64,
    /// Boltzmann temperature.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Probe exploratory choices and keep only those with a failing branch.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    rollback: bool,
    #[arg(long, default_value_t = 30)]
    rating_average_length: u32,
    #[arg(long, default_value_t = 0.3)]
    initial_rating: f64,
    #[arg(long, default_value_t = 0.9)]
    both_fail_reward_factor: f64,
    /// Divide local ratings by the running per-depth average.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    rating_average_comparison: bool,
    /// Freeze loaded ratings for the whole run (carryover: from run 2 on).
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    freeze_ratings: bool,
    #[arg(long, default_value_t = 1.0)]
    thompson_sigma0: f64,
    #[arg(long, default_value_t = 100.0)]
    initial_restart_limit: f64,
    #[arg(long, default_value_t = 1.15)]
    restart_growth_factor: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    use_nogoods: bool,
    #[arg(long, default_value_t = 8)]
    strong_branching_size: u32,
    #[arg(long, default_value_t = 4)]
    strong_branching_depth: u32,
    /// left | right | both
    #[arg(long, default_value = "left")]
    strong_branching_criterion: SbCriterion,
    #[arg(long)]
    max_counter_after_restart: Option<u32>,
    #[arg(long)]
    max_counter_after_solution: Option<u32>,
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    reset_restarts_after_solution: bool,
    /// Pivot spacing relative to activity length.
    #[arg(long, default_value_t = 0.7)]
    length_step_ratio: f64,
    /// Compute one shared pivot step from the mean length.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    uniform_choice_step: bool,
    #[arg(long, default_value_t = 20)]
    max_initial_choices_per_variable: u32,
    /// Score non-failing branches 1 instead of 1 + 0.5^n.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    sfds_mode: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Budget on propagated tree branches.
    #[arg(long)]
    branch_limit: Option<u64>,
}

impl ConfigFlags {
    fn spec(&self) -> RunSpec {
        RunSpec {
            strategy: StrategyConfig {
                policy: self.strategy,
                epsilon: self.epsilon,
                epsilon_decay: self.epsilon_decay,
                tau: self.tau,
                rollback: self.rollback,
                rating_average_length: self.rating_average_length,
                initial_rating: self.initial_rating,
                both_fail_reward_factor: self.both_fail_reward_factor,
                rating_average_comparison: self.rating_average_comparison,
                freeze_ratings: self.freeze_ratings,
                thompson_sigma0: self.thompson_sigma0,
            },
            engine: EngineConfig {
                initial_restart_limit: self.initial_restart_limit,
                restart_growth_factor: self.restart_growth_factor,
                restarts_enabled: true,
                use_nogoods: self.use_nogoods,
                strong_branching_size: self.strong_branching_size,
                strong_branching_depth: self.strong_branching_depth,
                strong_branching_criterion: self.strong_branching_criterion,
                max_counter_after_restart: self.max_counter_after_restart,
                max_counter_after_solution: self.max_counter_after_solution,
                reset_restarts_after_solution: self.reset_restarts_after_solution,
                length_step_ratio: self.length_step_ratio,
                uniform_choice_step: self.uniform_choice_step,
                max_initial_choices_per_variable: self.max_initial_choices_per_variable,
                sfds_mode: self.sfds_mode,
            },
            seed: self.seed,
            limits: Limits {
                time_limit: self.time_limit.map(Duration::from_secs_f64),
                branch_limit: self.branch_limit,
            },
        }
    }
}

#[derive(Args, Debug, Clone)]
struct InstanceArg {
    /// Instance file path, or '-' for standard input.
    #[arg(long)]
    instance: String,
    /// auto | jssp | rcpsp
    #[arg(long, default_value = "auto")]
    format: String,
}

impl InstanceArg {
    fn load(&self) -> Result<Instance> {
        let (name, text) = if self.instance == "-" {
            let mut text = String::new();
            std::io::stdin()
                .read_to_string(&mut text)
                .context("reading instance from stdin")?;
            ("stdin".to_string(), text)
        } else {
            let path = Path::new(&self.instance);
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.instance.clone());
            (name, text)
        };
        let inst = match self.format.as_str() {
            "auto" => Instance::parse_auto(&name, &text)?,
            "jssp" => Instance::Jssp(fds_core::instances::parse_jssp(&name, &text)?),
            "rcpsp" => Instance::Rcpsp(fds_core::instances::parse_psplib(&name, &text)?),
            other => bail!("unknown format '{other}'"),
        };
        Ok(inst)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Prove a makespan cap infeasible (or find the capped optimum).
    Prove {
        #[command(flatten)]
        instance: InstanceArg,
        /// Makespan cap injected into the model.
        #[arg(long)]
        cap: Time,
        #[command(flatten)]
        config: ConfigFlags,
        /// Load initial branch ratings from a table.
        #[arg(long)]
        ratings_in: Option<PathBuf>,
        /// Write final branch ratings to a table.
        #[arg(long)]
        ratings_out: Option<PathBuf>,
        /// Append-style result file (CSV with header).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Ramp a lower bound by proving increasing caps infeasible.
    LbSearch {
        #[command(flatten)]
        instance: InstanceArg,
        #[command(flatten)]
        config: ConfigFlags,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Repeat one proof, carrying learned ratings into each next run.
    Carryover {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        cap: Time,
        /// Number of consecutive runs.
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[command(flatten)]
        config: ConfigFlags,
        #[arg(long)]
        ratings_out: Option<PathBuf>,
    },
    /// Cartesian-product parameter sweep over capped instances.
    Sweep {
        /// Instance files (repeatable).
        #[arg(long, required = true)]
        instance: Vec<String>,
        /// Caps aligned with the instances (repeatable).
        #[arg(long, required = true)]
        cap: Vec<Time>,
        /// Grid axis `key=v1,v2,...`; keys are the flag names (repeatable).
        #[arg(long)]
        grid: Vec<String>,
        /// Seeds to average over (repeatable).
        #[arg(long, default_values_t = [1u64])]
        seeds: Vec<u64>,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Statistically compare two result files (paired by instance).
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// branches | time
        #[arg(long, default_value = "branches")]
        metric: Metric,
    },
    /// Cross-check engine verdicts against the exhaustive oracle.
    OracleCheck {
        /// jssp | rcpsp
        #[arg(long, default_value = "jssp")]
        kind: TinyKind,
        /// Number of random tiny instances.
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Emit a deterministic desk-scale instance in job-shop text form.
    GenInstance {
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long, default_value_t = 3)]
        machines: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn print_record(r: &RunRecord) {
    println!(
        "{} strategy={} seed={} status={} objective={} bound={} branches={} restarts={} rollbacks={} elapsed={:.3}s",
        r.instance,
        r.strategy,
        r.seed,
        r.status,
        r.objective.map_or("-".into(), |v| v.to_string()),
        r.proven_bound.map_or("-".into(), |v| v.to_string()),
        r.branches,
        r.restarts,
        r.rollbacks,
        r.elapsed_s,
    );
}

fn write_output(records: &[RunRecord], output: Option<&PathBuf>) -> Result<()> {
    if let Some(path) = output {
        write_results(records, path)?;
        eprintln!("wrote {} record(s) to {}", records.len(), path.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Prove {
            instance,
            cap,
            config,
            ratings_in,
            ratings_out,
            output,
        } => {
            let inst = instance.load()?;
            let spec = config.spec();
            let (record, res) = if ratings_in.is_some() || ratings_out.is_some() {
                // Ratings IO needs the solver object rather than the one-shot.
                let model = fds_core::instances::build_model(&inst, Some(cap))?;
                let mut solver = fds_core::engine::Solver::new(
                    &model,
                    spec.strategy.clone(),
                    spec.engine.clone(),
                    spec.seed,
                );
                if let Some(path) = &ratings_in {
                    let file = std::fs::File::open(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let table = RatingTable::read_text(std::io::BufReader::new(file))?;
                    let stats = solver.import_ratings(&table);
                    if stats.unknown_keys > 0 {
                        eprintln!("warning: {} rating keys had no matching choice", stats.unknown_keys);
                    }
                }
                let res = solver.run(&spec.limits);
                if let Some(path) = &ratings_out {
                    let mut file = std::fs::File::create(path)
                        .with_context(|| format!("writing {}", path.display()))?;
                    solver.export_ratings().write_text(&mut file)?;
                }
                let record = RunRecord::from_result(
                    inst.name(),
                    spec.strategy.policy.name(),
                    spec.seed,
                    &fds_harness::config_fingerprint(&spec.strategy, &spec.engine),
                    &res,
                );
                (record, res)
            } else {
                cmd_prove(&inst, cap, &spec)?
            };
            print_record(&record);
            if let Some(rate) = res.rollback_rate() {
                println!(
                    "exploratory={} rollbacks={} rollback_rate={:.3}",
                    res.exploratory_selections, res.rollbacks, rate
                );
            }
            write_output(&[record], output.as_ref())?;
        }
        Command::LbSearch {
            instance,
            config,
            output,
        } => {
            let inst = instance.load()?;
            let spec = config.spec();
            let time_limit = spec
                .limits
                .time_limit
                .unwrap_or_else(|| Duration::from_secs(60));
            let report = cmd_lb_search(&inst, time_limit, &spec)?;
            for r in &report.records {
                print_record(r);
            }
            println!(
                "lower_bound={} closed={} proofs={}",
                report.bound,
                report.closed,
                report.records.len()
            );
            write_output(&report.records, output.as_ref())?;
        }
        Command::Carryover {
            instance,
            cap,
            runs,
            config,
            ratings_out,
        } => {
            let inst = instance.load()?;
            let spec = config.spec();
            let report = cmd_carryover(&inst, cap, runs, &spec, config.freeze_ratings)?;
            for (i, b) in report.branches.iter().enumerate() {
                let rate = report.rollback_rates[i]
                    .map_or("-".to_string(), |r| format!("{r:.3}"));
                println!(
                    "run={} branches={} ratio={:.4} rollback_rate={}",
                    i + 1,
                    b,
                    report.ratios[i],
                    rate
                );
            }
            if report.aborted {
                eprintln!("aborted: a run hit its budget; output is partial");
            }
            if let (Some(path), Some(table)) = (&ratings_out, &report.final_ratings) {
                let mut file = std::fs::File::create(path)
                    .with_context(|| format!("writing {}", path.display()))?;
                table.write_text(&mut file)?;
            }
        }
        Command::Sweep {
            instance,
            cap,
            grid,
            seeds,
            config,
        } => {
            if instance.len() != cap.len() {
                bail!(
                    "{} instances but {} caps; pass one --cap per --instance",
                    instance.len(),
                    cap.len()
                );
            }
            let mut pairs = Vec::new();
            for (path, c) in instance.iter().zip(&cap) {
                let arg = InstanceArg {
                    instance: path.clone(),
                    format: "auto".to_string(),
                };
                pairs.push((arg.load()?, *c));
            }
            let mut axes = Vec::new();
            for g in &grid {
                let (key, values) = g
                    .split_once('=')
                    .with_context(|| format!("grid axis '{g}' is not key=v1,v2"))?;
                axes.push((
                    key.to_string(),
                    values.split(',').map(|v| v.trim().to_string()).collect(),
                ));
            }
            let spec = config.spec();
            let report = cmd_sweep(&axes, &pairs, &seeds, &spec)?;
            for (i, cell) in report.cells.iter().enumerate() {
                let label: Vec<String> = cell
                    .assignments
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect();
                println!(
                    "cell={} [{}] runs={} total_branches={} total_time={:.3}s{}",
                    i,
                    label.join(" "),
                    cell.runs,
                    cell.total_branches,
                    cell.total_elapsed_s,
                    if i == report.best { "  <- best" } else { "" }
                );
            }
        }
        Command::Compare { a, b, metric } => {
            let report = cmd_compare(&a, &b, metric)?;
            for (name, va, vb) in &report.per_instance {
                println!("{name}: a={va} b={vb} diff={}", va - vb);
            }
            let wilcoxon = report
                .wilcoxon
                .as_ref()
                .map_or("-".to_string(), |w| format!("{:.6}", w.p));
            let t = report
                .paired_t
                .as_ref()
                .map_or("-".to_string(), |t| format!("{:.6}", t.p));
            println!(
                "mean_diff={} wilcoxon_p={} paired_t_p={} significant_0.05={} significant_0.005={}",
                report.mean_diff, wilcoxon, t, report.significant_05, report.significant_005
            );
        }
        Command::OracleCheck {
            kind,
            count,
            config,
        } => {
            let spec = config.spec();
            let report = cmd_oracle_check(kind, count, config.seed, &spec)?;
            for m in &report.mismatches {
                eprintln!("MISMATCH {m}");
            }
            println!(
                "checked={} mismatches={}",
                report.checked,
                report.mismatches.len()
            );
            if !report.mismatches.is_empty() {
                bail!("oracle check failed");
            }
        }
        Command::GenInstance {
            jobs,
            machines,
            seed,
        } => {
            print!("{}", desk::jssp_text(&desk::medium_jssp(jobs, machines, seed)));
        }
    }
    Ok(())
}
