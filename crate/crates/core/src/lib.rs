//! A constraint-programming solver kernel for disjunctive and cumulative
//! scheduling, built around failure-directed search: branching decisions
//! are rated by how strongly they propagate or fail, and bandit-style
//! selection policies spend the ratings to shrink the proof tree.
//!
//! The crate splits into:
//! - [`model`]: interval variables, constraints, makespan caps;
//! - [`domain`]: the trail-backed bound store;
//! - [`propagation`]: filtering to fixpoint and the local branch score;
//! - [`choice`]: the pool of `(variable, pivot)` domain splits;
//! - [`rating`]: rating updates, selection policies, rating persistence;
//! - [`engine`]: the search loop with restarts, nogoods, strong branching
//!   and choice rollback;
//! - [`instances`]: benchmark parsers, model building, result files;
//! - [`oracle`]: an independent exhaustive solver for tiny instances.

pub mod choice;
pub mod domain;
pub mod engine;
pub mod instances;
pub mod model;
pub mod oracle;
pub mod propagation;
pub mod rating;

pub use engine::{solve, EngineConfig, Limits, SolveResult, SolveStatus, Solver};
pub use model::{Model, ModelBuilder, Time, VarId};
pub use rating::{Policy, StrategyConfig};
