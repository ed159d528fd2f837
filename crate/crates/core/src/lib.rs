//! Joint admission, VM activation, VNF placement, CPU assignment and routing
//! for network services over a shared NFV infrastructure.
//!
//! A [`problem::Problem`] bundles a physical network, a service catalogue and
//! a time-stamped workload. Planners produce a [`state::DeploymentState`],
//! which [`state::validate`] checks against every model constraint and
//! [`metrics::compute_metrics`] prices:
//!
//! - [`heuristic::run_heuristic`]: sliding-horizon planner with backtracking
//!   per request;
//! - [`baseline::run_bestfit`]: online best-fit baseline;
//! - [`exact::solve_exact`]: clairvoyant optimum for small instances.
//!
//! Scenarios are read from JSON or taken from [`scenario::builtin_small`] and
//! [`scenario::builtin_large`]; [`experiment`] runs repetitions and writes
//! CSV reports.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod exact;
pub mod experiment;
pub mod heuristic;
pub mod metrics;
pub mod problem;
pub mod scenario;
pub mod service;
pub mod state;
pub mod topology;
pub mod units;
pub mod workload;
