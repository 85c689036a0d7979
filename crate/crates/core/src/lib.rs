//! Deterministic simulation and closed-form analytics for proof-of-stake
//! block reward design.
//!
//! Stake in a proof-of-stake chain compounds: every block reward is added to
//! the proposer's stake and raises its chance of winning the next election.
//! The honest process is a time-varying Pólya urn, and the choice of reward
//! schedule decides how far a party's stake fraction drifts from where it
//! started. This crate provides
//!
//! - [`rewards`]: constant, geometric, checkpoint-composed and decreasing
//!   reward schedules,
//! - [`urn`]: the honest multi-party stake process, stake pools and the
//!   proof-of-work binomial baseline,
//! - [`analytics`]: exact variance of the final stake fraction, equitability
//!   reports, reward budgets for a target equitability and a brute-force
//!   check that geometric rewards minimise variance,
//! - [`adversary`]: a chain simulator for a strategic party keeping private
//!   side chains (the match/override/wait strategy family),
//! - [`bounds`]: the always-match urn processes that upper-bound any
//!   strategy, with the closed-form mean of the second one,
//! - [`montecarlo`]: the seeded, order-independent trial harness and its
//!   statistics (histograms, empirical CDFs, KS distance, dominance check),
//! - [`cli`]: configuration documents, figure recipes and the command-line
//!   front end used by the `stake-equity` binary.
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory.

pub mod adversary;
pub mod analytics;
pub mod bounds;
pub mod cli;
mod error;
pub mod format;
pub mod montecarlo;
pub mod rewards;
pub mod urn;

pub use error::{Error, Result};
