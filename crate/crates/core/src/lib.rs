//! Carbon-constrained, fairness-aware hierarchical multi-agent control of a
//! simulated shipping fleet.
//!
//! Layers, bottom up: [`env`] (the hourly fleet simulator), [`constraint`]
//! (dual prices for the emission cap and port capacities), [`fairness`]
//! (inequality measures and the penalty weight schedule), [`hierarchy`]
//! (macro planner and directive plumbing), [`learner`] (policy-gradient
//! reference learner) and [`harness`] (experiment runner, CSV output,
//! regret fixtures and scaling probe).

// `!(x > 0.0)` guards also reject NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraint;
pub mod env;
pub mod error;
pub mod fairness;
pub mod harness;
pub mod hierarchy;
pub mod learner;

pub use error::{Error, Result};
