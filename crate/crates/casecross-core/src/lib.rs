//! Core algorithms for the outcome-censored case-crossover design.
//!
//! The crate covers four layers of machinery:
//!
//! - **Data-generating processes** ([`dgp`]): discrete-time counterfactual
//!   hazard models that produce subject trajectories, either by Monte Carlo
//!   ([`dgp::simulate_cohort`]) or, for small instances, by exhaustive
//!   enumeration ([`enumerate`]).
//! - **Sampling** ([`sampler`]): selection of case person-times and matched
//!   within-subject control times.
//! - **Estimators** ([`estimators`]): the Mantel-Haenszel incidence rate
//!   ratio over discordant case/control pairs, and the naive pooled cohort
//!   hazard ratio used as a comparator.
//! - **Analytic limits** ([`analytic`]): closed-form and exactly enumerated
//!   expressions for the estimator's probability limit, its multiplicative
//!   bias factor under strong common causes of the outcome, effect
//!   heterogeneity limits, grid sweeps over two-group models, and numeric
//!   audits of the design assumptions.
//!
//! The crate is `no_std` (with `alloc`) so the algorithmic core stays free of
//! IO concerns; the companion `casecross-cli` crate carries file formats,
//! parallel drivers, and the command-line front end.
//!
//! Everything is deterministic: cohort generation derives one random stream
//! per subject from `(master_seed, subject_id)`, so results do not depend on
//! evaluation order or thread count.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytic;
pub mod dgp;
pub mod enumerate;
pub mod estimators;
pub mod hash;
pub mod rng;
pub mod sampler;

mod bitseq;
mod error;
mod kahan;

pub use bitseq::BitSeq;
pub use error::{Error, Result};

pub(crate) use kahan::Sum2;
