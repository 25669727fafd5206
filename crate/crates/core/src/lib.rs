//! Simulation and martingale-safe certification of the 2→1 random access
//! code under operational deviations: biased, correlated and drifting query
//! statistics, adaptive classical encoders, and post-hoc selection of rounds.
//!
//! A certification claim needs three pieces built under the same
//! operational model: the score, a finite-sample lower bound on it, and the
//! classical benchmark it is compared against. The modules follow that
//! split:
//!
//! - [`rac_core`]: rounds, traces and the two scoring rules
//! - [`input_models`]: query laws (IID bias, Markov, sine drift, random walk)
//! - [`strategies`]: static, bias-aware and bandit encoders, reference device
//! - [`selection`]: random and failure-preferential discarding
//! - [`ceilings`]: classical benchmarks, including exact vertex enumeration
//!   for finite prepare-and-measure tasks
//! - [`stats`]: Azuma–Hoeffding bound and the bias interval
//! - [`certify`]: verdicts and robustness gaps
//! - [`harness`]: seeded replicate studies and parameter sweeps

pub mod ceilings;
pub mod certify;
pub mod error;
pub mod harness;
pub mod input_models;
pub mod rac_core;
pub mod selection;
pub mod stats;
pub mod strategies;

pub use certify::{certify, evaluation_preset, BenchmarkMode, BenchmarkSpec, ScoreReport, Verdict};
pub use error::{Error, Result};
pub use rac_core::{Bit, RoundRecord, ScoringMode, Trace};
