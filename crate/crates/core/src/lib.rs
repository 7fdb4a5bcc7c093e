//! QoE-driven reward market between mobile users (MUs) and AIGC service
//! providers (ASPs).
//!
//! MUs set per-QoE rewards, ASPs answer with compute and bandwidth
//! allocations. The crate computes ASP best responses, runs the reward game
//! to an approximate Nash equilibrium, evaluates baseline pricing schemes
//! and drives seeded experiments.

pub mod asp_solver;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod model;
pub mod mu_game;
pub mod oracle;

pub use error::{Error, Result};
