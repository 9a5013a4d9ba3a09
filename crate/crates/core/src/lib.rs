//! Multi-robot motion planning with conflict-based search over per-agent
//! probabilistic roadmaps (CBS-MP), plus coupled and prioritized PRM
//! baselines, an exhaustive joint-roadmap oracle and a benchmark harness.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: robot models, environments, validity and inter-robot collision.
//! - [`roadmap`]: per-agent PRMs and the time-expanded constrained search.
//! - [`conflict`]: uniform-time discretization and earliest-conflict detection.
//! - [`cbs`]: the conflict tree query and the grow-and-retry planner loop.
//! - [`baselines`]: composite (joint-space) PRM, prioritized PRM, joint oracle.
//! - [`harness`]: scenario files, generators, benchmarks and SVG output.

pub mod baselines;
pub mod cbs;
pub mod conflict;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod par;
pub mod roadmap;
mod seed;

pub use error::{Error, Result};
