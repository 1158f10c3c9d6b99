//! Online balanced repartitioning.
//!
//! `n = k * l` nodes live in `l` clusters of capacity `k`. Requests between
//! nodes in different clusters cost 1, and moving a node costs `alpha`.
//! This crate provides the cost model and run engine, the CREP and Greedy
//! online algorithms, exact offline oracles, and adaptive adversaries.

pub mod adversaries;
pub mod baseline;
pub mod crep;
pub mod engine;
pub mod error;
pub mod greedy;
pub mod model;
pub mod offline;

pub use crep::Crep;
pub use engine::{
    ratio, run, CompetitiveRatio, FixedSequence, NullAlgorithm, OnlineAlgorithm, RequestSource,
    RunOptions, StepRecord, Transcript,
};
pub use error::{BrpError, Result};
pub use greedy::Greedy;
pub use model::{min_migration_cost, ClusterId, Configuration, CostLedger, Move, NodeId, Params, Request};
