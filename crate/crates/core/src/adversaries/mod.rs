//! Request sources.
//!
//! Adaptive adversaries look only at the online configuration they are
//! handed. Oblivious sources ignore it.

mod k2_phase;
mod paging;
mod ring;
mod synthetic;
mod theorem2;
mod trace;

pub use k2_phase::K2Phase;
pub use paging::PagingReduction;
pub use ring::{order_preserving_costs, ring_edge, Ring};
pub use synthetic::{PlantedPartition, RandomPairs};
pub use theorem2::Theorem2;
pub use trace::{parse_trace, parse_trace_str, Trace};
