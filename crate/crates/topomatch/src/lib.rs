//! Inexact subgraph matching on weighted graphs without node labels.
//!
//! Given a small pattern graph and a large noisy field graph whose edge
//! weights differ by additive zero-mean noise, this crate locates the
//! pattern by matching a topology-preserving unit — two disjoint
//! simplexes joined by a shortest path — under statistically calibrated
//! weight thresholds, then grows the match outward edge by edge until
//! the whole pattern is covered.
//!
//! Entry points:
//! - [`graph::Graph`] / [`graph::enumerate_simplexes`]: the weighted
//!   graph model and clique listing.
//! - [`matching::topology_match`]: find a feasible unit match.
//! - [`consensus::consensus_expand`]: grow a unit match to the full
//!   pattern.
//! - [`pipeline::match_subgraph`]: the two steps combined, with
//!   optional noise-level estimation.
//! - [`sim`]: synthetic-instance generation and accuracy benchmarks.
//! - [`geo`]: build graphs from planar point sets via Delaunay
//!   triangulation.

pub mod consensus;
pub mod error;
pub mod geo;
pub mod graph;
pub mod io;
pub mod matching;
pub mod oracle;
pub mod pipeline;
pub mod plot;
pub mod sim;
pub mod stats;
mod util;
