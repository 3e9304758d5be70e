//! Cluster-first, route-second heuristic for the capacitated vehicle routing
//! problem.
//!
//! The pipeline runs four stages in order:
//!
//! 1. [`fleet`]: size the fleet so planned capacity covers total demand.
//! 2. [`cluster`]: recursively bisect the clients with k=2 K-Means until each
//!    node fits a vehicle.
//! 3. [`merge`]: fold under-occupied clusters into the nearest cluster with
//!    room for them.
//! 4. [`route`]: build one greedy nearest-neighbor tour per cluster over
//!    Dijkstra shortest paths ([`roadgraph`]).
//!
//! [`oracle`] holds exact desk-scale reference solvers used to certify each
//! stage, and [`instance`] / [`pipeline`] / [`output`] provide the
//! file formats and the end-to-end driver behind the `cvrp` binary.

pub mod cluster;
pub mod error;
pub mod eval;
pub mod fleet;
pub mod geo;
pub mod instance;
pub mod merge;
pub mod oracle;
pub mod output;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod roadgraph;
pub mod route;

pub use error::{Error, Result};
pub use geo::{EarthModel, GeoPoint, Metric};
pub use par::Execution;

/// Vertex id of the depot in every graph and route.
pub const DEPOT: u32 = 0;
