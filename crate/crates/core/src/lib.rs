//! Solvers for the geometric transportation problem (earth mover's distance)
//! between weighted red and blue point sets in the plane.
//!
//! Three algorithms share one instance/plan data model:
//!
//! * [`grid`]: a randomized recursive approximation over randomly shifted
//!   grids, running in near-linear time.
//! * [`wspd`]: a `(1 + eps)`-approximation that routes flow through a sparse
//!   graph built from a well-separated pair decomposition.
//! * [`exact`]: an exact planar solver based on excess scaling with
//!   contractions, driven by a geometric Dijkstra search.
//!
//! [`mcf`] is the successive-shortest-path min-cost flow engine used as the
//! reference oracle and as a building block by the approximations.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod exact;
pub mod gen;
pub mod geom;
pub mod grid;
pub mod mcf;
pub mod model;
pub mod wspd;

pub use error::{Error, Result};
pub use geom::{Metric, Point, Rect};
pub use model::{
    instance_stats, plan_cost, verify_plan, InstanceStats, PlanEntry, PlanReport, Site,
    TransportInstance, TransportPlan, Violation,
};
