//! Shrink-wrapping a closed triangle membrane onto a set of fixed points with
//! damped spring/pressure dynamics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod forces;
pub mod geometry;
pub mod hull;
pub mod integrator;
pub mod intersect;
pub mod io;
mod par;
pub mod pipeline;
pub mod refine;
pub mod scenario;
pub mod seed;
pub mod snap;
pub mod spatial;

pub use error::{FoilError, Result};
pub use geometry::{Edge, TriMesh, Vec3};
pub use par::is_parallel;
