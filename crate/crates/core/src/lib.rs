//! Computable pieces of the construction of negatively curved complete
//! intersections: second fundamental forms and curvature certifiers,
//! jet-space codimension counts, Gauss-map positivity tests, flat-model
//! peak sections with Donaldson-style globalization, and Brody
//! reparametrization.

// index loops mirror the tensor formulas; `!(x > 0.0)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod brody;
pub mod config;
pub mod error;
pub mod gauss;
pub mod germ;
pub mod jetspace;
pub mod linalg;
pub mod optim;
pub mod peaks;
pub mod poly;
pub mod samples;

pub use config::{Budgets, PeakSettings, RunConfig, Tolerances};
pub use error::{Error, Result};
pub use germ::{Certificate, CurvatureKind, CurvatureReport, Frames, Germ, Sff};
pub use jetspace::{CodimReport, JetSpec, LocusId};
pub use poly::{PolynomialMap, C64};
