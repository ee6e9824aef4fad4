//! Progressive-iterative fairing of clamped B-spline curves and surfaces.
//!
//! Each control point carries its own fairing weight, so a designer can
//! smooth one region aggressively while leaving features elsewhere intact.
//! The crate is organised bottom-up:
//!
//! * [`knots`], [`basis`], [`curve`], [`surface`]: clamped B-spline geometry
//!   and differential queries (curvature combs, mean curvature).
//! * [`gram`]: Gram matrices of basis derivatives and fairing energies.
//! * [`engine`]: the weighted fairing iteration with convergence diagnostics.
//! * [`select`]: energy-impact ranking and automatic active-set fairing.
//! * [`baseline`]: the classical energy-minimisation solve used as reference.
//! * [`metrics`], [`models`]: evaluation metrics, desk models and seeded noise.
//! * [`model_file`], [`weights`]: the JSON model format and weight range specs.

pub mod banded;
pub mod baseline;
pub mod basis;
pub mod curve;
pub mod engine;
mod error;
pub mod geometry;
pub mod gram;
pub mod knots;
pub mod metrics;
pub mod model_file;
pub mod models;
pub mod points;
pub mod quadrature;
pub mod select;
pub mod surface;
pub mod weights;

pub use error::{Error, Result};
pub use geometry::Geometry;
pub use gram::{FunctionalKind, GramMatrix};
pub use knots::KnotVector;
pub use points::ControlPoints;
pub use curve::BSplineCurve;
pub use surface::BSplineSurface;
