//! Numerical toolkit for Brinkmann spacetime geometry.
//!
//! The crate builds evaluatable Lorentzian metrics from a small expression
//! language, differentiates them exactly with dual numbers, integrates
//! geodesics on quotient spacetimes with deck normalization, probes geodesic
//! completeness, certifies Brinkmann structure (parallel null field, closed
//! dual 1-form, totally geodesic flat surfaces), and diagnoses whether the
//! flow of the distinguished field is equicontinuous.

pub mod catalog;
pub mod deck;
pub mod dual;
pub mod dynamics;
pub mod expr;
pub mod geodesic;
pub mod geometry;
pub mod linalg;
pub mod ode;
pub mod report;
pub mod sampling;
pub mod schema;
pub mod spacetime;
pub mod verify;

pub use geometry::{ChartKind, ChartPoint, Domain, GeometryError, MetricField, TangentVec, VectorField};
pub use spacetime::Spacetime;
