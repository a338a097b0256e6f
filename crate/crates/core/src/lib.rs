//! Integration and analysis of the n-body problem with the cotangent
//! potential on spheres (κ > 0) and hyperboloids (κ < 0) embedded in R³,
//! R⁴ or Minkowski space.

pub mod dynamics;
pub mod geometry;
pub mod harness;
pub mod integrator;
pub mod projection;
pub mod singularity;

pub use dynamics::{SystemState, DynamicsError};
pub use geometry::{CurvatureSpace, EmbeddedVector, Signature};
pub use integrator::{integrate, EventConfig, IntegratorConfig, TerminationReason, Trajectory};
