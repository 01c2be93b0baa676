//! Numerical toolkit for a reversible two-vortex flow under wave and shear
//! perturbation: the section return map and its involution, fixed points and
//! their continuation, invariant manifolds and crises, and attractor/repeller
//! overlap classification.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which is what the pipeline uses.

pub mod error;
pub mod flow;
pub mod chaos;
pub mod linalg;
pub mod manifolds;
pub mod orbits;
pub mod poincare;
pub mod scalar;
pub mod systems;

pub use error::{Error, Result};
pub use flow::{find_section_crossing, integrate, IntegratorConfig, Trajectory};
pub use linalg::Mat2;
pub use poincare::{
    induced_involution, inverse_poincare_map, poincare_jacobian, poincare_map, MapJacobian,
    SectionPoint, VortexMap,
};
pub use scalar::Scalar;
pub use systems::{
    eval_field, eval_field_jacobian, henon_step, FlowState, HenonMap, HenonParams, Involution,
    PlanarMap, VortexParams,
};

pub type VortexParams64 = VortexParams<f64>;
pub type FlowState64 = FlowState<f64>;
pub type SectionPoint64 = SectionPoint<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type VortexMap64 = VortexMap<f64>;
pub type HenonMap64 = HenonMap<f64>;
