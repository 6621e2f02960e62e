//! Numerical side of the toolkit: the planar codimension-2 normal form, the
//! gradient flow of support-point distance functions on the sphere, and the
//! two-parameter truncation families that realize metagraph triangles on
//! convex bodies.

pub mod body;
pub mod flow;
pub mod mass;
pub mod normal_form;
pub mod ode;
pub mod truncation;

pub use body::{BodyError, BodySpec, Reference, Shape};
pub use flow::{classify, find_critical_points, trace_complex, CriticalPoint, FlowError, MorseSmaleComplex};
pub use mass::{mass_properties, MassProperties};
pub use normal_form::{alpha_star, NormalFormError, NormalFormParams, RegionLabel};
