//! Embedded vertex-colored multigraphs on the 2-sphere.
//!
//! The crate models gradient-flow topology graphs of convex bodies as
//! rotation-system maps, provides the three standard representations
//! (primary, triangulated, quasi-dual) with conversions and canonical keys,
//! implements the quadrangulation surgeries (face contraction, vertex
//! splitting, diagonal slide), and enumerates the metagraph of embedded
//! classes together with its bifurcation edges.

pub mod canonical;
pub mod convert;
pub mod io;
pub mod map;
pub mod metagraph;
pub mod surgery;

#[cfg(feature = "oracle")]
pub mod oracle;

pub use canonical::{canonical_key, canonical_key_with, CanonicalKey, KeyBytes, MirrorPolicy};
pub use map::{
    primary_class, validate, ColoredMap, HalfEdgeId, MapError, PrimaryClass, Repr,
    ValidationReport, VertexColor, VertexId,
};
