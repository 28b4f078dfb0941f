//! Cortical surface placement on signed distance fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`volume`]: voxel grids with a voxel-to-world affine, resampling,
//!   cavity filling and NIfTI-1 persistence.
//! * [`geometry`]: exact orientation predicates, closest-point queries and
//!   a bounding-volume hierarchy over triangles.
//! * [`mesh`]: closed oriented triangle meshes, marching cubes, vertex
//!   frames, Taubin smoothing, self-intersection detection and PLY I/O.
//! * [`sdf`]: clipped signed distance fields computed from meshes and
//!   sampled (with gradients) at arbitrary world points.
//! * [`synth`]: domain-randomised synthetic scan / SDF training pairs.
//! * [`fit`]: surface initialisation from a mask and intersection-free
//!   gradient descent on the placement energy.
//! * [`metrics`]: surface distances, thickness and mask overlap.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod geometry;
pub mod mesh;
pub mod metrics;
pub mod sdf;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
pub use fit::{FitConfig, FitReport};
pub use mesh::{MeshDiagnostics, TriangleMesh, VertexFrame};
pub use sdf::SdfGrid;
pub use synth::{AcquisitionParams, Orientation, TrainingPair};
pub use volume::{Affine, GridKind, VoxelGrid};

/// World-space 3-vector in millimetres.
pub type Vec3 = nalgebra::Vector3<f64>;
