//! Geometric kernels shared by meshing, distance fields and metrics.

pub mod bvh;
pub mod closest;
pub mod predicates;
pub mod tri_tri;

pub use bvh::{Aabb, Bvh};
pub use closest::{closest_point_on_triangle, point_triangle_distance_sq, TriangleFeature};
pub use tri_tri::triangles_intersect;
