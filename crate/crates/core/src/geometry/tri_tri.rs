//! Exact closed triangle-triangle intersection.
//!
//! Two closed triangles intersect iff an edge of one meets the other
//! (closed) triangle: any extreme point of their convex intersection lies
//! on the boundary of one of them. Segment/triangle tests are decided with
//! the exact orientation predicates only, so the result is exact for the
//! given floating-point coordinates.

use std::cmp::Ordering;

use super::predicates::{orient2d, orient3d};
use crate::Vec3;

/// Whether the closed triangles `t1` and `t2` share at least one point.
pub fn triangles_intersect(t1: &[Vec3; 3], t2: &[Vec3; 3]) -> bool {
    (0..3).any(|i| segment_triangle(&t1[i], &t1[(i + 1) % 3], t2))
        || (0..3).any(|i| segment_triangle(&t2[i], &t2[(i + 1) % 3], t1))
}

/// Closed segment `pq` against closed triangle `t`.
pub fn segment_triangle(p: &Vec3, q: &Vec3, t: &[Vec3; 3]) -> bool {
    let [a, b, c] = t;
    let Some(axis) = projection_axis(t) else {
        // Degenerate (collinear) triangle: its point set is its edges.
        return (0..3).any(|i| segment_segment(p, q, &t[i], &t[(i + 1) % 3]));
    };
    let o1 = orient3d(a, b, c, p);
    let o2 = orient3d(a, b, c, q);
    if o1 == o2 && o1 != Ordering::Equal {
        return false;
    }
    if o1 == Ordering::Equal && o2 == Ordering::Equal {
        let pr = |v: &Vec3| project(v, axis);
        return segment_triangle_2d(pr(p), pr(q), [pr(a), pr(b), pr(c)]);
    }
    // The segment crosses (or touches) the plane; test the supporting line.
    let s1 = orient3d(p, q, a, b);
    let s2 = orient3d(p, q, b, c);
    let s3 = orient3d(p, q, c, a);
    let nonneg = [s1, s2, s3].iter().all(|s| *s != Ordering::Less);
    let nonpos = [s1, s2, s3].iter().all(|s| *s != Ordering::Greater);
    nonneg || nonpos
}

/// Axis to drop so that the triangle stays non-degenerate in projection;
/// `None` when the triangle is exactly collinear.
fn projection_axis(t: &[Vec3; 3]) -> Option<usize> {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let mut best: Option<(usize, f64)> = None;
    for axis in 0..3 {
        let pr = |v: &Vec3| project(v, axis);
        if orient2d(pr(&t[0]), pr(&t[1]), pr(&t[2])) != Ordering::Equal {
            let w = n[axis].abs();
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((axis, w));
            }
        }
    }
    best.map(|(a, _)| a)
}

#[inline]
fn project(v: &Vec3, drop_axis: usize) -> [f64; 2] {
    match drop_axis {
        0 => [v.y, v.z],
        1 => [v.z, v.x],
        _ => [v.x, v.y],
    }
}

fn point_in_triangle_2d(p: [f64; 2], t: [[f64; 2]; 3]) -> bool {
    let s1 = orient2d(t[0], t[1], p);
    let s2 = orient2d(t[1], t[2], p);
    let s3 = orient2d(t[2], t[0], p);
    let nonneg = [s1, s2, s3].iter().all(|s| *s != Ordering::Less);
    let nonpos = [s1, s2, s3].iter().all(|s| *s != Ordering::Greater);
    nonneg || nonpos
}

fn segment_triangle_2d(p: [f64; 2], q: [f64; 2], t: [[f64; 2]; 3]) -> bool {
    point_in_triangle_2d(p, t)
        || point_in_triangle_2d(q, t)
        || (0..3).any(|i| segments_intersect_2d(p, q, t[i], t[(i + 1) % 3]))
}

fn on_segment_2d(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> bool {
    // r collinear with pq: inside the bounding box means on the segment
    r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
}

pub(crate) fn segments_intersect_2d(p: [f64; 2], q: [f64; 2], r: [f64; 2], s: [f64; 2]) -> bool {
    let d1 = orient2d(p, q, r);
    let d2 = orient2d(p, q, s);
    let d3 = orient2d(r, s, p);
    let d4 = orient2d(r, s, q);
    use Ordering::*;
    if ((d1 == Greater && d2 == Less) || (d1 == Less && d2 == Greater))
        && ((d3 == Greater && d4 == Less) || (d3 == Less && d4 == Greater))
    {
        return true;
    }
    (d1 == Equal && on_segment_2d(p, q, r))
        || (d2 == Equal && on_segment_2d(p, q, s))
        || (d3 == Equal && on_segment_2d(r, s, p))
        || (d4 == Equal && on_segment_2d(r, s, q))
}

/// Closed 3D segments `pq` and `rs`.
fn segment_segment(p: &Vec3, q: &Vec3, r: &Vec3, s: &Vec3) -> bool {
    if orient3d(p, q, r, s) != Ordering::Equal {
        return false;
    }
    // Coplanar: find a coordinate projection that is injective on the
    // common plane (or line). A projection keeps incidences iff it does not
    // collapse the points' affine hull.
    for axis in 0..3 {
        let pr = |v: &Vec3| project(v, axis);
        let pts = [pr(p), pr(q), pr(r), pr(s)];
        let planar = [
            orient2d(pts[0], pts[1], pts[2]),
            orient2d(pts[0], pts[1], pts[3]),
            orient2d(pts[0], pts[2], pts[3]),
            orient2d(pts[1], pts[2], pts[3]),
        ]
        .iter()
        .any(|o| *o != Ordering::Equal);
        if planar {
            return segments_intersect_2d(pts[0], pts[1], pts[2], pts[3]);
        }
    }
    // All four points collinear in 3D (or coincident): compare along the
    // axis of largest spread.
    let pts = [p, q, r, s];
    let axis = (0..3)
        .max_by(|&a, &b| {
            let spread = |ax: usize| {
                let (lo, hi) = pts
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[ax]), hi.max(v[ax])));
                hi - lo
            };
            spread(a).total_cmp(&spread(b))
        })
        .unwrap_or(0);
    let (a0, a1) = (p[axis].min(q[axis]), p[axis].max(q[axis]));
    let (b0, b1) = (r[axis].min(s[axis]), r[axis].max(s[axis]));
    if a1 - a0 == 0.0 && b1 - b0 == 0.0 {
        return p == r;
    }
    a0 <= b1 && b0 <= a1
}
