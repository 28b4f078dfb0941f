//! Marching cubes with a generated, face-consistent case table.
//!
//! The 256-entry table is derived at first use: on each cube face the sign
//! pattern fixes which crossing points are joined, with ambiguous faces
//! (diagonal inside corners) always separating the inside corners. Because
//! that choice depends on the face alone, neighbouring cubes agree on every
//! shared face and the output is watertight. Segments are oriented so the
//! boundary loops close up; each loop is fan-triangulated.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::TriangleMesh;
use crate::volume::{GridKind, VoxelGrid};
use crate::{Error, Result, Vec3};

/// Corner `c` sits at `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
fn corner_pos(c: usize) -> [f64; 3] {
    [(c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64]
}

/// Edge `e` = `axis * 4 + n`: from its lower corner along `axis`.
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Cube faces as corner cycles with their outward normal.
const FACES: [([usize; 4], [f64; 3]); 6] = [
    ([0, 2, 6, 4], [-1.0, 0.0, 0.0]),
    ([1, 3, 7, 5], [1.0, 0.0, 0.0]),
    ([0, 1, 5, 4], [0.0, -1.0, 0.0]),
    ([2, 3, 7, 6], [0.0, 1.0, 0.0]),
    ([0, 1, 3, 2], [0.0, 0.0, -1.0]),
    ([4, 5, 7, 6], [0.0, 0.0, 1.0]),
];

fn edge_between(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|&(p, q)| (p == a && q == b) || (p == b && q == a))
        .expect("corners are adjacent")
}

fn edge_mid(e: usize) -> [f64; 3] {
    let (a, b) = EDGES[e];
    let (pa, pb) = (corner_pos(a), corner_pos(b));
    [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, (pa[2] + pb[2]) / 2.0]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// One boundary loop of a case, outward-oriented as a polygon over cube
/// edges. `apex` is the loop position the fan is spanned from; `None`
/// means no corner works and the fan is spanned from the loop centroid.
#[derive(Debug, Clone)]
struct Polygon {
    edges: Vec<usize>,
    apex: Option<usize>,
}

type CaseTable = Vec<Vec<Polygon>>;

fn case_table() -> &'static CaseTable {
    static TABLE: OnceLock<CaseTable> = OnceLock::new();
    TABLE.get_or_init(|| (0..256).map(build_case).collect())
}

fn faces_of_edge(e: usize) -> impl Iterator<Item = usize> {
    let (a, b) = EDGES[e];
    (0..6).filter(move |&f| FACES[f].0.contains(&a) && FACES[f].0.contains(&b))
}

fn share_face(e1: usize, e2: usize) -> bool {
    faces_of_edge(e1).any(|f| faces_of_edge(e2).any(|g| g == f))
}

/// A fan diagonal lying in a cube face could coincide with a diagonal of
/// the neighbouring cube, so apexes are chosen to avoid that.
fn fan_apex(edges: &[usize]) -> Option<usize> {
    let n = edges.len();
    if n == 3 {
        return Some(0);
    }
    (0..n).find(|&a| {
        (2..n - 1).all(|d| !share_face(edges[a], edges[(a + d) % n]))
    })
}

fn build_case(case: usize) -> Vec<Polygon> {
    let inside = |c: usize| case & (1 << c) != 0;
    // directed segments start edge -> end edge
    let mut next: HashMap<usize, usize> = HashMap::new();
    for (cyc, normal) in FACES {
        let crossings: Vec<usize> = (0..4)
            .filter(|&i| inside(cyc[i]) != inside(cyc[(i + 1) % 4]))
            .collect();
        // (edge, edge, reference inside corner)
        let mut segs: Vec<(usize, usize, usize)> = Vec::new();
        match crossings.len() {
            0 => {}
            2 => {
                let ea = edge_between(cyc[crossings[0]], cyc[(crossings[0] + 1) % 4]);
                let eb = edge_between(cyc[crossings[1]], cyc[(crossings[1] + 1) % 4]);
                let reference = *cyc.iter().find(|&&c| inside(c)).expect("one inside corner");
                segs.push((ea, eb, reference));
            }
            4 => {
                // ambiguous: cut off each inside corner separately
                for i in 0..4 {
                    if inside(cyc[i]) {
                        let prev = cyc[(i + 3) % 4];
                        let nxt = cyc[(i + 1) % 4];
                        segs.push((edge_between(prev, cyc[i]), edge_between(cyc[i], nxt), cyc[i]));
                    }
                }
            }
            _ => unreachable!("a square has an even number of sign changes"),
        }
        for (ea, eb, reference) in segs {
            let (a, b) = (edge_mid(ea), edge_mid(eb));
            let left = dot(cross(normal, sub(b, a)), sub(corner_pos(reference), a));
            let (from, to) = if left > 0.0 { (ea, eb) } else { (eb, ea) };
            let clash = next.insert(from, to);
            assert!(clash.is_none(), "case {case}: edge {from} starts two segments");
        }
    }

    let mut polygons = Vec::new();
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut used = [false; 12];
    for s in starts {
        if used[s] {
            continue;
        }
        let mut lp = vec![s];
        used[s] = true;
        let mut cur = next[&s];
        while cur != s {
            assert!(!used[cur], "case {case}: loop revisits edge {cur}");
            used[cur] = true;
            lp.push(cur);
            cur = next[&cur];
        }
        // The loop runs counter-clockwise around the inside corners seen
        // from outside the cube; reversed, its fan faces away from them.
        lp.reverse();
        let apex = fan_apex(&lp);
        polygons.push(Polygon { edges: lp, apex });
    }
    polygons
}

/// Interpolation parameter clamp; keeps vertices off grid corners so no
/// triangle collapses when a sample equals the iso value.
const T_MIN: f64 = 1e-3;

/// Marching-cubes isosurface in world coordinates.
///
/// For SDF grids the inside is `value < iso`; for every other kind it is
/// `value > iso`. Triangles are oriented with normals pointing out of the
/// inside region. Vertices are shared through their grid-edge identity.
pub fn extract_isosurface(grid: &VoxelGrid, iso: f64) -> Result<TriangleMesh> {
    let [nx, ny, nz] = grid.shape();
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(Error::Precondition(format!(
            "isosurface extraction needs at least 2 voxels per axis, shape is {:?}",
            grid.shape()
        )));
    }
    let below_inside = matches!(grid.kind(), GridKind::Sdf { .. });
    let is_inside = |v: f64| if below_inside { v < iso } else { v > iso };
    let table = case_table();
    let flip = grid.affine().determinant() < 0.0;

    let mut vertex_of_edge: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    let value = |i: usize, j: usize, k: usize| grid.get(i, j, k) as f64;
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut case = 0usize;
                let mut vals = [0.0; 8];
                for (c, v) in vals.iter_mut().enumerate() {
                    *v = value(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                    if is_inside(*v) {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let mut local = [usize::MAX; 12];
                for poly in &table[case] {
                    let mut ids = Vec::with_capacity(poly.edges.len());
                    for &e in &poly.edges {
                        if local[e] == usize::MAX {
                            let (ca, cb) = EDGES[e];
                            let axis = e / 4;
                            let o = corner_pos(ca);
                            let (li, lj, lk) = (i + o[0] as usize, j + o[1] as usize, k + o[2] as usize);
                            let key = ((lk * ny + lj) * nx + li) * 3 + axis;
                            local[e] = *vertex_of_edge.entry(key).or_insert_with(|| {
                                let (va, vb) = (vals[ca], vals[cb]);
                                let t = ((iso - va) / (vb - va)).clamp(T_MIN, 1.0 - T_MIN);
                                let mut u = Vec3::new(li as f64, lj as f64, lk as f64);
                                u[axis] += t;
                                vertices.push(grid.affine().voxel_to_world(&u));
                                vertices.len() - 1
                            });
                        }
                        ids.push(local[e]);
                    }
                    let n = ids.len();
                    let mut emit = |t: [usize; 3]| faces.push(if flip { [t[0], t[2], t[1]] } else { t });
                    match poly.apex {
                        Some(a) => {
                            for d in 1..n - 1 {
                                emit([ids[a], ids[(a + d) % n], ids[(a + d + 1) % n]]);
                            }
                        }
                        None => {
                            let c = ids.iter().fold(Vec3::zeros(), |s, &v| s + vertices[v]) / n as f64;
                            vertices.push(c);
                            let c = vertices.len() - 1;
                            for d in 0..n {
                                emit([c, ids[d], ids[(d + 1) % n]]);
                            }
                        }
                    }
                }
            }
        }
    }
    if faces.is_empty() {
        return Err(Error::EmptySurface(format!("no crossing of iso value {iso}")));
    }
    Ok(TriangleMesh { vertices, faces })
}
