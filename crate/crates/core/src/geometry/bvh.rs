//! Axis-aligned bounding-volume hierarchy over primitive boxes.

use crate::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    /// Closed-box overlap (touching boxes overlap).
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_sq(&self, p: &Vec3) -> f64 {
        (0..3)
            .map(|a| {
                let d = (self.min[a] - p[a]).max(0.0).max(p[a] - self.max[a]);
                d * d
            })
            .sum()
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { aabb: Aabb, start: usize, end: usize },
    Inner { aabb: Aabb, left: usize, right: usize },
}

impl Node {
    fn aabb(&self) -> &Aabb {
        match self {
            Node::Leaf { aabb, .. } | Node::Inner { aabb, .. } => aabb,
        }
    }
}

/// Median-split BVH. Primitive ids are the positions in the slice of boxes
/// given to [`Bvh::build`].
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    boxes: Vec<Aabb>,
}

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1),
            order: (0..boxes.len()).collect(),
            boxes: boxes.to_vec(),
        };
        if !boxes.is_empty() {
            bvh.build_node(0, boxes.len());
        }
        bvh
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn primitive_box(&self, id: usize) -> &Aabb {
        &self.boxes[id]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let aabb = self.order[start..end]
            .iter()
            .fold(Aabb::empty(), |acc, &i| acc.union(&self.boxes[i]));
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { aabb, start, end });
            return id;
        }
        let cbox = Aabb::from_points(
            self.order[start..end]
                .iter()
                .map(|&i| self.boxes[i].centroid())
                .collect::<Vec<_>>()
                .iter(),
        );
        let extent = cbox.max - cbox.min;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        let mid = start + (end - start) / 2;
        let boxes = &self.boxes;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            boxes[a].centroid()[axis]
                .total_cmp(&boxes[b].centroid()[axis])
                .then(a.cmp(&b))
        });
        // placeholder, patched once children exist
        self.nodes.push(Node::Leaf { aabb, start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Inner { aabb, left, right };
        id
    }

    /// All unordered pairs `(i, j)`, `i < j`, of primitives whose boxes
    /// overlap. Each pair is reported once; order is unspecified.
    pub fn overlapping_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            self.self_pairs(0, &mut out);
        }
        out
    }

    fn push_pair(&self, a: usize, b: usize, out: &mut Vec<(usize, usize)>) {
        if self.boxes[a].overlaps(&self.boxes[b]) {
            out.push((a.min(b), a.max(b)));
        }
    }

    fn self_pairs(&self, node: usize, out: &mut Vec<(usize, usize)>) {
        match &self.nodes[node] {
            Node::Leaf { start, end, .. } => {
                for x in *start..*end {
                    for y in (x + 1)..*end {
                        self.push_pair(self.order[x], self.order[y], out);
                    }
                }
            }
            Node::Inner { left, right, .. } => {
                self.self_pairs(*left, out);
                self.self_pairs(*right, out);
                self.cross_pairs(*left, *right, out);
            }
        }
    }

    fn cross_pairs(&self, a: usize, b: usize, out: &mut Vec<(usize, usize)>) {
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        if !na.aabb().overlaps(nb.aabb()) {
            return;
        }
        match (na, nb) {
            (
                Node::Leaf {
                    start: s1, end: e1, ..
                },
                Node::Leaf {
                    start: s2, end: e2, ..
                },
            ) => {
                for x in *s1..*e1 {
                    for y in *s2..*e2 {
                        self.push_pair(self.order[x], self.order[y], out);
                    }
                }
            }
            (Node::Inner { left, right, .. }, Node::Leaf { .. }) => {
                self.cross_pairs(*left, b, out);
                self.cross_pairs(*right, b, out);
            }
            (_, Node::Inner { left, right, .. }) => {
                self.cross_pairs(a, *left, out);
                self.cross_pairs(a, *right, out);
            }
        }
    }

    /// Primitive minimising `dist_sq(id)` for the query point `p`, where
    /// `dist_sq` must be bounded below by the squared box distance.
    pub fn nearest<F>(&self, p: &Vec3, mut dist_sq: F) -> Option<(usize, f64)>
    where
        F: FnMut(usize) -> f64,
    {
        self.nearest_within(p, f64::INFINITY, &mut dist_sq)
    }

    /// As [`Bvh::nearest`], ignoring primitives at squared distance
    /// `>= max_dist_sq`.
    pub fn nearest_within<F>(&self, p: &Vec3, max_dist_sq: f64, mut dist_sq: F) -> Option<(usize, f64)>
    where
        F: FnMut(usize) -> f64,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut bound = max_dist_sq;
        let mut stack = vec![(0usize, self.nodes[0].aabb().distance_sq(p))];
        while let Some((node, d)) = stack.pop() {
            // `>` keeps equal-distance nodes so ties resolve to the lowest id
            if d > bound || (best.is_none() && d >= bound) {
                continue;
            }
            match &self.nodes[node] {
                Node::Leaf { start, end, .. } => {
                    for &id in &self.order[*start..*end] {
                        let dd = dist_sq(id);
                        let better = match best {
                            None => dd < bound,
                            Some((bid, bd)) => dd < bd || (dd == bd && id < bid),
                        };
                        if better {
                            best = Some((id, dd));
                            bound = bound.min(dd);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].aabb().distance_sq(p);
                    let dr = self.nodes[*right].aabb().distance_sq(p);
                    // visit the closer child first
                    if dl <= dr {
                        stack.push((*right, dr));
                        stack.push((*left, dl));
                    } else {
                        stack.push((*left, dl));
                        stack.push((*right, dr));
                    }
                }
            }
        }
        best
    }
}
