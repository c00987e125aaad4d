//! Bounding volume hierarchy over triangles for nearest-hit ray queries.

use crate::geom::{Aabb, Vec3};
use crate::mesh::TriMesh;

const LEAF_SIZE: usize = 4;
const BINS: usize = 12;

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle slot. Interior: index of the left child (right is `index + 1`).
    index: u32,
    /// Number of triangles for leaves, zero for interior nodes.
    count: u32,
}

#[derive(Clone, Copy, Debug)]
struct Tri {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    /// Ray parameter of the hit point.
    pub t: f64,
    /// Index of the triangle in the order passed to [`Bvh::build`].
    pub triangle: u32,
    /// Geometric (unnormalized) normal of the hit triangle, following its winding.
    pub normal: Vec3,
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<Tri>,
    /// Slot -> original triangle index.
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(triangles: &[[Vec3; 3]]) -> Bvh {
        let mut refs: Vec<(u32, Aabb, Vec3)> = triangles
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let b = Aabb::from_points(t.iter());
                (i as u32, b, b.center())
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        nodes.push(Node {
            bounds: Aabb::empty(),
            index: 0,
            count: 0,
        });
        if !refs.is_empty() {
            let n = refs.len();
            build_node(&mut nodes, 0, &mut refs, 0, n);
        }
        let order: Vec<u32> = refs.iter().map(|r| r.0).collect();
        let tris = order
            .iter()
            .map(|&i| {
                let [a, b, c] = triangles[i as usize];
                Tri {
                    v0: a,
                    e1: b - a,
                    e2: c - a,
                }
            })
            .collect();
        Bvh { nodes, tris, order }
    }

    pub fn from_mesh(mesh: &TriMesh) -> Bvh {
        let tris: Vec<[Vec3; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
        Bvh::build(&tris)
    }

    pub fn len(&self) -> usize {
        self.tris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Nearest hit with `t` in `(t_min, t_max]`.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<Hit> {
        if self.tris.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best_t = t_max;
        let mut best: Option<u32> = None;
        slab(&self.nodes[0].bounds, origin, &inv, t_min, best_t)?;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(top) = stack.pop() {
            let node = &self.nodes[top as usize];
            if node.count > 0 {
                let start = node.index as usize;
                for slot in start..start + node.count as usize {
                    if let Some(t) = intersect_tri(&self.tris[slot], origin, dir) {
                        if t > t_min && t <= best_t {
                            // Equal-distance hits resolve to the lowest original index.
                            let better = t < best_t
                                || best.map_or(true, |b| self.order[slot] < self.order[b as usize]);
                            if better {
                                best_t = t;
                                best = Some(slot as u32);
                            }
                        }
                    }
                }
                continue;
            }
            let (l, r) = (node.index, node.index + 1);
            let tl = slab(&self.nodes[l as usize].bounds, origin, &inv, t_min, best_t);
            let tr = slab(&self.nodes[r as usize].bounds, origin, &inv, t_min, best_t);
            match (tl, tr) {
                (Some(a), Some(b)) => {
                    // Push the farther child first so the nearer one is popped next.
                    let (near, far) = if a <= b { (l, r) } else { (r, l) };
                    stack.push(far);
                    stack.push(near);
                }
                (Some(_), None) => stack.push(l),
                (None, Some(_)) => stack.push(r),
                (None, None) => {}
            }
        }
        best.map(|slot| {
            let tri = &self.tris[slot as usize];
            Hit {
                t: best_t,
                triangle: self.order[slot as usize],
                normal: tri.e1.cross(&tri.e2),
            }
        })
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    at: usize,
    refs: &mut [(u32, Aabb, Vec3)],
    start: usize,
    end: usize,
) {
    let slice = &mut refs[start..end];
    let bounds = slice.iter().fold(Aabb::empty(), |b, r| b.union(&r.1));
    let n = slice.len();
    nodes[at].bounds = bounds;
    if n <= LEAF_SIZE {
        nodes[at].index = start as u32;
        nodes[at].count = n as u32;
        return;
    }
    let centroid_bounds = Aabb::from_points(slice.iter().map(|r| &r.2));
    let extent = centroid_bounds.extent();
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let lo = centroid_bounds.min[axis];
    let span = extent[axis];

    let mid = if span <= 0.0 {
        n / 2
    } else {
        // Binned surface-area heuristic.
        let bin_of = |c: f64| (((c - lo) / span * BINS as f64) as usize).min(BINS - 1);
        let mut counts = [0usize; BINS];
        let mut boxes = [Aabb::empty(); BINS];
        for r in slice.iter() {
            let b = bin_of(r.2[axis]);
            counts[b] += 1;
            boxes[b] = boxes[b].union(&r.1);
        }
        let mut best_cost = f64::INFINITY;
        let mut best_split = 0;
        for split in 1..BINS {
            let (mut lb, mut rb) = (Aabb::empty(), Aabb::empty());
            let (mut lc, mut rc) = (0, 0);
            for i in 0..split {
                lb = lb.union(&boxes[i]);
                lc += counts[i];
            }
            for i in split..BINS {
                rb = rb.union(&boxes[i]);
                rc += counts[i];
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost = lb.surface_area() * lc as f64 + rb.surface_area() * rc as f64;
            if cost < best_cost {
                best_cost = cost;
                best_split = split;
            }
        }
        if best_split == 0 {
            n / 2
        } else {
            let mut i = 0;
            for j in 0..n {
                if bin_of(slice[j].2[axis]) < best_split {
                    slice.swap(i, j);
                    i += 1;
                }
            }
            i
        }
    };
    let mid = if mid == 0 || mid == n {
        slice.sort_by(|a, b| a.2[axis].total_cmp(&b.2[axis]).then(a.0.cmp(&b.0)));
        n / 2
    } else {
        mid
    };

    let left = nodes.len();
    nodes.push(Node {
        bounds: Aabb::empty(),
        index: 0,
        count: 0,
    });
    nodes.push(Node {
        bounds: Aabb::empty(),
        index: 0,
        count: 0,
    });
    nodes[at].index = left as u32;
    nodes[at].count = 0;
    build_node(nodes, left, refs, start, start + mid);
    build_node(nodes, left + 1, refs, start + mid, end);
}

#[inline]
fn slab(b: &Aabb, o: &Vec3, inv: &Vec3, t_min: f64, t_max: f64) -> Option<f64> {
    let mut t0 = t_min;
    let mut t1 = t_max;
    for a in 0..3 {
        let mut near = (b.min[a] - o[a]) * inv[a];
        let mut far = (b.max[a] - o[a]) * inv[a];
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        // NaN (0 * inf) leaves the interval unchanged.
        if near > t0 {
            t0 = near;
        }
        if far < t1 {
            t1 = far;
        }
    }
    (t0 <= t1).then_some(t0)
}

/// Möller–Trumbore, double sided.
#[inline]
fn intersect_tri(tri: &Tri, o: &Vec3, d: &Vec3) -> Option<f64> {
    let p = d.cross(&tri.e2);
    let det = tri.e1.dot(&p);
    if det == 0.0 {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = o - tri.v0;
    let u = s.dot(&p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&tri.e1);
    let v = d.dot(&q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(tri.e2.dot(&q) * inv_det)
}
