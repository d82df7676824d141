//! Bounding volume hierarchy for nearest-hit ray queries.
//!
//! Triangles are tested with the watertight algorithm of Woop, Benthin and
//! Wald, so rays through shared edges and vertices never slip between
//! neighboring faces. Traversal keeps descending into boxes whose entry
//! distance equals the current best hit, so ties resolve to the lowest face
//! index exactly as a linear scan would.

use super::TriangleMesh;
use crate::geom::{Aabb, Vec3};
use crate::scalar::Scalar;

/// Minimum accepted ray parameter; hits closer than this are ignored.
pub const HIT_T_MIN: f64 = 1e-7;

const BINS: usize = 16;
const MAX_LEAF: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit<T> {
    pub face: u32,
    pub t: T,
    pub point: Vec3<T>,
}

#[derive(Debug, Clone)]
struct Node<T> {
    bounds: Aabb<T>,
    /// Leaf: first slot in `order`. Internal: index of the second child; the
    /// first child follows this node directly.
    index: u32,
    /// Primitive count for leaves, 0 for internal nodes.
    count: u32,
    axis: u8,
}

/// Spatial index over the faces of one mesh. Immutable once built.
#[derive(Debug, Clone)]
pub struct RayAccel<T> {
    nodes: Vec<Node<T>>,
    order: Vec<u32>,
    tris: Vec<[Vec3<T>; 3]>,
    depth: usize,
}

/// Ray with the per-ray constants of the watertight test precomputed.
struct PreparedRay<T> {
    origin: Vec3<T>,
    dir: Vec3<T>,
    inv: Vec3<T>,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: T,
    sy: T,
    sz: T,
}

impl<T: Scalar> PreparedRay<T> {
    fn new(origin: Vec3<T>, dir: Vec3<T>) -> Self {
        let kz = dir.abs().max_axis();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < T::zero() {
            std::mem::swap(&mut kx, &mut ky);
        }
        Self {
            origin,
            dir,
            inv: Vec3::new(T::one() / dir.x, T::one() / dir.y, T::one() / dir.z),
            kx,
            ky,
            kz,
            sx: dir[kx] / dir[kz],
            sy: dir[ky] / dir[kz],
            sz: T::one() / dir[kz],
        }
    }

    fn intersect(&self, tri: &[Vec3<T>; 3]) -> Option<T> {
        let a = tri[0] - self.origin;
        let b = tri[1] - self.origin;
        let c = tri[2] - self.origin;
        let (kx, ky, kz) = (self.kx, self.ky, self.kz);

        let ax = a[kx] - self.sx * a[kz];
        let ay = a[ky] - self.sy * a[kz];
        let bx = b[kx] - self.sx * b[kz];
        let by = b[ky] - self.sy * b[kz];
        let cx = c[kx] - self.sx * c[kz];
        let cy = c[ky] - self.sy * c[kz];

        let mut u = cx * by - cy * bx;
        let mut v = ax * cy - ay * cx;
        let mut w = bx * ay - by * ax;

        if u == T::zero() || v == T::zero() || w == T::zero() {
            let f = |x: T| x.to_f64_lossless();
            u = T::lit(f(cx) * f(by) - f(cy) * f(bx));
            v = T::lit(f(ax) * f(cy) - f(ay) * f(cx));
            w = T::lit(f(bx) * f(ay) - f(by) * f(ax));
        }

        let zero = T::zero();
        if (u < zero || v < zero || w < zero) && (u > zero || v > zero || w > zero) {
            return None;
        }
        let det = u + v + w;
        if det == zero {
            return None;
        }
        let az = self.sz * a[kz];
        let bz = self.sz * b[kz];
        let cz = self.sz * c[kz];
        let t = (u * az + v * bz + w * cz) / det;
        if t > T::lit(HIT_T_MIN) && t.is_finite() {
            Some(t)
        } else {
            None
        }
    }

    /// Entry distance into `b`, or `None` if the ray misses it or enters
    /// beyond `t_max`.
    fn enter(&self, b: &Aabb<T>, t_max: T) -> Option<T> {
        let mut t_near = T::lit(HIT_T_MIN);
        let mut t_far = t_max;
        // Conservative widening keeps the slab test from rejecting hits that
        // lie exactly on a box face.
        let widen = T::one() + T::lit(2.0) * gamma::<T>(3);
        for axis in 0..3 {
            let (o, lo, hi) = (self.origin[axis], b.min[axis], b.max[axis]);
            if self.dir[axis] == T::zero() {
                if o < lo || o > hi {
                    return None;
                }
                continue;
            }
            let inv = self.inv[axis];
            let mut t0 = (lo - o) * inv;
            let mut t1 = (hi - o) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t1 *= widen;
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
            if t_near > t_far {
                return None;
            }
        }
        Some(t_near)
    }
}

fn gamma<T: Scalar>(n: usize) -> T {
    let ne = T::from_count(n) * T::epsilon() * T::lit(0.5);
    ne / (T::one() - ne)
}

/// Watertight two-sided ray–triangle test. Returns the ray parameter of the
/// hit when it exceeds [`HIT_T_MIN`].
pub fn intersect_triangle<T: Scalar>(origin: Vec3<T>, dir: Vec3<T>, tri: &[Vec3<T>; 3]) -> Option<T> {
    PreparedRay::new(origin, dir).intersect(tri)
}

/// Nearest hit by testing every face; ties on `t` go to the lowest face index.
pub fn nearest_hit_brute_force<T: Scalar>(
    mesh: &TriangleMesh<T>,
    origin: Vec3<T>,
    dir: Vec3<T>,
) -> Option<RayHit<T>> {
    let ray = PreparedRay::new(origin, dir);
    let mut best: Option<(u32, T)> = None;
    for f in 0..mesh.face_count() {
        if let Some(t) = ray.intersect(&mesh.corners(f)) {
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((f as u32, t));
            }
        }
    }
    best.map(|(face, t)| RayHit {
        face,
        t,
        point: origin + dir * t,
    })
}

struct Prim<T> {
    bounds: Aabb<T>,
    centroid: Vec3<T>,
}

impl<T: Scalar> RayAccel<T> {
    pub fn build(mesh: &TriangleMesh<T>) -> Self {
        let n = mesh.face_count();
        let prims: Vec<Prim<T>> = (0..n)
            .map(|f| {
                let c = mesh.corners(f);
                Prim {
                    bounds: Aabb::from_points(&c),
                    centroid: (c[0] + c[1] + c[2]) * (T::one() / T::lit(3.0)),
                }
            })
            .collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / MAX_LEAF + 1);
        let depth = build_node(&prims, &mut order, 0, n, &mut nodes, 1);
        let tris = order.iter().map(|&f| mesh.corners(f as usize)).collect();
        Self {
            nodes,
            order,
            tris,
            depth,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Nearest intersection along `dir` (unit length) with `t > HIT_T_MIN`.
    pub fn nearest_hit(&self, origin: Vec3<T>, dir: Vec3<T>) -> Option<RayHit<T>> {
        let ray = PreparedRay::new(origin, dir);
        let mut best_t = T::infinity();
        let mut best_face = u32::MAX;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if ray.enter(&node.bounds, best_t).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.index as usize;
                for slot in start..start + node.count as usize {
                    if let Some(t) = ray.intersect(&self.tris[slot]) {
                        let face = self.order[slot];
                        if t < best_t || (t == best_t && face < best_face) {
                            best_t = t;
                            best_face = face;
                        }
                    }
                }
            } else {
                let first = ni + 1;
                let second = node.index;
                // Visit the child on the ray's near side first.
                if ray.dir[node.axis as usize] < T::zero() {
                    stack.push(first);
                    stack.push(second);
                } else {
                    stack.push(second);
                    stack.push(first);
                }
            }
        }
        (best_face != u32::MAX).then(|| RayHit {
            face: best_face,
            t: best_t,
            point: origin + dir * best_t,
        })
    }
}

fn build_node<T: Scalar>(
    prims: &[Prim<T>],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node<T>>,
    level: usize,
) -> usize {
    let slice = &mut order[start..end];
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &f in slice.iter() {
        bounds = bounds.union(&prims[f as usize].bounds);
        cbounds.grow(prims[f as usize].centroid);
    }
    let me = nodes.len();
    nodes.push(Node {
        bounds,
        index: start as u32,
        count: (end - start) as u32,
        axis: 0,
    });
    let count = end - start;
    if count <= MAX_LEAF {
        return level;
    }

    let extent = cbounds.extent();
    let axis = extent.max_axis();
    let lo = cbounds.min[axis];
    let span = extent[axis];
    if !(span > T::zero()) {
        // All centroids coincide: split by position in the list.
        let mid = start + count / 2;
        return finish_internal(prims, order, start, mid, end, me, axis, nodes, level);
    }

    let bin_of = |f: u32| -> usize {
        let c = prims[f as usize].centroid[axis];
        let b = ((c - lo) / span * T::from_count(BINS)).to_usize().unwrap_or(0);
        b.min(BINS - 1)
    };
    let mut bin_bounds = [Aabb::<T>::empty(); BINS];
    let mut bin_count = [0usize; BINS];
    for &f in slice.iter() {
        let b = bin_of(f);
        bin_bounds[b] = bin_bounds[b].union(&prims[f as usize].bounds);
        bin_count[b] += 1;
    }
    // Surface area heuristic over the BINS − 1 candidate planes.
    let mut right_area = [T::zero(); BINS];
    let mut right_count = [0usize; BINS];
    let mut acc = Aabb::empty();
    let mut acc_n = 0;
    for b in (1..BINS).rev() {
        acc = acc.union(&bin_bounds[b]);
        acc_n += bin_count[b];
        right_area[b] = acc.surface_area();
        right_count[b] = acc_n;
    }
    let mut best = (T::infinity(), 0usize);
    let mut acc = Aabb::empty();
    let mut acc_n = 0;
    for b in 0..BINS - 1 {
        acc = acc.union(&bin_bounds[b]);
        acc_n += bin_count[b];
        if acc_n == 0 || right_count[b + 1] == 0 {
            continue;
        }
        let cost = acc.surface_area() * T::from_count(acc_n)
            + right_area[b + 1] * T::from_count(right_count[b + 1]);
        if cost < best.0 {
            best = (cost, b);
        }
    }

    let mid = if best.0.is_finite() {
        let split = best.1;
        let mut i = 0;
        for j in 0..slice.len() {
            if bin_of(slice[j]) <= split {
                slice.swap(i, j);
                i += 1;
            }
        }
        start + i
    } else {
        start + count / 2
    };
    let mid = if mid == start || mid == end {
        start + count / 2
    } else {
        mid
    };
    finish_internal(prims, order, start, mid, end, me, axis, nodes, level)
}

#[allow(clippy::too_many_arguments)]
fn finish_internal<T: Scalar>(
    prims: &[Prim<T>],
    order: &mut [u32],
    start: usize,
    mid: usize,
    end: usize,
    me: usize,
    axis: usize,
    nodes: &mut Vec<Node<T>>,
    level: usize,
) -> usize {
    let d1 = build_node(prims, order, start, mid, nodes, level + 1);
    let second = nodes.len();
    let d2 = build_node(prims, order, mid, end, nodes, level + 1);
    let node = &mut nodes[me];
    node.index = second as u32;
    node.count = 0;
    node.axis = axis as u8;
    d1.max(d2)
}
