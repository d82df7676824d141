//! Indexed triangle meshes and the geometry derived from them.

mod accel;
mod adjacency;
pub mod io;
mod nearest;
pub mod shapes;

pub use accel::{intersect_triangle, nearest_hit_brute_force, RayAccel, RayHit, HIT_T_MIN};
pub use adjacency::{connected_components, AdjacencyIndex, DEFAULT_STEP_SAMPLES};
pub use nearest::PointGrid;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::scalar::Scalar;

pub type Face = [u32; 3];

/// Indexed triangle mesh.
///
/// `vertices`, `faces`, `aabb` and `diag` are always populated. Normals and
/// centroids are filled by [`TriangleMesh::compute_face_normals`].
#[derive(Debug, Clone)]
pub struct TriangleMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub faces: Vec<Face>,
    pub face_normals: Vec<Vec3<T>>,
    pub face_centroids: Vec<Vec3<T>>,
    /// Zero-area faces. They stay in the mesh but carry a zero normal.
    pub degenerate: Vec<bool>,
    pub aabb: Aabb<T>,
    pub diag: T,
}

impl<T: Scalar> TriangleMesh<T> {
    /// Validates indices and computes the bounding box. Degenerate faces are
    /// flagged, not removed.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<Face>) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let count = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v as usize >= count {
                    return Err(Error::FaceIndexOutOfRange {
                        face: fi,
                        vertex: v as usize,
                        count,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Config(format!(
                    "face {fi} repeats a vertex index: {f:?}"
                )));
            }
        }
        let aabb = Aabb::from_points(&vertices);
        let diag = aabb.diagonal();
        let mut mesh = Self {
            vertices,
            faces,
            face_normals: Vec::new(),
            face_centroids: Vec::new(),
            degenerate: Vec::new(),
            aabb,
            diag,
        };
        mesh.degenerate = (0..mesh.faces.len())
            .map(|f| is_degenerate(mesh.raw_normal(f), &mesh.corners(f)))
            .collect();
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn corners(&self, f: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unnormalized counter-clockwise normal `(b − a) × (c − a)`.
    fn raw_normal(&self, f: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(f);
        (b - a).cross(c - a)
    }

    pub fn centroid(&self, f: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(f);
        (a + b + c).scale(T::one() / T::lit(3.0))
    }

    pub fn face_area(&self, f: usize) -> T {
        self.raw_normal(f).norm() * T::lit(0.5)
    }

    pub fn has_normals(&self) -> bool {
        self.face_normals.len() == self.faces.len()
    }

    /// Fills `face_normals`, `face_centroids` and `degenerate`.
    pub fn compute_face_normals(mut self) -> Self {
        let n = self.faces.len();
        let mut normals = Vec::with_capacity(n);
        let mut degenerate = Vec::with_capacity(n);
        for f in 0..n {
            let raw = self.raw_normal(f);
            if is_degenerate(raw, &self.corners(f)) {
                normals.push(Vec3::zero());
                degenerate.push(true);
            } else {
                normals.push(raw.normalized());
                degenerate.push(false);
            }
        }
        self.face_centroids = (0..n).map(|f| self.centroid(f)).collect();
        self.face_normals = normals;
        self.degenerate = degenerate;
        self
    }

    /// Centroids, computed on the fly when not cached.
    pub fn centroids(&self) -> std::borrow::Cow<'_, [Vec3<T>]> {
        if self.face_centroids.len() == self.faces.len() {
            std::borrow::Cow::Borrowed(&self.face_centroids)
        } else {
            std::borrow::Cow::Owned((0..self.faces.len()).map(|f| self.centroid(f)).collect())
        }
    }

    /// Scales the mesh isotropically about its AABB center so that the AABB
    /// diagonal becomes 1. Returns the applied scale `1 / diag`.
    ///
    /// A mesh whose diagonal is already 1 is returned unchanged with scale 1.
    pub fn normalize_unit_diag(self) -> Result<(Self, T)> {
        if !(self.diag > T::zero()) || !self.diag.is_finite() {
            return Err(Error::DegenerateAabb);
        }
        if self.diag == T::one() {
            return Ok((self, T::one()));
        }
        let scale = T::one() / self.diag;
        let center = self.aabb.center();
        let had_normals = self.has_normals();
        let vertices = self
            .vertices
            .iter()
            .map(|&p| center + (p - center).scale(scale))
            .collect();
        let mut out = Self::new(vertices, self.faces)?;
        if had_normals {
            out = out.compute_face_normals();
        }
        Ok((out, scale))
    }
}

fn is_degenerate<T: Scalar>(raw: Vec3<T>, corners: &[Vec3<T>; 3]) -> bool {
    let n = raw.norm();
    if !(n > T::zero()) {
        return true;
    }
    // Relative test against the edge lengths catches near-collinear slivers
    // whose cross product is pure rounding noise.
    let e1 = (corners[1] - corners[0]).norm();
    let e2 = (corners[2] - corners[0]).norm();
    n <= T::epsilon() * T::lit(4.0) * e1 * e2
}
