//! Procedural test meshes.

use std::collections::HashMap;

use super::{Face, TriangleMesh};
use crate::geom::Vec3;
use crate::scalar::Scalar;

/// Axis-aligned cube of side 1 centered at the origin, 8 vertices and 12
/// outward-facing triangles.
pub fn unit_cube<T: Scalar>() -> TriangleMesh<T> {
    let h = T::lit(0.5);
    let vertices = (0..8)
        .map(|i| {
            let c = |bit: u32| if i & bit != 0 { h } else { -h };
            Vec3::new(c(1), c(2), c(4))
        })
        .collect();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriangleMesh::new(vertices, faces).expect("cube is valid")
}

const ICOSA_FACES: [[u32; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn icosahedron_vertices() -> [[f64; 3]; 12] {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
}

/// Unit sphere from an icosahedron whose faces are split into `frequency²`
/// triangles, giving `20·frequency²` faces. Frequency 1 is the icosahedron.
pub fn icosphere<T: Scalar>(frequency: usize) -> TriangleMesh<T> {
    assert!(frequency >= 1, "frequency must be at least 1");
    let n = frequency as u32;
    let base = icosahedron_vertices();

    // A lattice point is identified by its integer barycentric weights over
    // the base corners, so points on shared edges dedupe across faces.
    type Key = [(u32, u32); 3];
    let mut ids: HashMap<Key, u32> = HashMap::new();
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut faces: Vec<Face> = Vec::with_capacity(20 * frequency * frequency);

    for corner in ICOSA_FACES {
        let mut point = |i: u32, j: u32| -> u32 {
            let weights = [(corner[0], n - i - j), (corner[1], i), (corner[2], j)];
            let mut key: Key = [(u32::MAX, 0); 3];
            let mut k = 0;
            for &(v, w) in &weights {
                if w > 0 {
                    key[k] = (v, w);
                    k += 1;
                }
            }
            key[..k].sort_unstable();
            *ids.entry(key).or_insert_with(|| {
                let mut p = [0.0f64; 3];
                for &(v, w) in &weights {
                    for (d, pd) in p.iter_mut().enumerate() {
                        *pd += base[v as usize][d] * w as f64 / n as f64;
                    }
                }
                let len = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                vertices.push(Vec3::new(
                    T::lit(p[0] / len),
                    T::lit(p[1] / len),
                    T::lit(p[2] / len),
                ));
                (vertices.len() - 1) as u32
            })
        };
        for i in 0..n {
            for j in 0..n - i {
                let a = point(i, j);
                let b = point(i + 1, j);
                let c = point(i, j + 1);
                faces.push([a, b, c]);
                if i + j + 1 < n {
                    let d = point(i + 1, j + 1);
                    faces.push([b, d, c]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("icosphere is valid")
}

/// Smallest icosphere frequency with at least `min_faces` faces.
pub fn icosphere_frequency_for(min_faces: usize) -> usize {
    let mut f = 1;
    while 20 * f * f < min_faces {
        f += 1;
    }
    f
}

/// Square `cells × cells` grid of side `size` centered on the z axis at
/// height `z`, triangulated into `2·cells²` faces with normal +z.
pub fn grid_plane<T: Scalar>(cells: usize, size: T, z: T) -> TriangleMesh<T> {
    let (vertices, faces) = grid_parts(cells, size, z, 0);
    TriangleMesh::new(vertices, faces).expect("grid is valid")
}

fn grid_parts<T: Scalar>(cells: usize, size: T, z: T, offset: u32) -> (Vec<Vec3<T>>, Vec<Face>) {
    let step = size / T::from_count(cells);
    let half = size * T::lit(0.5);
    let row = cells as u32 + 1;
    let mut vertices = Vec::with_capacity((cells + 1) * (cells + 1));
    for j in 0..=cells {
        for i in 0..=cells {
            vertices.push(Vec3::new(
                T::from_count(i) * step - half,
                T::from_count(j) * step - half,
                z,
            ));
        }
    }
    let mut faces = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells as u32 {
        for i in 0..cells as u32 {
            let a = offset + j * row + i;
            let b = a + 1;
            let c = a + row;
            let d = c + 1;
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    (vertices, faces)
}

/// Two identical, disconnected grids stacked `gap` apart along z; plane A
/// (faces `0..2·cells²`) at `z = 0`, plane B above it. The side length is
/// chosen so the AABB diagonal is exactly 1 for `gap < 1`.
pub fn parallel_planes<T: Scalar>(cells: usize, gap: T) -> TriangleMesh<T> {
    let size = ((T::one() - gap * gap) / T::lit(2.0)).sqrt();
    let (mut vertices, mut faces) = grid_parts(cells, size, T::zero(), 0);
    let (vb, fb) = grid_parts(cells, size, gap, vertices.len() as u32);
    vertices.extend(vb);
    faces.extend(fb);
    TriangleMesh::new(vertices, faces).expect("planes are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_and_orientation() {
        for f in [1, 2, 3, 7] {
            let m = icosphere::<f64>(f).compute_face_normals();
            assert_eq!(m.face_count(), 20 * f * f);
            // Euler characteristic of a sphere: V − E + F = 2 with E = 3F/2.
            assert_eq!(m.vertex_count() + m.face_count() - 3 * m.face_count() / 2, 2);
            for fi in 0..m.face_count() {
                assert!(m.face_normals[fi].dot(m.face_centroids[fi]) > 0.0);
            }
        }
    }

    #[test]
    fn cube_faces_point_outward() {
        let m = unit_cube::<f64>().compute_face_normals();
        for f in 0..12 {
            assert!(m.face_normals[f].dot(m.face_centroids[f]) > 0.0);
        }
    }

    #[test]
    fn parallel_planes_are_unit_diag() {
        let m = parallel_planes::<f64>(10, 0.03);
        assert!((m.diag - 1.0).abs() < 1e-12);
        assert_eq!(m.face_count(), 400);
    }

    #[test]
    fn frequency_lookup() {
        assert_eq!(icosphere_frequency_for(5_000), 16);
        assert_eq!(icosphere_frequency_for(200_000), 100);
    }
}
