#![allow(dead_code)]

use mesh_saliency::geom::Vec3;
use mesh_saliency::mesh::{shapes, TriangleMesh};
use rand::Rng;

/// All-pairs shortest paths over the face adjacency graph (edge weight =
/// centroid distance), by Floyd–Warshall on the dense matrix.
pub fn all_pairs_geodesic(mesh: &TriangleMesh<f64>) -> Vec<Vec<f64>> {
    let n = mesh.face_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    // Edge adjacency rebuilt here from scratch: two faces are adjacent when
    // they share two vertex indices.
    for a in 0..n {
        d[a][a] = 0.0;
        for b in 0..n {
            if a == b {
                continue;
            }
            let shared = mesh.faces[a].iter().filter(|v| mesh.faces[b].contains(v)).count();
            if shared >= 2 {
                d[a][b] = centroid(mesh, a).distance(centroid(mesh, b));
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn centroid(mesh: &TriangleMesh<f64>, f: usize) -> Vec3<f64> {
    let [a, b, c] = mesh.faces[f].map(|i| mesh.vertices[i as usize]);
    Vec3::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0, (a.z + b.z + c.z) / 3.0)
}

/// Grid plane or icosphere (≤ 500 faces) with jittered vertices, normalized.
pub fn random_small_mesh<R: Rng>(rng: &mut R) -> TriangleMesh<f64> {
    let base = if rng.random_bool(0.5) {
        shapes::grid_plane::<f64>(rng.random_range(6..=15), 1.0, 0.0)
    } else {
        shapes::icosphere::<f64>(rng.random_range(2..=5))
    };
    let spacing = (base.diag / (base.face_count() as f64).sqrt()).max(1e-3);
    let vertices = base
        .vertices
        .iter()
        .map(|&v| {
            v + Vec3::new(
                rng.random_range(-0.2..0.2) * spacing,
                rng.random_range(-0.2..0.2) * spacing,
                rng.random_range(-0.2..0.2) * spacing,
            )
        })
        .collect();
    let m = TriangleMesh::new(vertices, base.faces.clone()).unwrap();
    m.normalize_unit_diag().unwrap().0.compute_face_normals()
}

/// Single-source shortest paths by the textbook O(n²) Dijkstra over a dense
/// adjacency scan. No heap, no truncation.
pub fn dense_dijkstra(mesh: &TriangleMesh<f64>, source: usize) -> Vec<f64> {
    let n = mesh.face_count();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| b != a && mesh.faces[a].iter().filter(|v| mesh.faces[b].contains(v)).count() >= 2)
                .collect()
        })
        .collect();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() && (u == usize::MAX || dist[i] < dist[u]) {
                u = i;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        for &v in &neighbors[u] {
            let nd = dist[u] + centroid(mesh, u).distance(centroid(mesh, v));
            if nd < dist[v] {
                dist[v] = nd;
            }
        }
    }
    dist
}
