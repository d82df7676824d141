//! Face adjacency, vertex incidence and one-ring neighborhoods.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TriangleMesh;
use crate::scalar::Scalar;

/// Adjacent face pairs sampled for the mean step length when not configured.
pub const DEFAULT_STEP_SAMPLES: usize = 10_000;

/// Compressed adjacency lists: entries of item `i` are `data[offsets[i]..offsets[i + 1]]`.
#[derive(Debug, Clone, Default)]
struct Csr {
    offsets: Vec<usize>,
    data: Vec<u32>,
}

impl Csr {
    fn from_lists(lists: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut data = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        offsets.push(0);
        for l in lists {
            data.extend_from_slice(&l);
            offsets.push(data.len());
        }
        Self { offsets, data }
    }

    fn get(&self, i: usize) -> &[u32] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone)]
pub struct AdjacencyIndex<T> {
    face_adjacency: Csr,
    vertex_incidence: Csr,
    vertex_neighbors: Csr,
    /// Mean centroid-to-centroid distance over sampled edge-adjacent face pairs.
    pub avg_step: T,
}

impl<T: Scalar> AdjacencyIndex<T> {
    /// Builds the edge-sharing face graph. Every face on a non-manifold edge is
    /// adjacent to every other face on that edge.
    ///
    /// `avg_step` is the mean over `min(step_sample_count, pairs)` adjacent
    /// pairs drawn without replacement using `seed`.
    pub fn build(mesh: &TriangleMesh<T>, step_sample_count: usize, seed: u64) -> Self {
        let nf = mesh.face_count();
        let nv = mesh.vertex_count();

        let mut edges: Vec<(u32, u32, u32)> = Vec::with_capacity(nf * 3);
        for (fi, f) in mesh.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b), fi as u32));
            }
        }
        edges.sort_unstable();

        let mut face_lists: Vec<Vec<u32>> = vec![Vec::with_capacity(3); nf];
        let mut start = 0;
        while start < edges.len() {
            let key = (edges[start].0, edges[start].1);
            let mut end = start + 1;
            while end < edges.len() && (edges[end].0, edges[end].1) == key {
                end += 1;
            }
            let sharers = &edges[start..end];
            for (i, a) in sharers.iter().enumerate() {
                for b in &sharers[i + 1..] {
                    if a.2 != b.2 {
                        face_lists[a.2 as usize].push(b.2);
                        face_lists[b.2 as usize].push(a.2);
                    }
                }
            }
            start = end;
        }
        for l in &mut face_lists {
            l.sort_unstable();
            l.dedup();
        }

        let mut incidence: Vec<Vec<u32>> = vec![Vec::new(); nv];
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); nv];
        for (fi, f) in mesh.faces.iter().enumerate() {
            for k in 0..3 {
                let v = f[k] as usize;
                incidence[v].push(fi as u32);
                neighbors[v].push(f[(k + 1) % 3]);
                neighbors[v].push(f[(k + 2) % 3]);
            }
        }
        for l in &mut neighbors {
            l.sort_unstable();
            l.dedup();
        }

        let face_adjacency = Csr::from_lists(face_lists);
        let avg_step = sample_avg_step(mesh, &face_adjacency, step_sample_count, seed);

        Self {
            face_adjacency,
            vertex_incidence: Csr::from_lists(incidence),
            vertex_neighbors: Csr::from_lists(neighbors),
            avg_step,
        }
    }

    pub fn face_count(&self) -> usize {
        self.face_adjacency.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_incidence.len()
    }

    /// Faces sharing an edge with `f`, ascending.
    pub fn face_neighbors(&self, f: usize) -> &[u32] {
        self.face_adjacency.get(f)
    }

    /// `Adj(v)`: faces incident to vertex `v`, ascending.
    pub fn incident_faces(&self, v: usize) -> &[u32] {
        self.vertex_incidence.get(v)
    }

    /// `N(v)`: one-ring vertex neighbors, ascending.
    pub fn vertex_neighbors(&self, v: usize) -> &[u32] {
        self.vertex_neighbors.get(v)
    }

    /// Unordered adjacent pairs `(f, g)` with `f < g`.
    pub fn adjacent_pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.face_count()).flat_map(move |f| {
            self.face_neighbors(f)
                .iter()
                .filter(move |&&g| (g as usize) > f)
                .map(move |&g| (f as u32, g))
        })
    }
}

fn sample_avg_step<T: Scalar>(
    mesh: &TriangleMesh<T>,
    adjacency: &Csr,
    sample_count: usize,
    seed: u64,
) -> T {
    let pairs: Vec<(u32, u32)> = (0..adjacency.len())
        .flat_map(|f| {
            adjacency
                .get(f)
                .iter()
                .filter(move |&&g| (g as usize) > f)
                .map(move |&g| (f as u32, g))
        })
        .collect();
    if pairs.is_empty() || sample_count == 0 {
        return T::zero();
    }
    let dist = |&(f, g): &(u32, u32)| mesh.centroid(f as usize).distance(mesh.centroid(g as usize));
    let (sum, n) = if sample_count >= pairs.len() {
        (pairs.iter().map(dist).sum::<T>(), pairs.len())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = index::sample(&mut rng, pairs.len(), sample_count);
        (picked.iter().map(|i| dist(&pairs[i])).sum::<T>(), sample_count)
    };
    sum / T::from_count(n)
}

/// Labels faces by connected component of the face adjacency graph. Labels
/// are assigned in order of each component's lowest face index.
pub fn connected_components<T: Scalar>(adj: &AdjacencyIndex<T>) -> Vec<u32> {
    const UNSET: u32 = u32::MAX;
    let n = adj.face_count();
    let mut labels = vec![UNSET; n];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for seed in 0..n {
        if labels[seed] != UNSET {
            continue;
        }
        labels[seed] = next;
        stack.push(seed as u32);
        while let Some(f) = stack.pop() {
            for &g in adj.face_neighbors(f as usize) {
                if labels[g as usize] == UNSET {
                    labels[g as usize] = next;
                    stack.push(g);
                }
            }
        }
        next += 1;
    }
    labels
}
