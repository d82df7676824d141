use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FaceField, Stage};
use crate::geom::Vec3;
use crate::mesh::{AdjacencyIndex, TriangleMesh};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    /// Shortest path over the face adjacency graph with centroid step lengths.
    Geodesic,
    /// Straight-line centroid distance, ignoring connectivity.
    Euclidean,
    /// Number of adjacency steps.
    Hopcount,
}

impl DistanceMetric {
    pub fn name(self) -> &'static str {
        match self {
            DistanceMetric::Geodesic => "geodesic",
            DistanceMetric::Euclidean => "euclidean",
            DistanceMetric::Hopcount => "hopcount",
        }
    }
}

/// How per-source contributions are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeMode {
    /// Sources are added in ascending face order; bit-reproducible.
    Ordered,
    /// Per-worker partial fields merged as they finish.
    Unordered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionConfig {
    /// Kernel standard deviation in normalized units.
    pub sigma2: f64,
    /// Truncation radius; `3 · sigma2` when unset.
    pub d_max: Option<f64>,
    pub metric: DistanceMetric,
    /// Kernel standard deviation in hops for [`DistanceMetric::Hopcount`];
    /// `sigma2 / avg_step` when unset.
    pub hop_sigma: Option<f64>,
    pub merge: MergeMode,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            sigma2: 0.02,
            d_max: None,
            metric: DistanceMetric::Geodesic,
            hop_sigma: None,
            merge: MergeMode::Unordered,
        }
    }
}

impl DiffusionConfig {
    pub fn d_max(&self) -> f64 {
        self.d_max.unwrap_or(3.0 * self.sigma2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) {
            return Err(Error::Config("sigma2 must be > 0".into()));
        }
        if !(self.d_max() >= self.sigma2) {
            return Err(Error::Config("d_max must be >= sigma2".into()));
        }
        if let Some(h) = self.hop_sigma {
            if !(h > 0.0) {
                return Err(Error::Config("hop_sigma must be > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct HeapEntry<T> {
    dist: T,
    face: u32,
}

impl<T: Scalar> PartialEq for HeapEntry<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for HeapEntry<T> {}
impl<T: Scalar> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Scalar> Ord for HeapEntry<T> {
    // Reversed so that `BinaryHeap` pops the smallest distance first.
    fn cmp(&self, o: &Self) -> Ordering {
        o.dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| o.face.cmp(&self.face))
    }
}

/// Reusable dense scratch space for one expansion at a time.
struct Expander<T> {
    dist: Vec<T>,
    hops: Vec<u32>,
    touched: Vec<u32>,
    heap: BinaryHeap<HeapEntry<T>>,
    queue: VecDeque<u32>,
    out: Vec<(u32, T)>,
}

impl<T: Scalar> Expander<T> {
    fn new(faces: usize) -> Self {
        Self {
            dist: vec![T::infinity(); faces],
            hops: vec![u32::MAX; faces],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
            queue: VecDeque::new(),
            out: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &f in &self.touched {
            self.dist[f as usize] = T::infinity();
            self.hops[f as usize] = u32::MAX;
        }
        self.touched.clear();
        self.heap.clear();
        self.queue.clear();
        self.out.clear();
    }

    /// Uniform-cost expansion from `source` over edge-adjacent faces,
    /// accumulating centroid step lengths. Faces farther than `d_max` are
    /// never entered, and the expansion does not grow past `hop_cap` rings.
    /// Fills `out` with `(face, distance)` in settling order.
    fn geodesic(&mut self, adj: &AdjacencyIndex<T>, centroids: &[Vec3<T>], source: u32, d_max: T, hop_cap: u32) {
        self.reset();
        let s = source as usize;
        self.dist[s] = T::zero();
        self.hops[s] = 0;
        self.touched.push(source);
        self.heap.push(HeapEntry {
            dist: T::zero(),
            face: source,
        });
        while let Some(HeapEntry { dist: d, face: f }) = self.heap.pop() {
            let fu = f as usize;
            if d > self.dist[fu] {
                continue;
            }
            self.out.push((f, d));
            let h = self.hops[fu];
            if h >= hop_cap {
                continue;
            }
            let cf = centroids[fu];
            for &g in adj.face_neighbors(fu) {
                let gu = g as usize;
                let nd = d + cf.distance(centroids[gu]);
                if nd <= d_max && nd < self.dist[gu] {
                    if self.dist[gu] == T::infinity() {
                        self.touched.push(g);
                    }
                    self.dist[gu] = nd;
                    self.hops[gu] = h + 1;
                    self.heap.push(HeapEntry { dist: nd, face: g });
                }
            }
        }
    }

    /// Breadth-first hop counts up to `max_hops`. Fills `out` with
    /// `(face, hops)`.
    fn hop_bfs(&mut self, adj: &AdjacencyIndex<T>, source: u32, max_hops: u32) {
        self.reset();
        self.hops[source as usize] = 0;
        self.touched.push(source);
        self.queue.push_back(source);
        while let Some(f) = self.queue.pop_front() {
            let h = self.hops[f as usize];
            self.out.push((f, T::lit(h as f64)));
            if h >= max_hops {
                continue;
            }
            for &g in adj.face_neighbors(f as usize) {
                if self.hops[g as usize] == u32::MAX {
                    self.hops[g as usize] = h + 1;
                    self.touched.push(g);
                    self.queue.push_back(g);
                }
            }
        }
    }
}

fn hop_cap<T: Scalar>(d_max: T, avg_step: T) -> u32 {
    if avg_step > T::zero() {
        let rings = (d_max / avg_step).ceil().to_f64_lossless() * 2.0;
        rings.min(u32::MAX as f64 - 1.0) as u32
    } else {
        u32::MAX - 1
    }
}

/// Truncated geodesic distances from `source`: every face reachable within
/// `d_max` (subject to the adaptive ring cap `2·⌈d_max / avg_step⌉`), sorted
/// by face index. Faces in other components are absent.
pub fn truncated_geodesic_field<T: Scalar>(
    mesh: &TriangleMesh<T>,
    adj: &AdjacencyIndex<T>,
    source: usize,
    d_max: T,
) -> Vec<(u32, T)> {
    let centroids = mesh.centroids();
    let mut ex = Expander::new(mesh.face_count());
    ex.geodesic(adj, &centroids, source as u32, d_max, hop_cap(d_max, adj.avg_step));
    let mut out = std::mem::take(&mut ex.out);
    out.sort_unstable_by_key(|e| e.0);
    out
}

/// Uniform grid over face centroids for fixed-radius queries.
struct CentroidGrid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl CentroidGrid {
    fn new<T: Scalar>(centroids: &[Vec3<T>], cell: f64) -> Self {
        let mut cells: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, c) in centroids.iter().enumerate() {
            cells.entry(Self::key(c, cell)).or_default().push(i as u32);
        }
        Self { cell, cells }
    }

    fn key<T: Scalar>(p: &Vec3<T>, cell: f64) -> (i64, i64, i64) {
        let k = |v: T| (v.to_f64_lossless() / cell).floor() as i64;
        (k(p.x), k(p.y), k(p.z))
    }

    fn within<T: Scalar>(&self, centroids: &[Vec3<T>], p: Vec3<T>, radius: T, out: &mut Vec<(u32, T)>) {
        out.clear();
        let (x, y, z) = Self::key(&p, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&(x + dx, y + dy, z + dz)) {
                        for &f in list {
                            let d = p.distance(centroids[f as usize]);
                            if d <= radius {
                                out.push((f, d));
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Everything needed to evaluate the kernel around one source.
struct KernelContext<'a, T> {
    adj: &'a AdjacencyIndex<T>,
    centroids: &'a [Vec3<T>],
    metric: DistanceMetric,
    d_max: T,
    hop_cap: u32,
    /// `1 / (2σ²)` in the metric's units.
    inv_two_var: T,
    max_hops: u32,
    grid: Option<CentroidGrid>,
}

impl<T: Scalar> KernelContext<'_, T> {
    /// Writes `(face, raw · kernel)` for every face in the source's support.
    fn contributions(&self, ex: &mut Expander<T>, source: u32, weight: T, out: &mut Vec<(u32, T)>) {
        match self.metric {
            DistanceMetric::Geodesic => {
                ex.geodesic(self.adj, self.centroids, source, self.d_max, self.hop_cap);
                out.clear();
                out.extend(ex.out.iter().map(|&(f, d)| (f, d)));
            }
            DistanceMetric::Hopcount => {
                ex.hop_bfs(self.adj, source, self.max_hops);
                out.clear();
                out.extend(ex.out.iter().copied());
            }
            DistanceMetric::Euclidean => {
                let grid = self.grid.as_ref().expect("grid built for euclidean metric");
                grid.within(self.centroids, self.centroids[source as usize], self.d_max, out);
            }
        }
        for e in out.iter_mut() {
            e.1 = weight * (-(e.1 * e.1) * self.inv_two_var).exp();
        }
    }
}

struct Pool<T> {
    free: Mutex<Vec<Expander<T>>>,
    faces: usize,
}

struct Lease<'p, T: Scalar> {
    pool: &'p Pool<T>,
    ex: Option<Expander<T>>,
}

impl<T: Scalar> Pool<T> {
    fn lease(&self) -> Lease<'_, T> {
        let ex = self.free.lock().unwrap().pop().unwrap_or_else(|| Expander::new(self.faces));
        Lease { pool: self, ex: Some(ex) }
    }
}

impl<T: Scalar> Drop for Lease<'_, T> {
    fn drop(&mut self) {
        if let Some(ex) = self.ex.take() {
            self.pool.free.lock().unwrap().push(ex);
        }
    }
}

const ORDERED_BATCH: usize = 512;

/// Gaussian kernel sum `S(f) = Σ_c raw(c) · exp(−d(c, f)² / (2σ²))` over all
/// sources `c` with `raw(c) > 0` and faces within the truncation radius.
/// The result is not mass-normalized.
pub fn diffuse<T: Scalar>(
    raw: &FaceField<T>,
    mesh: &TriangleMesh<T>,
    adj: &AdjacencyIndex<T>,
    cfg: &DiffusionConfig,
) -> Result<FaceField<T>> {
    cfg.validate()?;
    let n = mesh.face_count();
    if raw.len() != n {
        return Err(Error::LengthMismatch(raw.len(), n));
    }
    let centroids = mesh.centroids();
    let d_max = T::lit(cfg.d_max());
    let sigma2 = T::lit(cfg.sigma2);
    let (inv_two_var, max_hops) = match cfg.metric {
        DistanceMetric::Hopcount => {
            let hs = cfg
                .hop_sigma
                .unwrap_or_else(|| default_hop_sigma(cfg.sigma2, adj.avg_step.to_f64_lossless()));
            // Rings at most `d_max` away in kernel units.
            let max_hops = ((cfg.d_max() / cfg.sigma2) * hs + 1e-9).floor().max(0.0) as u32;
            (T::lit(1.0 / (2.0 * hs * hs)), max_hops)
        }
        _ => (T::one() / (T::lit(2.0) * sigma2 * sigma2), 0),
    };
    let ctx = KernelContext {
        adj,
        centroids: &centroids,
        metric: cfg.metric,
        d_max,
        hop_cap: hop_cap(d_max, adj.avg_step),
        inv_two_var,
        max_hops,
        grid: (cfg.metric == DistanceMetric::Euclidean)
            .then(|| CentroidGrid::new(&centroids, cfg.d_max())),
    };

    let sources: Vec<u32> = (0..n as u32)
        .filter(|&f| raw.values[f as usize] > T::zero())
        .collect();
    let pool = Pool {
        free: Mutex::new(Vec::new()),
        faces: n,
    };

    let values = match cfg.merge {
        MergeMode::Ordered => {
            let mut acc = vec![T::zero(); n];
            for batch in sources.chunks(ORDERED_BATCH) {
                let parts: Vec<Vec<(u32, T)>> = batch
                    .par_iter()
                    .map_init(
                        || pool.lease(),
                        |lease, &s| {
                            let mut out = Vec::new();
                            let ex = lease.ex.as_mut().unwrap();
                            ctx.contributions(ex, s, raw.values[s as usize], &mut out);
                            out
                        },
                    )
                    .collect();
                for part in parts {
                    for (f, v) in part {
                        acc[f as usize] += v;
                    }
                }
            }
            acc
        }
        MergeMode::Unordered => {
            let chunk = sources.len().div_ceil(rayon::current_num_threads() * 4).max(1);
            sources
                .par_chunks(chunk)
                .map(|chunk| {
                    let mut lease = pool.lease();
                    let ex = lease.ex.as_mut().unwrap();
                    let mut acc = vec![T::zero(); n];
                    let mut out = Vec::new();
                    for &s in chunk {
                        ctx.contributions(ex, s, raw.values[s as usize], &mut out);
                        for &(f, v) in &out {
                            acc[f as usize] += v;
                        }
                    }
                    acc
                })
                .reduce_with(|mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                })
                .unwrap_or_else(|| vec![T::zero(); n])
        }
    };
    Ok(FaceField::new(values, Stage::Diffused).with_provenance(raw.provenance.clone()))
}

fn default_hop_sigma(sigma2: f64, avg_step: f64) -> f64 {
    if avg_step > 0.0 {
        (sigma2 / avg_step).max(f64::MIN_POSITIVE)
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::mesh::{connected_components, shapes};

    fn strip(gaps: &[f64]) -> TriangleMesh<f64> {
        // Zig-zag strip of triangles along x, 0.01 tall.
        let mut v = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.01, 0.0)];
        let mut x = 0.0;
        for g in gaps {
            x += g;
            v.push(Vec3::new(x, 0.01 * (v.len() % 2) as f64, 0.0));
        }
        let faces = (0..v.len() as u32 - 2).map(|i| [i, i + 1, i + 2]).collect();
        TriangleMesh::new(v, faces).unwrap()
    }

    #[test]
    fn source_is_at_zero_and_neighbor_is_one_step() {
        let m = shapes::grid_plane::<f64>(8, 0.5, 0.0);
        let adj = AdjacencyIndex::build(&m, 1000, 0);
        let field = truncated_geodesic_field(&m, &adj, 10, 0.06);
        let at = |f: u32| field.iter().find(|e| e.0 == f).map(|e| e.1);
        assert_eq!(at(10), Some(0.0));
        for &g in adj.face_neighbors(10) {
            let want = m.centroid(10).distance(m.centroid(g as usize));
            assert_eq!(at(g), Some(want));
        }
        assert!(field.iter().all(|e| e.1 <= 0.06));
    }

    #[test]
    fn single_step_accumulation() {
        let m = strip(&[0.01, 0.01, 0.01]);
        let adj = AdjacencyIndex::build(&m, 100, 0);
        let gap = m.centroid(0).distance(m.centroid(1));
        let field = truncated_geodesic_field(&m, &adj, 0, 0.06);
        assert_eq!(field[1], (1, gap));
    }

    #[test]
    fn other_component_is_unreachable() {
        let m = shapes::parallel_planes::<f64>(6, 0.03);
        let adj = AdjacencyIndex::build(&m, 1000, 0);
        let labels = connected_components(&adj);
        let field = truncated_geodesic_field(&m, &adj, 0, 10.0);
        assert!(field.iter().all(|&(f, _)| labels[f as usize] == labels[0]));
        assert_eq!(field.len(), 72);
    }

    #[test]
    fn unit_impulse_peak_is_one() {
        let m = shapes::grid_plane::<f64>(10, 0.5, 0.0);
        let adj = AdjacencyIndex::build(&m, 1000, 0);
        let mut raw = FaceField::zeros(m.face_count(), Stage::Raw);
        raw.values[37] = 1.0;
        for metric in [DistanceMetric::Geodesic, DistanceMetric::Euclidean, DistanceMetric::Hopcount] {
            let cfg = DiffusionConfig {
                metric,
                ..Default::default()
            };
            let d = diffuse(&raw, &m, &adj, &cfg).unwrap();
            assert_eq!(d.values[37], 1.0, "{metric:?}");
            assert_eq!(d.stage, Stage::Diffused);
        }
    }

    #[test]
    fn one_sigma_gives_exp_minus_half() {
        // Two faces whose centroids are exactly sigma2 apart.
        let s: f64 = 0.02;
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 3.0 * s, 0.0),
            Vec3::new(1.5 * s, 1.5 * s, 0.0),
            Vec3::new(-1.5 * s, 1.5 * s, 0.0),
        ];
        // centroids: (0.5s, 1.5s) and (-0.5s, 1.5s): distance s
        let m = TriangleMesh::new(v, vec![[0, 2, 1], [0, 1, 3]]).unwrap();
        let adj = AdjacencyIndex::build(&m, 10, 0);
        assert!((m.centroid(0).distance(m.centroid(1)) - s).abs() < 1e-15);
        let raw = FaceField::new(vec![1.0, 0.0], Stage::Raw);
        let d = diffuse(&raw, &m, &adj, &DiffusionConfig::default()).unwrap();
        assert!((d.values[1] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((d.values[1] - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn ordered_and_unordered_agree() {
        let (m, _) = shapes::icosphere::<f64>(10).normalize_unit_diag().unwrap();
        let adj = AdjacencyIndex::build(&m, 10_000, 0);
        let mut raw = FaceField::zeros(m.face_count(), Stage::Raw);
        for f in (0..m.face_count()).step_by(7) {
            raw.values[f] = (f % 5 + 1) as f64;
        }
        let base = DiffusionConfig {
            merge: MergeMode::Ordered,
            ..Default::default()
        };
        let a = diffuse(&raw, &m, &adj, &base).unwrap();
        let a2 = diffuse(&raw, &m, &adj, &base).unwrap();
        assert_eq!(a.values, a2.values);
        let b = diffuse(&raw, &m, &adj, &DiffusionConfig { merge: MergeMode::Unordered, ..base }).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = DiffusionConfig {
            sigma2: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = DiffusionConfig {
            d_max: Some(0.01),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
