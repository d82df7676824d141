use crate::geom::{Aabb, Vec3};
use crate::scalar::Scalar;

/// Uniform bucket grid for nearest-point queries.
#[derive(Debug, Clone)]
pub struct PointGrid<T> {
    points: Vec<Vec3<T>>,
    origin: Vec3<T>,
    cell: T,
    dims: [usize; 3],
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl<T: Scalar> PointGrid<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Self {
        let bounds = Aabb::from_points(points.iter());
        let n = points.len().max(1);
        let diag = if bounds.is_empty() { T::zero() } else { bounds.diagonal() };
        let per_axis = (n as f64).cbrt().ceil().max(1.0);
        let cell = if diag > T::zero() {
            diag / T::lit(per_axis)
        } else {
            T::one()
        };
        let origin = if bounds.is_empty() { Vec3::zero() } else { bounds.min };
        let extent = if bounds.is_empty() { Vec3::zero() } else { bounds.extent() };
        let dim = |e: T| ((e / cell).floor().to_f64_lossless() as usize + 1).min(1 << 10);
        let dims = [dim(extent.x), dim(extent.y), dim(extent.z)];
        let mut grid = Self {
            points,
            origin,
            cell,
            dims,
            starts: Vec::new(),
            items: Vec::new(),
        };
        let cells = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0u32; cells + 1];
        let keys: Vec<usize> = grid.points.iter().map(|&p| grid.flat(grid.cell_of(p))).collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; keys.len()];
        for (i, &k) in keys.iter().enumerate() {
            items[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        grid.starts = counts;
        grid.items = items;
        grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn cell_of(&self, p: Vec3<T>) -> [usize; 3] {
        let rel = p - self.origin;
        let c = |v: T, d: usize| {
            let i = (v / self.cell).floor().to_f64_lossless();
            if i.is_nan() || i < 0.0 {
                0
            } else {
                (i as usize).min(d - 1)
            }
        };
        [c(rel.x, self.dims[0]), c(rel.y, self.dims[1]), c(rel.z, self.dims[2])]
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Index of the closest point; lowest index on ties.
    pub fn nearest(&self, p: Vec3<T>) -> Option<usize> {
        if self.points.is_empty() {
            return None;
        }
        let c = self.cell_of(p);
        let max_ring = self.dims.iter().copied().max().unwrap();
        let mut best: Option<(T, usize)> = None;
        for ring in 0..=max_ring {
            let r = ring as isize;
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        let (x, y, z) = (c[0] as isize + dx, c[1] as isize + dy, c[2] as isize + dz);
                        if x < 0
                            || y < 0
                            || z < 0
                            || x >= self.dims[0] as isize
                            || y >= self.dims[1] as isize
                            || z >= self.dims[2] as isize
                        {
                            continue;
                        }
                        let k = self.flat([x as usize, y as usize, z as usize]);
                        for &i in &self.items[self.starts[k] as usize..self.starts[k + 1] as usize] {
                            let d = self.points[i as usize].distance_squared(p);
                            let i = i as usize;
                            if best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                                best = Some((d, i));
                            }
                        }
                    }
                }
            }
            // Cells on the next ring are at least `ring · cell` away (the
            // query may sit outside the grid, hence no `+ 1`).
            if let Some((bd, _)) = best {
                let reach = self.cell * T::from_count(ring);
                if bd <= reach * reach {
                    break;
                }
            }
        }
        best.map(|b| b.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec3<f64>> = (0..2000)
            .map(|_| Vec3::new(rng.random(), rng.random::<f64>() * 0.1, rng.random()))
            .collect();
        let grid = PointGrid::new(pts.clone());
        for _ in 0..500 {
            let q = Vec3::new(
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..0.6),
                rng.random_range(-0.5..1.5),
            );
            let want = (0..pts.len())
                .min_by(|&a, &b| pts[a].distance_squared(q).partial_cmp(&pts[b].distance_squared(q)).unwrap())
                .unwrap();
            assert_eq!(grid.nearest(q), Some(want));
        }
    }

    #[test]
    fn single_point_and_empty() {
        let g = PointGrid::new(vec![Vec3::new(1.0, 2.0, 3.0)]);
        assert_eq!(g.nearest(Vec3::new(-5.0, 0.0, 9.0)), Some(0));
        assert_eq!(PointGrid::<f64>::new(vec![]).nearest(Vec3::zero()), None);
    }
}
