use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::colormap::Colormap;
use crate::error::{Error, Result};
use crate::field::{FaceField, Stage, VertexField};
use crate::mesh::AdjacencyIndex;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothConfig {
    pub lambda: f64,
    pub iterations: usize,
    pub gamma: f64,
    pub colormap: String,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            iterations: 3,
            gamma: 0.5,
            colormap: "viridis".into(),
        }
    }
}

impl SmoothConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config("lambda must be in [0, 1]".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Config("gamma must be > 0".into()));
        }
        Colormap::by_name(&self.colormap)?;
        Ok(())
    }
}

/// Mean of incident face values per vertex. Vertices with no incident face
/// get 0.
pub fn face_to_vertex<T: Scalar>(faces: &FaceField<T>, adj: &AdjacencyIndex<T>) -> VertexField<T> {
    let mut isolated = 0usize;
    let values = (0..adj.vertex_count())
        .map(|v| {
            let inc = adj.incident_faces(v);
            if inc.is_empty() {
                isolated += 1;
                T::zero()
            } else {
                let sum: T = inc.iter().map(|&f| faces.values[f as usize]).sum();
                sum / T::from_count(inc.len())
            }
        })
        .collect();
    if isolated > 0 {
        log::warn!("{isolated} isolated vertices mapped to 0");
    }
    VertexField::new(values, Stage::Mapped).with_provenance(faces.provenance.clone())
}

/// Synchronous umbrella smoothing: every iteration reads only the previous
/// iteration's values. `s'(v) = (1 − λ)·s(v) + λ·mean(s(N(v)))`; vertices
/// without neighbors are left alone.
pub fn laplacian_smooth<T: Scalar>(field: &VertexField<T>, adj: &AdjacencyIndex<T>, lambda: T, iterations: usize) -> VertexField<T> {
    let mut cur = field.values.clone();
    let keep = T::one() - lambda;
    for _ in 0..iterations {
        cur = (0..cur.len())
            .into_par_iter()
            .map(|v| {
                let nb = adj.vertex_neighbors(v);
                if nb.is_empty() {
                    cur[v]
                } else {
                    let sum: T = nb.iter().map(|&u| cur[u as usize]).sum();
                    keep * cur[v] + lambda * (sum / T::from_count(nb.len()))
                }
            })
            .collect();
    }
    VertexField::new(cur, Stage::Smoothed).with_provenance(field.provenance.clone())
}

/// Min-max normalization to `[0, 1]` followed by `s^γ`, plus per-vertex
/// colors. A constant field normalizes to all zeros.
pub fn finalize<T: Scalar>(field: &VertexField<T>, cfg: &SmoothConfig) -> Result<(VertexField<T>, Vec<[u8; 3]>)> {
    let cmap = Colormap::by_name(&cfg.colormap)?;
    let gamma = T::lit(cfg.gamma);
    let values: Vec<T> = match field.min_max() {
        Some((lo, hi)) if hi > lo && (hi - lo).is_finite() => {
            let span = hi - lo;
            field
                .values
                .iter()
                .map(|&v| {
                    let s = (v - lo) / span;
                    if gamma == T::lit(0.5) {
                        s.sqrt()
                    } else {
                        s.powf(gamma)
                    }
                })
                .collect()
        }
        _ => {
            log::warn!("saliency field is constant; normalized to zeros");
            vec![T::zero(); field.len()]
        }
    };
    let rgb = values.iter().map(|&s| cmap.rgb(s)).collect();
    Ok((VertexField::new(values, Stage::Normalized).with_provenance(field.provenance.clone()), rgb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::mesh::TriangleMesh;

    fn fan() -> (TriangleMesh<f64>, AdjacencyIndex<f64>) {
        // Center vertex 0 with four ring vertices; every ring vertex touches
        // the center.
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
        ];
        let f = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4]];
        let m = TriangleMesh::new(v, f).unwrap();
        let a = AdjacencyIndex::build(&m, 10, 0);
        (m, a)
    }

    #[test]
    fn vertex_value_is_incident_mean() {
        let (_, adj) = fan();
        let faces = FaceField::new(vec![1.0, 2.0, 3.0], Stage::Diffused);
        let v = face_to_vertex(&faces, &adj);
        assert_eq!(v.values[0], 2.0);
        assert_eq!(v.values[1], 1.0);
        assert_eq!(v.values[2], 1.5);
        assert_eq!(v.stage, Stage::Mapped);
    }

    #[test]
    fn isolated_vertex_maps_to_zero() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(5.0, 5.0, 5.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 1, 2]]).unwrap();
        let adj = AdjacencyIndex::build(&m, 10, 0);
        let out = face_to_vertex(&FaceField::new(vec![4.0], Stage::Diffused), &adj);
        assert_eq!(out.values, vec![4.0, 4.0, 4.0, 0.0]);
    }

    #[test]
    fn one_step_half_lambda() {
        // Center at 0, all four ring neighbors at 1.
        let (_, adj) = fan();
        let f = VertexField::new(vec![0.0, 1.0, 1.0, 1.0, 1.0], Stage::Mapped);
        let s = laplacian_smooth(&f, &adj, 0.5, 1);
        assert_eq!(s.values[0], 0.5);
    }

    #[test]
    fn update_is_synchronous() {
        let (_, adj) = fan();
        let f = VertexField::new(vec![1.0, 0.0, 0.0, 0.0, 0.0], Stage::Mapped);
        let s = laplacian_smooth(&f, &adj, 1.0, 1);
        // Each ring vertex sees the old center value, not an updated one.
        assert_eq!(s.values[0], 0.0);
        assert_eq!(s.values[1], 0.5);
        assert_eq!(s.values[2], 1.0 / 3.0);
    }

    #[test]
    fn constant_field_is_a_fixed_point() {
        let (_, adj) = fan();
        let f = VertexField::new(vec![0.7; 5], Stage::Mapped);
        let s = laplacian_smooth(&f, &adj, 0.5, 3);
        assert!(s.values.iter().all(|&v| (v - 0.7f64).abs() < 1e-15));
    }

    #[test]
    fn normalize_and_gamma() {
        let f = VertexField::new(vec![0.0, 0.25, 1.0], Stage::Smoothed);
        let (n, rgb) = finalize(&f, &SmoothConfig::default()).unwrap();
        assert_eq!(n.values, vec![0.0, 0.5, 1.0]);
        assert_eq!(rgb[2], [253, 231, 37]);
        assert_eq!(rgb[0], [68, 1, 84]);
    }

    #[test]
    fn constant_field_normalizes_to_zero() {
        let f = VertexField::new(vec![3.0; 4], Stage::Smoothed);
        let (n, _) = finalize(&f, &SmoothConfig::default()).unwrap();
        assert_eq!(n.values, vec![0.0; 4]);
    }
}
