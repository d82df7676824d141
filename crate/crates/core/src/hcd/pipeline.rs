use super::{diffuse, face_to_vertex, finalize, laplacian_smooth, DiffusionConfig, SmoothConfig};
use crate::error::Result;
use crate::field::{FaceField, VertexField};
use crate::mesh::{AdjacencyIndex, TriangleMesh};
use crate::sampler::{accumulate_raw, HitRecord};
use crate::scalar::Scalar;

/// Every intermediate of one saliency computation.
#[derive(Debug, Clone)]
pub struct SaliencyResult<T> {
    pub raw: FaceField<T>,
    pub diffused: FaceField<T>,
    pub mapped: VertexField<T>,
    pub smoothed: VertexField<T>,
    pub saliency: VertexField<T>,
    pub rgb: Vec<[u8; 3]>,
}

impl<T: Scalar> SaliencyResult<T> {
    pub fn with_provenance(mut self, digest: &str) -> Self {
        for f in [&mut self.raw, &mut self.diffused, &mut self.mapped, &mut self.smoothed, &mut self.saliency] {
            f.provenance = digest.to_string();
        }
        self
    }
}

/// Hits → raw counts → diffused face field → vertex field → smoothed →
/// normalized saliency with colors.
pub fn run_pipeline<T: Scalar>(
    mesh: &TriangleMesh<T>,
    adj: &AdjacencyIndex<T>,
    hits: &[HitRecord<T>],
    diffusion: &DiffusionConfig,
    smoothing: &SmoothConfig,
) -> Result<SaliencyResult<T>> {
    smoothing.validate()?;
    let raw = accumulate_raw(hits, mesh.face_count());
    let diffused = diffuse(&raw, mesh, adj, diffusion)?;
    let mapped = face_to_vertex(&diffused, adj);
    let smoothed = laplacian_smooth(&mapped, adj, T::lit(smoothing.lambda), smoothing.iterations);
    let (saliency, rgb) = finalize(&smoothed, smoothing)?;
    Ok(SaliencyResult {
        raw,
        diffused,
        mapped,
        smoothed,
        saliency,
        rgb,
    })
}
