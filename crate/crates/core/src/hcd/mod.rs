//! Hit counts to continuous saliency: Gaussian diffusion over the face graph,
//! face-to-vertex mapping, Laplacian smoothing, normalization and gamma.

mod colormap;
mod diffusion;
mod pipeline;
mod smooth;

pub use colormap::Colormap;
pub use diffusion::{diffuse, truncated_geodesic_field, DiffusionConfig, DistanceMetric, MergeMode};
pub use pipeline::{run_pipeline, SaliencyResult};
pub use smooth::{face_to_vertex, finalize, laplacian_smooth, SmoothConfig};
