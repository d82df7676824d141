//! Mesh saliency from gaze: view-cone ray sampling against triangle meshes,
//! geodesic Gaussian diffusion of hit counts into per-vertex saliency, and
//! the usual saliency evaluation metrics.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod error;
pub mod experiment;
pub mod field;
pub mod gaze;
pub mod geom;
pub mod hcd;
pub mod mesh;
pub mod metrics;
pub mod rng;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use field::{Field, Stage};
pub use scalar::Scalar;

pub type Vector3 = geom::Vec3<f64>;
pub type Matrix3 = geom::Mat3<f64>;
pub type Mesh = mesh::TriangleMesh<f64>;
pub type Mesh32 = mesh::TriangleMesh<f32>;
pub type Adjacency = mesh::AdjacencyIndex<f64>;
pub type Accel = mesh::RayAccel<f64>;
pub type Sample = gaze::GazeSample<f64>;
pub type Hit = sampler::HitRecord<f64>;
pub type FaceField = field::FaceField<f64>;
pub type VertexField = field::VertexField<f64>;
pub type Saliency = hcd::SaliencyResult<f64>;
