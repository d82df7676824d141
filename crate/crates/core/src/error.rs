use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-triangle face at line {line}")]
    NonTriangleFace { line: usize },

    #[error("empty mesh")]
    EmptyMesh,

    #[error("face {face} references vertex {vertex}, but the mesh has {count} vertices")]
    FaceIndexOutOfRange { face: usize, vertex: usize, count: usize },

    #[error("degenerate AABB")]
    DegenerateAabb,

    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),

    #[error("gaze log schema violation at record {record}: {msg}")]
    GazeSchema { record: usize, msg: String },

    #[error("improper rotation at record {record}")]
    ImproperRotation { record: usize },

    #[error("non-orthonormal M_C at record {record} (error {error:.3e})")]
    NonOrthonormal { record: usize, error: f64 },

    #[error("pathological sigma1: no spread angle accepted after {0} draws")]
    PathologicalSigma(usize),

    #[error("fixation target face {face} out of range (mesh has {count} faces)")]
    TargetOutOfRange { face: usize, count: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("undefined CC: {0}")]
    UndefinedCc(&'static str),

    #[error("all-zero field")]
    EmptyField,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty positives")]
    EmptyPositives,

    #[error("degenerate halves: {0}")]
    DegenerateHalves(String),

    #[error("hit log error at record {record}: {msg}")]
    HitLog { record: usize, msg: String },

    #[error("inconsistent metric files: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
