//! Scalar fields over faces or vertices, tagged with their pipeline stage.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Raw,
    Diffused,
    /// Face values mapped to vertices, before smoothing.
    Mapped,
    Smoothed,
    Normalized,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Raw => "raw",
            Stage::Diffused => "diffused",
            Stage::Mapped => "mapped",
            Stage::Smoothed => "smoothed",
            Stage::Normalized => "normalized",
        };
        f.write_str(s)
    }
}

/// One value per face (or per vertex, see [`VertexField`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub values: Vec<T>,
    pub stage: Stage,
    /// Digest of the configuration that produced the field.
    pub provenance: String,
}

pub type FaceField<T> = Field<T>;
pub type VertexField<T> = Field<T>;

impl<T: Scalar> Field<T> {
    pub fn new(values: Vec<T>, stage: Stage) -> Self {
        Self {
            values,
            stage,
            provenance: String::new(),
        }
    }

    pub fn zeros(len: usize, stage: Stage) -> Self {
        Self::new(vec![T::zero(); len], stage)
    }

    pub fn with_provenance(mut self, digest: impl Into<String>) -> Self {
        self.provenance = digest.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn min_max(&self) -> Option<(T, T)> {
        let mut it = self.values.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    /// Index of the largest value; lowest index on ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|b| b.0)
    }

    /// `id,value` CSV with a leading `#` comment line.
    pub fn write_csv_to<W: Write>(&self, w: &mut W, id_column: &str, comment: &str) -> std::io::Result<()> {
        writeln!(w, "# {comment} stage={}", self.stage)?;
        writeln!(w, "{id_column},value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i},{}", v.to_f64_lossless())?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path, id_column: &str, comment: &str) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv_to(&mut w, id_column, comment)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a field written by [`Field::write_csv`]. Ids must be `0..n` in order.
    pub fn read_csv(path: &Path, stage: Stage) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut values = Vec::new();
        for (i, row) in rdr.deserialize::<(usize, f64)>().enumerate() {
            let (id, v) = row?;
            if id != i {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected id {i}, found {id}"),
                });
            }
            values.push(T::lit(v));
        }
        Ok(Self::new(values, stage))
    }
}
