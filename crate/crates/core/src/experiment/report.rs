use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{FaceBucket, MetricReport};

pub const SCHEMA_VERSION: u32 = 1;

pub fn write_metric_rows(path: &Path, rows: &[MetricReport], comment: &str) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "# {comment}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_metric_rows(path: &Path) -> Result<Vec<MetricReport>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display()))))
        .collect()
}

/// Mean metrics of one `(acquisition, processing)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub acquisition: String,
    pub processing: String,
    pub rows: usize,
    pub sauc: Option<f64>,
    pub cc: Option<f64>,
    pub kl: Option<f64>,
    pub ic: Option<f64>,
}

/// Coverage of the meshes falling in one face-count bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketSummary {
    pub bucket: FaceBucket,
    pub meshes: usize,
    pub coverage_vcs: f64,
    pub coverage_single: f64,
    /// Ratio of the two coverage means.
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub cells: Vec<CellSummary>,
    /// Only buckets that contain at least one mesh.
    pub buckets: Vec<BucketSummary>,
    /// Meshes left out of the coverage table because single-ray coverage was
    /// zero.
    pub excluded_meshes: usize,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .flatten()
        .filter(|v| v.is_finite())
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn rank(name: &str, order: &[&str]) -> usize {
    order.iter().position(|o| *o == name).unwrap_or(order.len())
}

/// Table-style aggregation of metric rows. Rows must agree on schema and
/// pipeline version.
pub fn aggregate(rows: &[MetricReport]) -> Result<Report> {
    let Some(first) = rows.first() else {
        return Err(Error::SchemaMismatch("no metric rows".into()));
    };
    for r in rows {
        if r.schema_version != first.schema_version {
            return Err(Error::SchemaMismatch(format!(
                "schema version {} vs {}",
                r.schema_version, first.schema_version
            )));
        }
        if r.pipeline_version != first.pipeline_version {
            return Err(Error::SchemaMismatch(format!(
                "pipeline version {} vs {}",
                r.pipeline_version, first.pipeline_version
            )));
        }
    }

    let mut by_cell: BTreeMap<(usize, usize, String, String), Vec<&MetricReport>> = BTreeMap::new();
    for r in rows {
        let key = (
            rank(&r.acquisition, &["single_ray", "vcs"]),
            rank(&r.processing, &["hopcount", "euclidean", "geodesic"]),
            r.acquisition.clone(),
            r.processing.clone(),
        );
        by_cell.entry(key).or_default().push(r);
    }
    let cells = by_cell
        .into_iter()
        .map(|((_, _, acquisition, processing), rs)| CellSummary {
            acquisition,
            processing,
            rows: rs.len(),
            sauc: mean(rs.iter().map(|r| r.sauc)),
            cc: mean(rs.iter().map(|r| r.cc)),
            kl: mean(rs.iter().map(|r| r.kl)),
            ic: mean(rs.iter().map(|r| r.ic)),
        })
        .collect();

    // Coverage is per mesh; ablation rows repeat it.
    let mut seen = HashSet::new();
    let mut by_bucket: BTreeMap<FaceBucket, Vec<&MetricReport>> = BTreeMap::new();
    let mut excluded = 0;
    for r in rows {
        if !seen.insert((r.mesh.as_str(), r.config_digest.as_str())) {
            continue;
        }
        if !r.improvement.is_finite() {
            excluded += 1;
            continue;
        }
        by_bucket.entry(FaceBucket::for_face_count(r.face_count)).or_default().push(r);
    }
    let buckets = by_bucket
        .into_iter()
        .map(|(bucket, rs)| {
            let n = rs.len() as f64;
            let coverage_vcs = rs.iter().map(|r| r.coverage_vcs).sum::<f64>() / n;
            let coverage_single = rs.iter().map(|r| r.coverage_single).sum::<f64>() / n;
            BucketSummary {
                bucket,
                meshes: rs.len(),
                coverage_vcs,
                coverage_single,
                improvement: coverage_vcs / coverage_single,
            }
        })
        .collect();
    Ok(Report {
        cells,
        buckets,
        excluded_meshes: excluded,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "acquisition,processing,rows,sauc,cc,kl,ic")?;
        for c in &self.cells {
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                c.acquisition,
                c.processing,
                c.rows,
                cell(c.sauc),
                cell(c.cc),
                cell(c.kl),
                cell(c.ic)
            )?;
        }
        writeln!(f)?;
        writeln!(f, "faces,meshes,coverage_single,coverage_vcs,improvement")?;
        for b in &self.buckets {
            writeln!(
                f,
                "{},{},{:.4},{:.4},{:.2}",
                b.bucket, b.meshes, b.coverage_single, b.coverage_vcs, b.improvement
            )?;
        }
        if self.excluded_meshes > 0 {
            writeln!(f, "# {} meshes without single-ray coverage excluded", self.excluded_meshes)?;
        }
        Ok(())
    }
}
