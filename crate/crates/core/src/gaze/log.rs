//! JSON-lines gaze log: one record per line,
//! `{"t": float, "subject": int, "origin": [x,y,z], "m_c": [9 floats row-major]}`.
//! Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sort_and_number, GazeSample};
use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};
use crate::scalar::Scalar;

const ORTHONORMAL_TOL: f64 = 1e-4;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    t: f64,
    subject: u32,
    origin: [f64; 3],
    m_c: [f64; 9],
}

pub fn read_gaze_log<T: Scalar>(path: &Path) -> Result<Vec<GazeSample<T>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gaze_log(&text)
}

/// Parses and validates a log; output is sorted by `(subject, t)` with frame
/// numbers assigned.
pub fn parse_gaze_log<T: Scalar>(text: &str) -> Result<Vec<GazeSample<T>>> {
    let mut out = Vec::new();
    let records = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    for (i, line) in records.enumerate() {
        let record = i + 1;
        let r: Record = serde_json::from_str(line).map_err(|e| Error::GazeSchema {
            record,
            msg: e.to_string(),
        })?;
        if !r.t.is_finite()
            || !r.origin.iter().all(|v| v.is_finite())
            || !r.m_c.iter().all(|v| v.is_finite())
        {
            return Err(Error::GazeSchema {
                record,
                msg: "non-finite value".into(),
            });
        }
        let m = Mat3::from_row_major(r.m_c);
        if m.determinant() < 0.0 {
            return Err(Error::ImproperRotation { record });
        }
        let err = m.orthonormality_error();
        if err > ORTHONORMAL_TOL {
            return Err(Error::NonOrthonormal { record, error: err });
        }
        out.push(GazeSample {
            t: T::lit(r.t),
            subject: r.subject,
            frame: 0,
            origin: Vec3::from_array(r.origin).cast(),
            gaze_to_world: Mat3::from_row_major(r.m_c.map(T::lit)),
        });
    }
    sort_and_number(&mut out);
    Ok(out)
}

pub fn write_gaze_log<T: Scalar>(path: &Path, samples: &[GazeSample<T>], header: Option<&str>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_gaze_log_to(&mut w, samples, header)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_gaze_log_to<T: Scalar, W: Write>(
    w: &mut W,
    samples: &[GazeSample<T>],
    header: Option<&str>,
) -> std::io::Result<()> {
    if let Some(h) = header {
        writeln!(w, "# {h}")?;
    }
    for s in samples {
        let r = Record {
            t: s.t.to_f64_lossless(),
            subject: s.subject,
            origin: s.origin.cast::<f64>().to_array(),
            m_c: s.gaze_to_world.to_row_major().map(|v| v.to_f64_lossless()),
        };
        serde_json::to_writer(&mut *w, &r)?;
        writeln!(w)?;
    }
    Ok(())
}
