//! OBJ and PLY ingestion, PLY export.
//!
//! OBJ: only `v` and `f` records are read. Texture coordinates, normals,
//! groups and materials are skipped; normals are always recomputed.
//! PLY: `ascii 1.0` and `binary_little_endian 1.0`, vertex `x y z` plus a
//! face index list; any other element or property is skipped.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Face, TriangleMesh};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::Ply),
            other => Err(Error::UnsupportedFormat(
                other.unwrap_or("<no extension>").to_string(),
            )),
        }
    }
}

/// Loads a mesh, inferring the format from the file extension.
pub fn load_mesh<T: Scalar>(path: &Path) -> Result<TriangleMesh<T>> {
    load_mesh_as(path, MeshFormat::from_path(path)?)
}

pub fn load_mesh_as<T: Scalar>(path: &Path, format: MeshFormat) -> Result<TriangleMesh<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Obj => {
            let text = String::from_utf8_lossy(&bytes);
            parse_obj(&text)
        }
        MeshFormat::Ply => parse_ply(&bytes),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_obj<T: Scalar>(text: &str) -> Result<TriangleMesh<T>> {
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut faces: Vec<Face> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut c = [T::zero(); 3];
                for slot in &mut c {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(line_no, "vertex needs 3 coordinates"))?;
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad coordinate {tok:?}")))?;
                    *slot = T::lit(v);
                }
                vertices.push(Vec3::from_array(c));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(Error::NonTriangleFace { line: line_no });
                }
                let mut face = [0u32; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    let idx_tok = r.split('/').next().unwrap_or("");
                    let idx: i64 = idx_tok
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad face index {r:?}")))?;
                    let resolved = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => vertices.len() as i64 + i,
                        _ => return Err(parse_err(line_no, "face index 0 is invalid")),
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(
                            line_no,
                            format!("face index {idx} out of range"),
                        ));
                    }
                    *slot = resolved as u32;
                }
                if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                    return Err(parse_err(line_no, "face repeats a vertex"));
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            PlyType::I8 => b[0] as i8 as f64,
            PlyType::U8 => b[0] as f64,
            PlyType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum PlyProperty {
    Scalar { name: String, ty: PlyType },
    List { name: String, count: PlyType, item: PlyType },
}

#[derive(Debug, Clone)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProperty>,
}

#[derive(Debug, PartialEq)]
enum PlyEncoding {
    Ascii,
    BinaryLe,
}

pub fn parse_ply<T: Scalar>(bytes: &[u8]) -> Result<TriangleMesh<T>> {
    // Header is ASCII, terminated by an `end_header` line.
    let mut pos = 0;
    let mut line_no = 0;
    let mut next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let rest = &bytes[*pos..];
        let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
        *pos += (end + 1).min(rest.len());
        line_no += 1;
        Some(String::from_utf8_lossy(&rest[..end]).trim().to_string())
    };

    match next_line(&mut pos) {
        Some(ref l) if l == "ply" => {}
        None => return Err(Error::EmptyMesh),
        _ => return Err(parse_err(1, "missing 'ply' magic")),
    }
    let mut encoding = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_lines = 1;
    loop {
        let Some(line) = next_line(&mut pos) else {
            return Err(parse_err(header_lines, "missing end_header"));
        };
        header_lines += 1;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "ascii", _] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(PlyEncoding::BinaryLe),
            ["format", other, ..] => {
                return Err(Error::UnsupportedFormat(format!("ply {other}")));
            }
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| parse_err(header_lines, "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(header_lines, "property before element"))?;
                el.props.push(PlyProperty::List {
                    name: name.to_string(),
                    count: PlyType::parse(count)
                        .ok_or_else(|| parse_err(header_lines, "bad list count type"))?,
                    item: PlyType::parse(item)
                        .ok_or_else(|| parse_err(header_lines, "bad list item type"))?,
                });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(header_lines, "property before element"))?;
                el.props.push(PlyProperty::Scalar {
                    name: name.to_string(),
                    ty: PlyType::parse(ty)
                        .ok_or_else(|| parse_err(header_lines, format!("bad type {ty}")))?,
                });
            }
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            _ => return Err(parse_err(header_lines, format!("unexpected header line {line:?}"))),
        }
    }
    let encoding = encoding.ok_or_else(|| parse_err(header_lines, "missing format line"))?;

    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut faces: Vec<Face> = Vec::new();

    match encoding {
        PlyEncoding::Ascii => {
            let body = String::from_utf8_lossy(&bytes[pos..]);
            let mut lines = body
                .lines()
                .enumerate()
                .map(|(i, l)| (i + header_lines + 1, l))
                .filter(|(_, l)| !l.trim().is_empty());
            for el in &elements {
                for _ in 0..el.count {
                    let (ln, l) = lines
                        .next()
                        .ok_or_else(|| parse_err(header_lines, format!("truncated {} data", el.name)))?;
                    let mut nums = l.split_whitespace().map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| parse_err(ln, format!("bad number {t:?}")))
                    });
                    let mut take = || nums.next().unwrap_or_else(|| Err(parse_err(ln, "too few values")));
                    let mut record = PlyRecord::default();
                    for p in &el.props {
                        match p {
                            PlyProperty::Scalar { name, .. } => record.scalar(name, take()?),
                            PlyProperty::List { name, .. } => {
                                let n = take()? as usize;
                                let items = (0..n).map(|_| take()).collect::<Result<Vec<_>>>()?;
                                record.list(name, items);
                            }
                        }
                    }
                    record.commit(&el.name, ln, &mut vertices, &mut faces)?;
                }
            }
        }
        PlyEncoding::BinaryLe => {
            let mut cur = pos;
            for el in &elements {
                for rec in 0..el.count {
                    let mut read = |ty: PlyType| -> Result<f64> {
                        let end = cur + ty.size();
                        if end > bytes.len() {
                            return Err(parse_err(
                                header_lines,
                                format!("truncated binary {} record {}", el.name, rec),
                            ));
                        }
                        let v = ty.read_le(&bytes[cur..end]);
                        cur = end;
                        Ok(v)
                    };
                    let mut record = PlyRecord::default();
                    for p in &el.props {
                        match p {
                            PlyProperty::Scalar { name, ty } => record.scalar(name, read(*ty)?),
                            PlyProperty::List { name, count, item } => {
                                let n = read(*count)? as usize;
                                let items = (0..n).map(|_| read(*item)).collect::<Result<Vec<_>>>()?;
                                record.list(name, items);
                            }
                        }
                    }
                    // Binary records have no line numbers; report the record index.
                    record.commit(&el.name, rec + 1, &mut vertices, &mut faces)?;
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces)
}

#[derive(Default)]
struct PlyRecord {
    xyz: [Option<f64>; 3],
    indices: Option<Vec<f64>>,
}

impl PlyRecord {
    fn scalar(&mut self, name: &str, v: f64) {
        match name {
            "x" => self.xyz[0] = Some(v),
            "y" => self.xyz[1] = Some(v),
            "z" => self.xyz[2] = Some(v),
            _ => {}
        }
    }

    fn list(&mut self, name: &str, items: Vec<f64>) {
        if name == "vertex_indices" || name == "vertex_index" {
            self.indices = Some(items);
        }
    }

    fn commit<T: Scalar>(
        self,
        element: &str,
        line: usize,
        vertices: &mut Vec<Vec3<T>>,
        faces: &mut Vec<Face>,
    ) -> Result<()> {
        match element {
            "vertex" => {
                let [Some(x), Some(y), Some(z)] = self.xyz else {
                    return Err(parse_err(line, "vertex without x/y/z"));
                };
                vertices.push(Vec3::new(T::lit(x), T::lit(y), T::lit(z)));
            }
            "face" => {
                let idx = self
                    .indices
                    .ok_or_else(|| parse_err(line, "face without vertex_indices"))?;
                if idx.len() != 3 {
                    return Err(Error::NonTriangleFace { line });
                }
                let f = [idx[0] as u32, idx[1] as u32, idx[2] as u32];
                if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                    return Err(parse_err(line, "face repeats a vertex"));
                }
                faces.push(f);
            }
            _ => {}
        }
        Ok(())
    }
}

/// Writes an ASCII PLY with optional per-vertex `uchar` RGB. `comments` are
/// emitted as header comment lines.
pub fn write_ply<T: Scalar>(
    path: &Path,
    mesh: &TriangleMesh<T>,
    colors: Option<&[[u8; 3]]>,
    comments: &[String],
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_ply_to(&mut w, mesh, colors, comments)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_ply_to<T: Scalar, W: Write>(
    w: &mut W,
    mesh: &TriangleMesh<T>,
    colors: Option<&[[u8; 3]]>,
    comments: &[String],
) -> std::io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    for c in comments {
        writeln!(w, "comment {c}")?;
    }
    writeln!(w, "element vertex {}", mesh.vertex_count())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property double {axis}")?;
    }
    if colors.is_some() {
        for ch in ["red", "green", "blue"] {
            writeln!(w, "property uchar {ch}")?;
        }
    }
    writeln!(w, "element face {}", mesh.face_count())?;
    writeln!(w, "property list uchar uint vertex_indices")?;
    writeln!(w, "end_header")?;
    for (i, p) in mesh.vertices.iter().enumerate() {
        let (x, y, z) = (p.x.to_f64_lossless(), p.y.to_f64_lossless(), p.z.to_f64_lossless());
        match colors {
            Some(c) => writeln!(w, "{x} {y} {z} {} {} {}", c[i][0], c[i][1], c[i][2])?,
            None => writeln!(w, "{x} {y} {z}")?,
        }
    }
    for f in &mesh.faces {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}
