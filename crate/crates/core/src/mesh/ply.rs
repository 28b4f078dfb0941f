//! PLY mesh I/O: ASCII and binary little-endian.
//!
//! The reader accepts any scalar property types and ignores properties other
//! than `x`, `y`, `z` and the face index list. The writer always emits
//! float32 coordinates and `uchar`/`int` face lists in binary little-endian.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::TriangleMesh;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return Err(Error::Format(format!("PLY: unknown scalar type `{s}`"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

fn header(reader: &mut impl BufRead) -> Result<(Encoding, Vec<Element>)> {
    let mut line = String::new();
    let mut next_line = |line: &mut String| -> Result<()> {
        line.clear();
        let n = reader
            .read_line(line)
            .map_err(|e| Error::Format(format!("PLY header: {e}")))?;
        if n == 0 {
            return Err(Error::Format("PLY header: unexpected end of file".into()));
        }
        Ok(())
    };
    next_line(&mut line)?;
    if line.trim_end() != "ply" {
        return Err(Error::Format("not a PLY file (missing `ply` magic)".into()));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        next_line(&mut line)?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => encoding = Some(Encoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(Encoding::BinaryLe),
            ["format", other, _] => {
                return Err(Error::Unsupported(format!("PLY format `{other}`")));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::Format(format!("PLY: bad element count `{count}`")))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::Format("PLY: property before element".into()))?;
                el.props
                    .push(Property::List(name.to_string(), Scalar::parse(ct)?, Scalar::parse(it)?));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::Format("PLY: property before element".into()))?;
                el.props.push(Property::Scalar(name.to_string(), Scalar::parse(ty)?));
            }
            _ => return Err(Error::Format(format!("PLY header: cannot parse `{}`", line.trim_end()))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::Format("PLY header lacks a format line".into()))?;
    Ok((encoding, elements))
}

/// One parsed element record: scalars then lists, in property order.
enum Value {
    Scalar(f64),
    List(Vec<f64>),
}

trait RecordSource {
    fn scalar(&mut self, ty: Scalar) -> Result<f64>;
}

struct AsciiSource<'a> {
    tokens: std::str::SplitWhitespace<'a>,
}

impl RecordSource for AsciiSource<'_> {
    fn scalar(&mut self, ty: Scalar) -> Result<f64> {
        let t = self
            .tokens
            .next()
            .ok_or_else(|| Error::Format("PLY body: unexpected end of data".into()))?;
        let bad = || Error::Format(format!("PLY body: bad number `{t}`"));
        // parse at the declared width so ASCII and binary agree
        if ty == Scalar::F32 {
            t.parse::<f32>().map(f64::from).map_err(|_| bad())
        } else {
            t.parse::<f64>().map_err(|_| bad())
        }
    }
}

struct BinarySource<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl RecordSource for BinarySource<'_> {
    fn scalar(&mut self, ty: Scalar) -> Result<f64> {
        let end = self.pos + ty.size();
        let b = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format("PLY body: unexpected end of data".into()))?;
        self.pos = end;
        Ok(ty.read_le(b))
    }
}

fn read_record(src: &mut impl RecordSource, props: &[Property]) -> Result<Vec<Value>> {
    props
        .iter()
        .map(|p| match p {
            Property::Scalar(_, ty) => Ok(Value::Scalar(src.scalar(*ty)?)),
            Property::List(_, ct, it) => {
                let n = src.scalar(*ct)?;
                if !(n >= 0.0 && n.fract() == 0.0) {
                    return Err(Error::Format(format!("PLY body: bad list length {n}")));
                }
                (0..n as usize)
                    .map(|_| src.scalar(*it))
                    .collect::<Result<Vec<_>>>()
                    .map(Value::List)
            }
        })
        .collect()
}

/// Reads a triangle mesh. Polygons with more than three corners are split
/// into fans.
pub fn read_ply(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let (encoding, elements) = header(&mut reader)?;
    let mut body = Vec::new();
    reader.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let text;
    let mut ascii = None;
    let mut binary = None;
    match encoding {
        Encoding::Ascii => {
            text = String::from_utf8(body)
                .map_err(|_| Error::Format("PLY ASCII body is not UTF-8".into()))?;
            ascii = Some(AsciiSource { tokens: text.split_whitespace() });
        }
        Encoding::BinaryLe => binary = Some(BinarySource { bytes: &body, pos: 0 }),
    }
    for el in &elements {
        let coord_idx = ["x", "y", "z"].map(|c| {
            el.props
                .iter()
                .position(|p| matches!(p, Property::Scalar(n, _) if n == c))
        });
        let list_idx = el.props.iter().position(|p| {
            matches!(p, Property::List(n, _, _) if n == "vertex_indices" || n == "vertex_index")
        });
        for _ in 0..el.count {
            let rec = match (&mut ascii, &mut binary) {
                (Some(s), _) => read_record(s, &el.props)?,
                (_, Some(s)) => read_record(s, &el.props)?,
                _ => unreachable!(),
            };
            if el.name == "vertex" {
                let mut p = Vec3::zeros();
                for (k, idx) in coord_idx.iter().enumerate() {
                    let idx = idx.ok_or_else(|| Error::Format("PLY vertex lacks x/y/z".into()))?;
                    if let Value::Scalar(v) = rec[idx] {
                        p[k] = v;
                    }
                }
                vertices.push(p);
            } else if el.name == "face" {
                let idx = list_idx.ok_or_else(|| Error::Format("PLY face lacks vertex_indices".into()))?;
                let Value::List(ids) = &rec[idx] else { unreachable!() };
                if ids.len() < 3 || ids.iter().any(|&i| i < 0.0) {
                    return Err(Error::Format(format!("PLY: invalid face {ids:?}")));
                }
                let ids: Vec<usize> = ids.iter().map(|&i| i as usize).collect();
                for k in 1..ids.len() - 1 {
                    faces.push([ids[0], ids[k], ids[k + 1]]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces)
}

fn header_text(mesh: &TriangleMesh, format: &str) -> String {
    format!(
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertex_count(),
        mesh.face_count()
    )
}

/// Writes binary little-endian PLY.
pub fn write_ply(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut out = header_text(mesh, "binary_little_endian").into_bytes();
    out.reserve(mesh.vertex_count() * 12 + mesh.face_count() * 13);
    for v in &mesh.vertices {
        for c in v.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    for f in &mesh.faces {
        out.push(3);
        for &i in f {
            let i = i32::try_from(i).map_err(|_| Error::Unsupported("vertex index exceeds int32".into()))?;
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    write_all(path.as_ref(), &out)
}

/// Writes ASCII PLY.
pub fn write_ply_ascii(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    use std::fmt::Write as _;
    let mut s = header_text(mesh, "ascii");
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v.x as f32, v.y as f32, v.z as f32);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    write_all(path.as_ref(), s.as_bytes())
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
