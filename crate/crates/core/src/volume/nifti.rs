//! NIfTI-1 single-file (`.nii`, `.nii.gz`) reader and writer.
//!
//! Reads uint8, int16 and float32 volumes in either byte order and writes
//! little-endian files with the sform set to the grid affine. The `descrip`
//! field carries the grid kind (`sdf:clip=<mm>`, `mask`, `label`).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use nalgebra::{Matrix3, Matrix4};

use crate::{Error, Result, Vec3};

use super::{Affine, GridKind, VoxelGrid};

pub const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;

pub const DT_UINT8: i16 = 2;
pub const DT_INT16: i16 = 4;
pub const DT_FLOAT32: i16 = 16;

const SDF_DESCRIP_PREFIX: &str = "sdf:clip=";

/// Header fields this crate honours.
#[derive(Clone, Debug, PartialEq)]
pub struct NiftiHeader {
    pub dim: [i16; 8],
    pub datatype: i16,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub descrip: String,
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
    pub magic: [u8; 4],
}

impl Default for NiftiHeader {
    fn default() -> Self {
        NiftiHeader {
            dim: [3, 1, 1, 1, 1, 1, 1, 1],
            datatype: DT_FLOAT32,
            bitpix: 32,
            pixdim: [1.0; 8],
            vox_offset: VOX_OFFSET as f32,
            scl_slope: 0.0,
            scl_inter: 0.0,
            descrip: String::new(),
            qform_code: 0,
            sform_code: 0,
            quatern: [0.0; 3],
            qoffset: [0.0; 3],
            srow: [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
            magic: *b"n+1\0",
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    big_endian: bool,
}

impl Reader<'_> {
    fn bytes<const N: usize>(&self, off: usize) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.buf[off..off + N]);
        if self.big_endian {
            b.reverse();
        }
        b
    }
    fn i16(&self, off: usize) -> i16 {
        i16::from_le_bytes(self.bytes(off))
    }
    fn i32(&self, off: usize) -> i32 {
        i32::from_le_bytes(self.bytes(off))
    }
    fn f32(&self, off: usize) -> f32 {
        f32::from_le_bytes(self.bytes(off))
    }
}

impl NiftiHeader {
    /// Parses a 348-byte header; returns it with the detected byte order
    /// (`true` for big-endian).
    pub fn parse(buf: &[u8]) -> Result<(Self, bool)> {
        if buf.len() < HEADER_SIZE {
            return Err(Error::Format(format!(
                "file too short for a NIfTI-1 header ({} bytes)",
                buf.len()
            )));
        }
        let mut r = Reader {
            buf,
            big_endian: false,
        };
        if r.i32(0) != HEADER_SIZE as i32 {
            r.big_endian = true;
            if r.i32(0) != HEADER_SIZE as i32 {
                return Err(Error::Format("sizeof_hdr is not 348".into()));
            }
        }
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&buf[344..348]);
        if &magic != b"n+1\0" && &magic != b"ni1\0" {
            return Err(Error::Format(format!("bad NIfTI-1 magic {magic:?}")));
        }
        let mut dim = [0i16; 8];
        for (i, d) in dim.iter_mut().enumerate() {
            *d = r.i16(40 + 2 * i);
        }
        let mut pixdim = [0f32; 8];
        for (i, p) in pixdim.iter_mut().enumerate() {
            *p = r.f32(76 + 4 * i);
        }
        let descrip_raw = &buf[148..228];
        let end = descrip_raw.iter().position(|&b| b == 0).unwrap_or(80);
        let descrip = String::from_utf8_lossy(&descrip_raw[..end]).into_owned();
        let mut srow = [[0f32; 4]; 3];
        for (row, s) in srow.iter_mut().enumerate() {
            for (c, v) in s.iter_mut().enumerate() {
                *v = r.f32(280 + 16 * row + 4 * c);
            }
        }
        let header = NiftiHeader {
            dim,
            datatype: r.i16(70),
            bitpix: r.i16(72),
            pixdim,
            vox_offset: r.f32(108),
            scl_slope: r.f32(112),
            scl_inter: r.f32(116),
            descrip,
            qform_code: r.i16(252),
            sform_code: r.i16(254),
            quatern: [r.f32(256), r.f32(260), r.f32(264)],
            qoffset: [r.f32(268), r.f32(272), r.f32(276)],
            srow,
            magic,
        };
        Ok((header, r.big_endian))
    }

    /// Little-endian 348-byte encoding.
    pub fn to_bytes(&self) -> [u8; HEADER_SIZE] {
        let mut b = [0u8; HEADER_SIZE];
        let mut put = |off: usize, bytes: &[u8]| b[off..off + bytes.len()].copy_from_slice(bytes);
        put(0, &(HEADER_SIZE as i32).to_le_bytes());
        put(38, b"r");
        for (i, d) in self.dim.iter().enumerate() {
            put(40 + 2 * i, &d.to_le_bytes());
        }
        put(70, &self.datatype.to_le_bytes());
        put(72, &self.bitpix.to_le_bytes());
        for (i, p) in self.pixdim.iter().enumerate() {
            put(76 + 4 * i, &p.to_le_bytes());
        }
        put(108, &self.vox_offset.to_le_bytes());
        put(112, &self.scl_slope.to_le_bytes());
        put(116, &self.scl_inter.to_le_bytes());
        // xyzt_units: mm
        put(123, &[2u8]);
        let d = self.descrip.as_bytes();
        put(148, &d[..d.len().min(79)]);
        put(252, &self.qform_code.to_le_bytes());
        put(254, &self.sform_code.to_le_bytes());
        for i in 0..3 {
            put(256 + 4 * i, &self.quatern[i].to_le_bytes());
            put(268 + 4 * i, &self.qoffset[i].to_le_bytes());
        }
        for (row, s) in self.srow.iter().enumerate() {
            for (c, v) in s.iter().enumerate() {
                put(280 + 16 * row + 4 * c, &v.to_le_bytes());
            }
        }
        put(344, &self.magic);
        b
    }

    pub fn shape(&self) -> Result<[usize; 3]> {
        let nd = self.dim[0];
        if !(3..=7).contains(&nd) || self.dim[4..=nd as usize].iter().any(|&d| d != 1) {
            let effective = if (1..=7).contains(&nd) {
                (1..=nd as usize).filter(|&a| a <= 3 || self.dim[a] != 1).count()
            } else {
                nd.max(0) as usize
            };
            return Err(Error::Dimensionality(effective));
        }
        let mut shape = [0usize; 3];
        for a in 0..3 {
            let n = self.dim[a + 1];
            if n <= 0 {
                return Err(Error::Format(format!("dim[{}] = {n} is not positive", a + 1)));
            }
            shape[a] = n as usize;
        }
        Ok(shape)
    }

    /// sform when `sform_code > 0`, else qform when `qform_code > 0`, else
    /// the pixdim scaling.
    pub fn affine(&self) -> Result<Affine> {
        if self.sform_code > 0 {
            let mut m = Matrix4::identity();
            for (row, s) in self.srow.iter().enumerate() {
                for (c, v) in s.iter().enumerate() {
                    m[(row, c)] = *v as f64;
                }
            }
            return Affine::new(m);
        }
        let spacing = [
            self.pixdim[1] as f64,
            self.pixdim[2] as f64,
            self.pixdim[3] as f64,
        ];
        if self.qform_code > 0 {
            let [b, c, d] = self.quatern.map(|v| v as f64);
            let a2 = 1.0 - (b * b + c * c + d * d);
            let (a, b, c, d) = if a2 < 1e-7 {
                let n = (b * b + c * c + d * d).sqrt();
                (0.0, b / n, c / n, d / n)
            } else {
                (a2.sqrt(), b, c, d)
            };
            let rot = Matrix3::new(
                a * a + b * b - c * c - d * d,
                2.0 * (b * c - a * d),
                2.0 * (b * d + a * c),
                2.0 * (b * c + a * d),
                a * a + c * c - b * b - d * d,
                2.0 * (c * d - a * b),
                2.0 * (b * d - a * c),
                2.0 * (c * d + a * b),
                a * a + d * d - c * c - b * b,
            );
            let qfac = if self.pixdim[0] < 0.0 { -1.0 } else { 1.0 };
            let scale = Matrix3::from_diagonal(&Vec3::new(spacing[0], spacing[1], qfac * spacing[2]));
            let offset = Vec3::new(
                self.qoffset[0] as f64,
                self.qoffset[1] as f64,
                self.qoffset[2] as f64,
            );
            return Affine::from_parts(rot * scale, offset);
        }
        let spacing = spacing.map(|s| if s > 0.0 { s } else { 1.0 });
        Affine::from_spacing(spacing, Vec3::zeros())
    }
}

/// Reads a NIfTI-1 volume, transparently gunzipping when needed.
pub fn load_nifti(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    let path = path.as_ref();
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("{}: corrupt gzip stream: {e}", path.display())))?;
        raw = out;
    }
    decode(&raw)
}

/// Decodes an uncompressed in-memory NIfTI-1 file.
pub fn decode(raw: &[u8]) -> Result<VoxelGrid> {
    let (h, big_endian) = NiftiHeader::parse(raw)?;
    let shape = h.shape()?;
    let width = match h.datatype {
        DT_UINT8 => 1,
        DT_INT16 => 2,
        DT_FLOAT32 => 4,
        other => {
            return Err(Error::Unsupported(format!(
                "NIfTI datatype {other} (only uint8, int16, float32)"
            )))
        }
    };
    let n: usize = shape.iter().product();
    let offset = if h.vox_offset.is_finite() && h.vox_offset >= HEADER_SIZE as f32 {
        h.vox_offset as usize
    } else {
        VOX_OFFSET
    };
    let end = offset
        .checked_add(n.checked_mul(width).ok_or_else(|| Error::Format("volume too large".into()))?)
        .ok_or_else(|| Error::Format("volume too large".into()))?;
    if raw.len() < end {
        return Err(Error::Format(format!(
            "truncated voxel data: need {end} bytes, file has {}",
            raw.len()
        )));
    }
    let bytes = &raw[offset..end];
    let mut data: Vec<f32> = match h.datatype {
        DT_UINT8 => bytes.iter().map(|&b| b as f32).collect(),
        DT_INT16 => bytes
            .chunks_exact(2)
            .map(|c| {
                let b = [c[0], c[1]];
                (if big_endian { i16::from_be_bytes(b) } else { i16::from_le_bytes(b) }) as f32
            })
            .collect(),
        _ => bytes
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if big_endian {
                    f32::from_be_bytes(b)
                } else {
                    f32::from_le_bytes(b)
                }
            })
            .collect(),
    };
    let scaled = h.scl_slope != 0.0 && h.scl_slope.is_finite() && h.scl_inter.is_finite();
    if scaled {
        let (m, c) = (h.scl_slope, h.scl_inter);
        data.iter_mut().for_each(|v| *v = *v * m + c);
    }
    let affine = h.affine()?;

    let kind = infer_kind(&h, &data);
    let kind = match kind {
        GridKind::Sdf { clip_mm } => {
            // Clip on load: predicted SDFs may overshoot the stored clip.
            let c = clip_mm as f32;
            data.iter_mut().for_each(|v| *v = v.clamp(-c, c));
            kind
        }
        other => other,
    };
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("voxel data contains non-finite values".into()));
    }
    VoxelGrid::new(shape, data, affine, kind)
}

fn infer_kind(h: &NiftiHeader, data: &[f32]) -> GridKind {
    if let Some(clip) = h.descrip.strip_prefix(SDF_DESCRIP_PREFIX) {
        if let Ok(c) = clip.trim().parse::<f64>() {
            if c > 0.0 && c.is_finite() {
                return GridKind::Sdf { clip_mm: c };
            }
        }
    }
    let integral = data.iter().all(|v| *v >= 0.0 && v.fract() == 0.0);
    let binary = data.iter().all(|v| *v == 0.0 || *v == 1.0);
    match h.descrip.as_str() {
        "mask" if binary => GridKind::Mask,
        "label" | "mask" if integral => GridKind::Label,
        _ if h.datatype != DT_FLOAT32 && integral => GridKind::Label,
        _ => GridKind::Intensity,
    }
}

/// Builds the header and little-endian payload for `grid`.
pub fn encode(grid: &VoxelGrid) -> Result<Vec<u8>> {
    let shape = grid.shape();
    let mut h = NiftiHeader::default();
    for a in 0..3 {
        h.dim[a + 1] = i16::try_from(shape[a]).map_err(|_| {
            Error::Unsupported(format!("axis length {} exceeds NIfTI-1 limit", shape[a]))
        })?;
    }
    let spacing = grid.spacing();
    for a in 0..3 {
        h.pixdim[a + 1] = spacing[a] as f32;
    }
    h.sform_code = 1;
    let m = grid.affine().matrix();
    for row in 0..3 {
        for c in 0..4 {
            h.srow[row][c] = m[(row, c)] as f32;
        }
    }
    let max = grid.data().iter().fold(0.0f32, |a, &b| a.max(b));
    let (datatype, descrip) = match grid.kind() {
        GridKind::Intensity => (DT_FLOAT32, String::new()),
        GridKind::Sdf { clip_mm } => (DT_FLOAT32, format!("{SDF_DESCRIP_PREFIX}{clip_mm}")),
        GridKind::Mask => (DT_UINT8, "mask".to_string()),
        GridKind::Label if max <= u8::MAX as f32 => (DT_UINT8, "label".to_string()),
        GridKind::Label if max <= i16::MAX as f32 => (DT_INT16, "label".to_string()),
        GridKind::Label => {
            return Err(Error::Unsupported(format!(
                "label {max} does not fit in int16"
            )))
        }
    };
    h.datatype = datatype;
    h.bitpix = match datatype {
        DT_UINT8 => 8,
        DT_INT16 => 16,
        _ => 32,
    };
    h.descrip = descrip;

    let n = grid.len();
    let mut out = Vec::with_capacity(VOX_OFFSET + n * 4);
    out.extend_from_slice(&h.to_bytes());
    out.extend_from_slice(&[0u8; VOX_OFFSET - HEADER_SIZE]);
    match datatype {
        DT_UINT8 => out.extend(grid.data().iter().map(|&v| v as u8)),
        DT_INT16 => {
            for &v in grid.data() {
                out.extend_from_slice(&(v as i16).to_le_bytes());
            }
        }
        _ => {
            for &v in grid.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Writes `grid`; gzip-compressed when the path ends in `.gz`.
pub fn save_nifti(grid: &VoxelGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(grid)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let gz = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gz"));
    let res = if gz {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::default());
        enc.write_all(&bytes)
            .and_then(|_| enc.finish())
            .and_then(|mut w| w.flush())
    } else {
        let mut w = BufWriter::new(file);
        w.write_all(&bytes).and_then(|_| w.flush())
    };
    res.map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header_bytes(h: &NiftiHeader, payload: &[u8]) -> Vec<u8> {
        let mut v = h.to_bytes().to_vec();
        v.extend_from_slice(&[0u8; 4]);
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn qform_identity_when_sform_absent() {
        let mut h = NiftiHeader::default();
        h.dim = [3, 2, 2, 2, 1, 1, 1, 1];
        h.qform_code = 1;
        h.sform_code = 0;
        let raw = header_bytes(&h, &[0u8; 32]);
        let g = decode(&raw).unwrap();
        assert_eq!(g.affine(), &Affine::identity());
    }

    #[test]
    fn qform_rotation_and_qfac() {
        // 90 degrees about z: (b, c, d) = (0, 0, sin 45)
        let mut h = NiftiHeader::default();
        h.dim = [3, 2, 2, 2, 1, 1, 1, 1];
        h.qform_code = 1;
        h.quatern = [0.0, 0.0, std::f32::consts::FRAC_1_SQRT_2];
        h.pixdim = [-1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0];
        h.qoffset = [1.0, 2.0, 3.0];
        let a = h.affine().unwrap();
        let m = a.matrix();
        assert!((m[(0, 1)] + 3.0).abs() < 1e-6);
        assert!((m[(1, 0)] - 2.0).abs() < 1e-6);
        assert!((m[(2, 2)] + 4.0).abs() < 1e-6);
        assert_eq!(a.translation(), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn int16_scaling_applied() {
        let mut h = NiftiHeader::default();
        h.dim = [3, 1, 1, 1, 1, 1, 1, 1];
        h.datatype = DT_INT16;
        h.bitpix = 16;
        h.scl_slope = 2.0;
        h.scl_inter = 1.0;
        let raw = header_bytes(&h, &3i16.to_le_bytes());
        let g = decode(&raw).unwrap();
        assert_eq!(g.data(), &[7.0]);
    }

    #[test]
    fn big_endian_file_is_read() {
        let mut h = NiftiHeader::default();
        h.dim = [3, 2, 1, 1, 1, 1, 1, 1];
        let le = h.to_bytes();
        // swap every multi-byte field we honour by re-encoding big-endian
        let mut be = le;
        let swap = |b: &mut [u8; HEADER_SIZE], off: usize, n: usize| b[off..off + n].reverse();
        swap(&mut be, 0, 4);
        for i in 0..8 {
            swap(&mut be, 40 + 2 * i, 2);
            swap(&mut be, 76 + 4 * i, 4);
        }
        for off in [70, 72, 252, 254] {
            swap(&mut be, off, 2);
        }
        for off in (108..124).step_by(4).chain((256..328).step_by(4)) {
            swap(&mut be, off, 4);
        }
        let mut raw = be.to_vec();
        raw.extend_from_slice(&[0u8; 4]);
        raw.extend_from_slice(&1.5f32.to_be_bytes());
        raw.extend_from_slice(&(-2.25f32).to_be_bytes());
        let g = decode(&raw).unwrap();
        assert_eq!(g.data(), &[1.5, -2.25]);
        assert_eq!(g.shape(), [2, 1, 1]);
    }

    #[test]
    fn error_paths() {
        let mut h = NiftiHeader::default();
        h.dim = [3, 1, 1, 1, 1, 1, 1, 1];
        let mut raw = header_bytes(&h, &[0u8; 4]);
        raw[344] = b'x';
        assert!(matches!(decode(&raw), Err(Error::Format(_))));

        h.datatype = 64;
        assert!(matches!(decode(&header_bytes(&h, &[0u8; 8])), Err(Error::Unsupported(_))));

        let mut h = NiftiHeader::default();
        h.dim = [4, 2, 2, 2, 3, 1, 1, 1];
        assert!(matches!(
            decode(&header_bytes(&h, &[0u8; 96])),
            Err(Error::Dimensionality(4))
        ));
        h.dim = [2, 2, 2, 1, 1, 1, 1, 1];
        assert!(matches!(
            decode(&header_bytes(&h, &[0u8; 16])),
            Err(Error::Dimensionality(2))
        ));

        assert!(matches!(decode(&[0u8; 10]), Err(Error::Format(_))));
    }

    #[test]
    fn label_storage_width_follows_range() {
        let a = Affine::identity();
        let g = VoxelGrid::new([2, 1, 1], vec![0.0, 255.0], a.clone(), GridKind::Label).unwrap();
        let raw = encode(&g).unwrap();
        assert_eq!(NiftiHeader::parse(&raw).unwrap().0.datatype, DT_UINT8);
        assert_eq!(decode(&raw).unwrap(), g);

        let g = VoxelGrid::new([2, 1, 1], vec![0.0, 300.0], a, GridKind::Label).unwrap();
        let raw = encode(&g).unwrap();
        assert_eq!(NiftiHeader::parse(&raw).unwrap().0.datatype, DT_INT16);
        assert_eq!(decode(&raw).unwrap(), g);
    }
}
