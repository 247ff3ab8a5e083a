//! Minimal NIfTI-1 reader/writer for axis-aligned 3D volumes.
//!
//! Supports `.nii` and `.nii.gz` (gzip auto-detected on read). Scalar
//! volumes are written as float64 so synthesized values round-trip
//! bit-exactly; label maps are written as uint8 (or uint16 when ids exceed
//! 255). Read supports the common integer and float datatypes with
//! slope/intercept scaling. Oblique orientations (rotation matrices that
//! are not axis-aligned permutations) are rejected.

use crate::error::{Error, Result};
use crate::volume::{AxisDir, LabelMap, Orientation, Volume3D};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;
const MAGIC: &[u8; 4] = b"n+1\0";

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;
const DT_INT8: i16 = 256;
const DT_UINT16: i16 = 512;
const DT_UINT32: i16 = 768;

fn nifti_err(msg: impl Into<String>) -> Error {
    Error::Nifti(msg.into())
}

fn read_i16(b: &[u8], off: usize) -> i16 {
    i16::from_le_bytes([b[off], b[off + 1]])
}

fn read_f32(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

fn write_i16(b: &mut [u8], off: usize, v: i16) {
    b[off..off + 2].copy_from_slice(&v.to_le_bytes());
}

fn write_i32(b: &mut [u8], off: usize, v: i32) {
    b[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

fn write_f32(b: &mut [u8], off: usize, v: f32) {
    b[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

/// Direction of one voxel axis expressed in the NIfTI RAS world frame.
fn dir_to_ras(dir: AxisDir) -> (usize, f64) {
    match dir {
        AxisDir::Right => (0, 1.0),
        AxisDir::Left => (0, -1.0),
        AxisDir::Anterior => (1, 1.0),
        AxisDir::Posterior => (1, -1.0),
        AxisDir::Inferior => (2, -1.0),
        AxisDir::Superior => (2, 1.0),
    }
}

fn ras_to_dir(row: usize, sign: f64) -> AxisDir {
    match (row, sign > 0.0) {
        (0, true) => AxisDir::Right,
        (0, false) => AxisDir::Left,
        (1, true) => AxisDir::Anterior,
        (1, false) => AxisDir::Posterior,
        (2, true) => AxisDir::Superior,
        _ => AxisDir::Inferior,
    }
}

struct Geometry {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    orientation: Orientation,
}

/// 3x4 voxel→RAS affine for our LPS-based geometry.
fn srow_matrix(geo: &Geometry) -> [[f64; 4]; 3] {
    let mut m = [[0.0f64; 4]; 3];
    for (j, d) in geo.orientation.dirs().iter().enumerate() {
        let (row, sign) = dir_to_ras(*d);
        m[row][j] = sign * geo.spacing[j];
    }
    // Our origin stores (L, P, S) coordinates of voxel (0,0,0).
    m[0][3] = -geo.origin[0];
    m[1][3] = -geo.origin[1];
    m[2][3] = geo.origin[2];
    m
}

/// Recover orientation/spacing/origin from an axis-aligned voxel→RAS affine.
fn geometry_from_affine(m: &[[f64; 4]; 3], dims: [usize; 3]) -> Result<Geometry> {
    let mut dirs = [AxisDir::Left; 3];
    let mut spacing = [0.0f64; 3];
    for j in 0..3 {
        let col = [m[0][j], m[1][j], m[2][j]];
        let (row, &dominant) = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        if dominant.abs() <= 0.0 {
            return Err(nifti_err("degenerate affine column"));
        }
        for (r, &v) in col.iter().enumerate() {
            if r != row && v.abs() > 1e-3 * dominant.abs() {
                return Err(nifti_err(
                    "oblique orientation is not supported; reorient the volume first",
                ));
            }
        }
        dirs[j] = ras_to_dir(row, dominant);
        spacing[j] = dominant.abs();
    }
    let orientation = Orientation::new(dirs)
        .map_err(|_| nifti_err("affine does not describe a valid axis permutation"))?;
    let origin = [-m[0][3], -m[1][3], m[2][3]];
    Ok(Geometry {
        dims,
        spacing,
        origin,
        orientation,
    })
}

fn quaternion_affine(header: &[u8], pixdim: [f64; 3]) -> [[f64; 4]; 3] {
    let b = read_f32(header, 256) as f64;
    let c = read_f32(header, 260) as f64;
    let d = read_f32(header, 264) as f64;
    let a = (1.0 - b * b - c * c - d * d).max(0.0).sqrt();
    let qfac = {
        let q = read_f32(header, 76) as f64;
        if q < 0.0 {
            -1.0
        } else {
            1.0
        }
    };
    let r = [
        [
            a * a + b * b - c * c - d * d,
            2.0 * (b * c - a * d),
            2.0 * (b * d + a * c),
        ],
        [
            2.0 * (b * c + a * d),
            a * a + c * c - b * b - d * d,
            2.0 * (c * d - a * b),
        ],
        [
            2.0 * (b * d - a * c),
            2.0 * (c * d + a * b),
            a * a + d * d - b * b - c * c,
        ],
    ];
    
    let t = [
        read_f32(header, 268) as f64,
        read_f32(header, 272) as f64,
        read_f32(header, 276) as f64,
    ];
    let mut m = [[0.0f64; 4]; 3];
    for row in 0..3 {
        m[row][0] = r[row][0] * pixdim[0];
        m[row][1] = r[row][1] * pixdim[1];
        m[row][2] = r[row][2] * pixdim[2] * qfac;
        m[row][3] = t[row];
    }
    m
}

struct RawNifti {
    geometry: Geometry,
    datatype: i16,
    scl_slope: f64,
    scl_inter: f64,
    data: Vec<u8>,
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

fn read_raw(path: &Path) -> Result<RawNifti> {
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    let bytes = if is_gzip(&raw) {
        let mut out = Vec::new();
        MultiGzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        out
    } else {
        raw
    };
    if bytes.len() < VOX_OFFSET {
        return Err(nifti_err(format!(
            "file too small ({} bytes) for a NIfTI-1 header",
            bytes.len()
        )));
    }
    let header = &bytes[..HEADER_SIZE];
    if &header[344..348] != MAGIC {
        return Err(nifti_err("bad magic; not a single-file NIfTI-1 volume"));
    }
    let ndim = read_i16(header, 40);
    if !(1..=7).contains(&ndim) {
        return Err(nifti_err(format!("unsupported ndim {ndim}")));
    }
    let mut dims = [1usize; 3];
    for (a, d) in dims.iter_mut().enumerate().take((ndim as usize).min(3)) {
        let v = read_i16(header, 42 + 2 * a);
        if v < 1 {
            return Err(nifti_err(format!("non-positive dim[{}] = {v}", a + 1)));
        }
        *d = v as usize;
    }
    // Trailing singleton dims (time, channels) are tolerated; anything else
    // is a genuine 4D+ volume we do not model.
    for a in 3..ndim as usize {
        let v = read_i16(header, 42 + 2 * a);
        if v > 1 {
            return Err(nifti_err(format!("volume has non-singleton dim[{}]", a + 1)));
        }
    }
    let datatype = read_i16(header, 70);
    let pixdim = [
        read_f32(header, 80) as f64,
        read_f32(header, 84) as f64,
        read_f32(header, 88) as f64,
    ];
    let vox_offset = read_f32(header, 108) as usize;
    let scl_slope = read_f32(header, 112) as f64;
    let scl_inter = read_f32(header, 116) as f64;
    let qform_code = read_i16(header, 252);
    let sform_code = read_i16(header, 254);

    let geometry = if sform_code > 0 {
        let mut m = [[0.0f64; 4]; 3];
        for row in 0..3 {
            for col in 0..4 {
                m[row][col] = read_f32(header, 280 + 16 * row + 4 * col) as f64;
            }
        }
        geometry_from_affine(&m, dims)?
    } else if qform_code > 0 {
        let m = quaternion_affine(header, pixdim);
        geometry_from_affine(&m, dims)?
    } else {
        // Headerless orientation: assume the canonical frame at pixdim spacing.
        let spacing = pixdim.map(|p| if p > 0.0 { p } else { 1.0 });
        Geometry {
            dims,
            spacing,
            origin: [0.0; 3],
            orientation: Orientation::canonical(),
        }
    };

    if vox_offset < HEADER_SIZE || vox_offset > bytes.len() {
        return Err(nifti_err(format!("bad vox_offset {vox_offset}")));
    }
    Ok(RawNifti {
        geometry,
        datatype,
        scl_slope,
        scl_inter,
        data: bytes[vox_offset..].to_vec(),
    })
}

fn decode_scalars(raw: &RawNifti) -> Result<Vec<f64>> {
    let n = raw.geometry.dims.iter().product::<usize>();
    let slope = if raw.scl_slope == 0.0 { 1.0 } else { raw.scl_slope };
    let inter = raw.scl_inter;
    let bytes = &raw.data;
    let need = |per: usize| -> Result<()> {
        if bytes.len() < n * per {
            Err(nifti_err(format!(
                "data section too small: {} bytes for {} voxels",
                bytes.len(),
                n
            )))
        } else {
            Ok(())
        }
    };
    let out: Vec<f64> = match raw.datatype {
        DT_UINT8 => {
            need(1)?;
            bytes[..n].iter().map(|&v| v as f64).collect()
        }
        DT_INT8 => {
            need(1)?;
            bytes[..n].iter().map(|&v| v as i8 as f64).collect()
        }
        DT_INT16 => {
            need(2)?;
            (0..n)
                .map(|i| i16::from_le_bytes([bytes[2 * i], bytes[2 * i + 1]]) as f64)
                .collect()
        }
        DT_UINT16 => {
            need(2)?;
            (0..n)
                .map(|i| u16::from_le_bytes([bytes[2 * i], bytes[2 * i + 1]]) as f64)
                .collect()
        }
        DT_INT32 => {
            need(4)?;
            (0..n)
                .map(|i| {
                    i32::from_le_bytes([
                        bytes[4 * i],
                        bytes[4 * i + 1],
                        bytes[4 * i + 2],
                        bytes[4 * i + 3],
                    ]) as f64
                })
                .collect()
        }
        DT_UINT32 => {
            need(4)?;
            (0..n)
                .map(|i| {
                    u32::from_le_bytes([
                        bytes[4 * i],
                        bytes[4 * i + 1],
                        bytes[4 * i + 2],
                        bytes[4 * i + 3],
                    ]) as f64
                })
                .collect()
        }
        DT_FLOAT32 => {
            need(4)?;
            (0..n)
                .map(|i| {
                    f32::from_le_bytes([
                        bytes[4 * i],
                        bytes[4 * i + 1],
                        bytes[4 * i + 2],
                        bytes[4 * i + 3],
                    ]) as f64
                })
                .collect()
        }
        DT_FLOAT64 => {
            need(8)?;
            (0..n)
                .map(|i| {
                    let mut b = [0u8; 8];
                    b.copy_from_slice(&bytes[8 * i..8 * i + 8]);
                    f64::from_le_bytes(b)
                })
                .collect()
        }
        other => return Err(nifti_err(format!("unsupported datatype {other}"))),
    };
    if slope == 1.0 && inter == 0.0 {
        Ok(out)
    } else {
        Ok(out.iter().map(|v| v * slope + inter).collect())
    }
}

/// Read a scalar volume (HU or unitless).
pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume3D> {
    let raw = read_raw(path.as_ref())?;
    let voxels = decode_scalars(&raw)?;
    Volume3D::new(
        raw.geometry.dims,
        raw.geometry.spacing,
        raw.geometry.origin,
        raw.geometry.orientation,
        voxels,
    )
}

/// Read an integer label map. Scaling must be trivial and the datatype
/// integral.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    let raw = read_raw(path.as_ref())?;
    match raw.datatype {
        DT_UINT8 | DT_INT8 | DT_INT16 | DT_UINT16 | DT_INT32 | DT_UINT32 => {}
        other => {
            return Err(nifti_err(format!(
                "label map requires an integer datatype, got {other}"
            )))
        }
    }
    if !(raw.scl_slope == 0.0 || raw.scl_slope == 1.0) || raw.scl_inter != 0.0 {
        return Err(nifti_err("label map must not carry intensity scaling"));
    }
    let values = decode_scalars(&raw)?;
    let mut voxels = Vec::with_capacity(values.len());
    for v in values {
        if v < 0.0 || v > u16::MAX as f64 || v.fract() != 0.0 {
            return Err(nifti_err(format!("label value {v} is not a valid class id")));
        }
        voxels.push(v as u16);
    }
    LabelMap::new(
        raw.geometry.dims,
        raw.geometry.spacing,
        raw.geometry.origin,
        raw.geometry.orientation,
        voxels,
    )
}

fn build_header(geo: &Geometry, datatype: i16, bitpix: i16) -> Vec<u8> {
    let mut h = vec![0u8; VOX_OFFSET];
    write_i32(&mut h, 0, HEADER_SIZE as i32);
    h[38] = b'r';
    write_i16(&mut h, 40, 3);
    for a in 0..3 {
        write_i16(&mut h, 42 + 2 * a, geo.dims[a] as i16);
    }
    for a in 3..7 {
        write_i16(&mut h, 42 + 2 * a, 1);
    }
    write_i16(&mut h, 70, datatype);
    write_i16(&mut h, 72, bitpix);
    write_f32(&mut h, 76, 1.0); // qfac
    for a in 0..3 {
        write_f32(&mut h, 80 + 4 * a, geo.spacing[a] as f32);
    }
    write_f32(&mut h, 108, VOX_OFFSET as f32);
    write_f32(&mut h, 112, 1.0); // scl_slope
    write_f32(&mut h, 116, 0.0); // scl_inter
    h[123] = 2; // spatial units: mm
    write_i16(&mut h, 252, 0); // qform unused
    write_i16(&mut h, 254, 1); // sform: scanner-anatomical
    let m = srow_matrix(geo);
    for row in 0..3 {
        for col in 0..4 {
            write_f32(&mut h, 280 + 16 * row + 4 * col, m[row][col] as f32);
        }
    }
    h[344..348].copy_from_slice(MAGIC);
    // Bytes 348..352 stay zero: no header extensions.
    h
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let gz = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("gz"))
        .unwrap_or(false);
    let mut file = File::create(path)?;
    if gz {
        let mut enc = GzEncoder::new(&mut file, Compression::new(6));
        enc.write_all(bytes)?;
        enc.finish()?;
    } else {
        file.write_all(bytes)?;
    }
    Ok(())
}

/// Write a scalar volume as float64 (`.nii` or `.nii.gz` by extension).
pub fn write_volume(path: impl AsRef<Path>, vol: &Volume3D) -> Result<()> {
    let geo = Geometry {
        dims: vol.dims(),
        spacing: vol.spacing(),
        origin: vol.origin(),
        orientation: vol.orientation(),
    };
    let mut bytes = build_header(&geo, DT_FLOAT64, 64);
    bytes.reserve(vol.voxels().len() * 8);
    for &v in vol.voxels() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_bytes(path.as_ref(), &bytes)
}

/// Write a label map as uint8, or uint16 when any id exceeds 255.
pub fn write_labels(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    let geo = Geometry {
        dims: labels.dims(),
        spacing: labels.spacing(),
        origin: labels.origin(),
        orientation: labels.orientation(),
    };
    let wide = labels.voxels().iter().any(|&v| v > u8::MAX as u16);
    let mut bytes = if wide {
        let mut b = build_header(&geo, DT_UINT16, 16);
        b.reserve(labels.voxels().len() * 2);
        for &v in labels.voxels() {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    } else {
        let mut b = build_header(&geo, DT_UINT8, 8);
        b.extend(labels.voxels().iter().map(|&v| v as u8));
        b
    };
    bytes.shrink_to_fit();
    write_bytes(path.as_ref(), &bytes)
}
