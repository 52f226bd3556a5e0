//! Single-file NIfTI-1 I/O (little-endian `n+1` files, plain or gzip).
//!
//! Supported sample types are uint8, int16 and float32; volumes are 3D, or
//! 4D for class-probability stacks (class as the slowest axis). The affine
//! is taken from the sform when present, else the qform quaternion, else a
//! diagonal built from pixdim. Payloads are Fortran-ordered, matching
//! `VoxelGeometry::index`.

use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Result, VoxError};
use crate::fuse::ProbVolume;
use crate::volgrid::{LabelSchema, LabelVolume, ScalarVolume, VoxelGeometry};

const HEADER_BYTES: usize = 348;
/// Payload offset for single-file output: header + 4-byte extension flag.
const VOX_OFFSET: usize = 352;
const MAGIC: &[u8; 4] = b"n+1\0";

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_FLOAT32: i16 = 16;

struct Header {
    ndim: usize,
    dims: [usize; 4],
    datatype: i16,
    pixdim: [f64; 3],
    qfac: f64,
    vox_offset: usize,
    scl_slope: f64,
    scl_inter: f64,
    qform_code: i16,
    sform_code: i16,
    quatern: [f64; 3],
    qoffset: [f64; 3],
    srow: [[f64; 4]; 3],
}

fn rd_i16(b: &[u8], at: usize) -> i16 {
    i16::from_le_bytes([b[at], b[at + 1]])
}

fn rd_i32(b: &[u8], at: usize) -> i32 {
    i32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn rd_f32(b: &[u8], at: usize) -> f32 {
    f32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

impl Header {
    fn parse(b: &[u8]) -> Result<Header> {
        if b.len() < HEADER_BYTES {
            return Err(VoxError::Corrupt(format!(
                "truncated header: {} bytes, need {HEADER_BYTES}",
                b.len()
            )));
        }
        let sizeof_hdr = rd_i32(b, 0);
        if sizeof_hdr != HEADER_BYTES as i32 {
            if sizeof_hdr.swap_bytes() == HEADER_BYTES as i32 {
                return Err(VoxError::Format(
                    "big-endian NIfTI files are not supported".into(),
                ));
            }
            return Err(VoxError::Corrupt(format!("sizeof_hdr is {sizeof_hdr}, expected 348")));
        }
        if &b[344..348] != MAGIC {
            return Err(VoxError::Format(format!(
                "magic is {:?}, expected \"n+1\\0\" (single-file NIfTI-1)",
                &b[344..348]
            )));
        }
        let ndim_raw = rd_i16(b, 40);
        if !(1..=7).contains(&ndim_raw) {
            return Err(VoxError::Format(format!(
                "dim[0] is {ndim_raw}; the file is corrupt or big-endian"
            )));
        }
        let ndim = ndim_raw as usize;
        if ndim != 3 && ndim != 4 {
            return Err(VoxError::Format(format!("{ndim}D image, expected 3D or 4D")));
        }
        let mut dims = [1usize; 4];
        for (i, d) in dims.iter_mut().enumerate().take(ndim) {
            let v = rd_i16(b, 42 + 2 * i);
            if v < 1 {
                return Err(VoxError::Corrupt(format!("dim[{}] is {v}", i + 1)));
            }
            *d = v as usize;
        }
        let datatype = rd_i16(b, 70);
        if ![DT_UINT8, DT_INT16, DT_FLOAT32].contains(&datatype) {
            return Err(VoxError::Format(format!(
                "unsupported datatype code {datatype} (supported: 2, 4, 16)"
            )));
        }
        let qfac = if rd_f32(b, 76) as f64 == -1.0 { -1.0 } else { 1.0 };
        let mut pixdim = [0.0; 3];
        for (i, p) in pixdim.iter_mut().enumerate() {
            *p = rd_f32(b, 76 + 4 * (i + 1)) as f64;
        }
        let vox_offset_f = rd_f32(b, 108);
        if !vox_offset_f.is_finite() || vox_offset_f < HEADER_BYTES as f32 {
            return Err(VoxError::Corrupt(format!("vox_offset is {vox_offset_f}")));
        }
        let scl_slope = rd_f32(b, 112) as f64;
        let scl_inter = rd_f32(b, 116) as f64;
        if !scl_slope.is_finite() || !scl_inter.is_finite() {
            return Err(VoxError::Corrupt("non-finite scl_slope/scl_inter".into()));
        }
        let mut srow = [[0.0; 4]; 3];
        for (r, row) in srow.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = rd_f32(b, 280 + 16 * r + 4 * c) as f64;
            }
        }
        Ok(Header {
            ndim,
            dims,
            datatype,
            pixdim,
            qfac,
            vox_offset: vox_offset_f as usize,
            scl_slope: if scl_slope == 0.0 { 1.0 } else { scl_slope },
            scl_inter,
            qform_code: rd_i16(b, 252),
            sform_code: rd_i16(b, 254),
            quatern: [rd_f32(b, 256) as f64, rd_f32(b, 260) as f64, rd_f32(b, 264) as f64],
            qoffset: [rd_f32(b, 268) as f64, rd_f32(b, 272) as f64, rd_f32(b, 276) as f64],
            srow,
        })
    }

    fn affine(&self) -> [[f64; 4]; 4] {
        let mut a = [[0.0; 4]; 4];
        a[3][3] = 1.0;
        if self.sform_code > 0 {
            a[..3].copy_from_slice(&self.srow);
        } else if self.qform_code > 0 {
            let [bq, cq, dq] = self.quatern;
            let aq = (1.0 - bq * bq - cq * cq - dq * dq).max(0.0).sqrt();
            let rot = [
                [
                    aq * aq + bq * bq - cq * cq - dq * dq,
                    2.0 * (bq * cq - aq * dq),
                    2.0 * (bq * dq + aq * cq),
                ],
                [
                    2.0 * (bq * cq + aq * dq),
                    aq * aq + cq * cq - bq * bq - dq * dq,
                    2.0 * (cq * dq - aq * bq),
                ],
                [
                    2.0 * (bq * dq - aq * cq),
                    2.0 * (cq * dq + aq * bq),
                    aq * aq + dq * dq - bq * bq - cq * cq,
                ],
            ];
            for r in 0..3 {
                for c in 0..3 {
                    let scale = self.pixdim[c] * if c == 2 { self.qfac } else { 1.0 };
                    a[r][c] = rot[r][c] * scale;
                }
                a[r][3] = self.qoffset[r];
            }
        } else {
            for (i, p) in self.pixdim.iter().enumerate() {
                a[i][i] = *p;
            }
        }
        a
    }

    fn geometry(&self) -> Result<VoxelGeometry> {
        let affine = self.affine();
        let mut spacing = [0.0; 3];
        for (c, s) in spacing.iter_mut().enumerate() {
            *s = (0..3).map(|r| affine[r][c] * affine[r][c]).sum::<f64>().sqrt();
        }
        let geom = VoxelGeometry {
            dims: [self.dims[0], self.dims[1], self.dims[2]],
            spacing,
            affine,
        };
        geom.validate()?;
        Ok(geom)
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path)?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| VoxError::Corrupt(format!("gzip stream: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn payload<'a>(bytes: &'a [u8], h: &Header) -> Result<&'a [u8]> {
    let voxels: usize = h.dims.iter().product();
    let sample = match h.datatype {
        DT_UINT8 => 1,
        DT_INT16 => 2,
        _ => 4,
    };
    let need = voxels * sample;
    let end = h.vox_offset.checked_add(need).ok_or_else(|| {
        VoxError::Corrupt("payload extent overflows".into())
    })?;
    if bytes.len() < end {
        return Err(VoxError::Corrupt(format!(
            "truncated data: need {end} bytes, file has {}",
            bytes.len()
        )));
    }
    Ok(&bytes[h.vox_offset..end])
}

fn decode_samples(h: &Header, raw: &[u8]) -> Vec<f64> {
    match h.datatype {
        DT_UINT8 => raw.iter().map(|&v| v as f64).collect(),
        DT_INT16 => raw
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
        _ => raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
    }
}

/// Reads a 3D scalar volume, applying the header's slope/intercept scaling.
pub fn read_scalar(path: &Path) -> Result<ScalarVolume> {
    let bytes = read_bytes(path)?;
    let h = Header::parse(&bytes)?;
    if h.ndim != 3 {
        return Err(VoxError::Format(format!(
            "{}: {}D image where a 3D scalar volume was expected",
            path.display(),
            h.ndim
        )));
    }
    let geom = h.geometry()?;
    let vals = decode_samples(&h, payload(&bytes, &h)?);
    let data: Vec<f64> = vals.iter().map(|v| v * h.scl_slope + h.scl_inter).collect();
    ScalarVolume::new(geom, data)
}

/// Reads a 3D label volume and checks every code against `schema`.
pub fn read_labels(path: &Path, schema: &LabelSchema) -> Result<LabelVolume> {
    let bytes = read_bytes(path)?;
    let h = Header::parse(&bytes)?;
    if h.ndim != 3 {
        return Err(VoxError::Format(format!(
            "{}: {}D image where a 3D label volume was expected",
            path.display(),
            h.ndim
        )));
    }
    let geom = h.geometry()?;
    let vals = decode_samples(&h, payload(&bytes, &h)?);
    let mut labels = Vec::with_capacity(vals.len());
    for v in vals {
        let scaled = v * h.scl_slope + h.scl_inter;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-6 || !(0.0..=u32::MAX as f64).contains(&rounded) {
            return Err(VoxError::Format(format!(
                "{}: non-integer label value {scaled}",
                path.display()
            )));
        }
        labels.push(rounded as u32);
    }
    let vol = LabelVolume { geometry: geom, labels };
    vol.validate_against(schema)?;
    Ok(vol)
}

/// Reads a 4D class-probability stack (class as the slowest axis).
pub fn read_prob(path: &Path) -> Result<ProbVolume> {
    let bytes = read_bytes(path)?;
    let h = Header::parse(&bytes)?;
    if h.ndim != 4 {
        return Err(VoxError::Format(format!(
            "{}: {}D image where a 4D probability volume was expected",
            path.display(),
            h.ndim
        )));
    }
    let geom = h.geometry()?;
    let vals = decode_samples(&h, payload(&bytes, &h)?);
    let probs: Vec<f64> = vals.iter().map(|v| v * h.scl_slope + h.scl_inter).collect();
    ProbVolume::new(geom, h.dims[3], probs)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let gz = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("gz"))
        .unwrap_or(false);
    if gz {
        let file = std::fs::File::create(path)?;
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(bytes)?;
        enc.finish()?;
    } else {
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

fn put_i16(b: &mut [u8], at: usize, v: i16) {
    b[at..at + 2].copy_from_slice(&v.to_le_bytes());
}

fn put_i32(b: &mut [u8], at: usize, v: i32) {
    b[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

fn put_f32(b: &mut [u8], at: usize, v: f32) {
    b[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

fn encode_header(geom: &VoxelGeometry, ndim: usize, dim4: usize, datatype: i16, bitpix: i16) -> Vec<u8> {
    let mut b = vec![0u8; VOX_OFFSET];
    put_i32(&mut b, 0, HEADER_BYTES as i32);
    put_i16(&mut b, 40, ndim as i16);
    put_i16(&mut b, 42, geom.dims[0] as i16);
    put_i16(&mut b, 44, geom.dims[1] as i16);
    put_i16(&mut b, 46, geom.dims[2] as i16);
    put_i16(&mut b, 48, if ndim == 4 { dim4 as i16 } else { 1 });
    for i in 4..7 {
        put_i16(&mut b, 42 + 2 * i, 1);
    }
    put_i16(&mut b, 70, datatype);
    put_i16(&mut b, 72, bitpix);
    put_f32(&mut b, 76, 1.0);
    for i in 0..3 {
        put_f32(&mut b, 80 + 4 * i, geom.spacing[i] as f32);
    }
    for i in 4..8 {
        put_f32(&mut b, 76 + 4 * i, 1.0);
    }
    put_f32(&mut b, 108, VOX_OFFSET as f32);
    put_f32(&mut b, 112, 1.0);
    put_f32(&mut b, 116, 0.0);
    put_i16(&mut b, 252, 0);
    put_i16(&mut b, 254, 1);
    for r in 0..3 {
        for c in 0..4 {
            put_f32(&mut b, 280 + 16 * r + 4 * c, geom.affine[r][c] as f32);
        }
    }
    b[344..348].copy_from_slice(MAGIC);
    // bytes 348..352 stay zero: no header extensions
    b
}

/// Writes a 3D float32 volume.
pub fn write_scalar(path: &Path, vol: &ScalarVolume) -> Result<()> {
    vol.geometry.validate()?;
    let mut bytes = encode_header(&vol.geometry, 3, 1, DT_FLOAT32, 32);
    bytes.reserve(vol.data.len() * 4);
    for v in &vol.data {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    write_bytes(path, &bytes)
}

/// Writes a 3D integer label volume: uint8 when every code fits a byte,
/// int16 otherwise; codes above i16::MAX are rejected.
pub fn write_labels(path: &Path, vol: &LabelVolume) -> Result<()> {
    vol.geometry.validate()?;
    let widest = vol.labels.iter().copied().max().unwrap_or(0);
    if widest > i16::MAX as u32 {
        return Err(VoxError::Format(format!("label code {widest} does not fit in int16")));
    }
    if widest <= u8::MAX as u32 {
        let mut bytes = encode_header(&vol.geometry, 3, 1, DT_UINT8, 8);
        bytes.extend(vol.labels.iter().map(|&v| v as u8));
        write_bytes(path, &bytes)
    } else {
        let mut bytes = encode_header(&vol.geometry, 3, 1, DT_INT16, 16);
        bytes.reserve(vol.labels.len() * 2);
        for &v in &vol.labels {
            bytes.extend_from_slice(&(v as i16).to_le_bytes());
        }
        write_bytes(path, &bytes)
    }
}

/// Writes a 4D float32 class-probability stack (class as the slowest axis).
pub fn write_prob(path: &Path, vol: &ProbVolume) -> Result<()> {
    vol.geometry.validate()?;
    let mut bytes = encode_header(&vol.geometry, 4, vol.classes, DT_FLOAT32, 32);
    bytes.reserve(vol.probs.len() * 4);
    for v in &vol.probs {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    write_bytes(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volgrid::LabelSchema;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn sample_volume() -> ScalarVolume {
        let geom = VoxelGeometry::with_spacing([5, 4, 3], [0.9, 1.1, 2.4]);
        let data = (0..geom.len()).map(|i| (i as f64) * 0.25 - 3.0).collect();
        ScalarVolume::new(geom, data).unwrap()
    }

    #[test]
    fn scalar_round_trip_plain_and_gzip() {
        let dir = tmpdir();
        let vol = sample_volume();
        for name in ["vol.nii", "vol.nii.gz"] {
            let path = dir.path().join(name);
            write_scalar(&path, &vol).unwrap();
            let back = read_scalar(&path).unwrap();
            assert_eq!(back.geometry.dims, vol.geometry.dims);
            for i in 0..3 {
                assert!((back.geometry.spacing[i] - vol.geometry.spacing[i]).abs() < 1e-6);
            }
            for (a, b) in vol.data.iter().zip(&back.data) {
                assert!((a - b).abs() < 1e-5, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn gzip_is_detected_by_content_not_extension() {
        let dir = tmpdir();
        let vol = sample_volume();
        let gz_path = dir.path().join("vol.nii.gz");
        write_scalar(&gz_path, &vol).unwrap();
        let misnamed = dir.path().join("vol.nii");
        std::fs::copy(&gz_path, &misnamed).unwrap();
        assert!(read_scalar(&misnamed).is_ok());
    }

    #[test]
    fn labels_round_trip_and_schema_check() {
        let dir = tmpdir();
        let schema = LabelSchema::ped2025();
        let geom = VoxelGeometry::isotropic([4, 4, 2]);
        let labels: Vec<u32> = (0..geom.len()).map(|i| (i % 5) as u32).collect();
        let vol = LabelVolume { geometry: geom, labels };
        let path = dir.path().join("seg.nii.gz");
        write_labels(&path, &vol).unwrap();
        let back = read_labels(&path, &schema).unwrap();
        assert_eq!(back.labels, vol.labels);
    }

    #[test]
    fn wide_label_codes_round_trip_as_int16() {
        let dir = tmpdir();
        let geom = VoxelGeometry::isotropic([3, 2, 1]);
        let vol = LabelVolume { geometry: geom, labels: vec![0, 300, 4, 3000, 1, 2] };
        let path = dir.path().join("wide.nii");
        write_labels(&path, &vol).unwrap();
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(i16::from_le_bytes([raw[70], raw[71]]), DT_INT16);
        let back = read_scalar(&path).unwrap();
        let got: Vec<u32> = back.data.iter().map(|&v| v as u32).collect();
        assert_eq!(got, vol.labels);

        let over = LabelVolume {
            geometry: VoxelGeometry::isotropic([1, 1, 1]),
            labels: vec![40000],
        };
        assert!(write_labels(&dir.path().join("o.nii"), &over).is_err());
    }

    #[test]
    fn unknown_label_code_is_rejected_by_name() {
        let dir = tmpdir();
        let schema = LabelSchema::ped2025();
        let geom = VoxelGeometry::isotropic([2, 2, 1]);
        let vol = LabelVolume { geometry: geom, labels: vec![0, 1, 9, 2] };
        let path = dir.path().join("bad.nii");
        write_labels(&path, &vol).unwrap();
        let err = read_labels(&path, &schema).unwrap_err();
        assert!(err.to_string().contains('9'), "{err}");
    }

    #[test]
    fn prob_round_trip_4d() {
        let dir = tmpdir();
        let geom = VoxelGeometry::isotropic([3, 2, 2]);
        let v = geom.len();
        let classes = 3;
        let mut probs = vec![0.0; classes * v];
        for i in 0..v {
            probs[i] = 0.5;
            probs[v + i] = 0.25;
            probs[2 * v + i] = 0.25;
        }
        let pv = ProbVolume::new(geom, classes, probs).unwrap();
        let path = dir.path().join("probs.nii.gz");
        write_prob(&path, &pv).unwrap();
        let back = read_prob(&path).unwrap();
        assert_eq!(back.classes, 3);
        for (a, b) in pv.probs.iter().zip(&back.probs) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn dimensionality_mismatches_are_format_errors() {
        let dir = tmpdir();
        let vol = sample_volume();
        let p3 = dir.path().join("v3.nii");
        write_scalar(&p3, &vol).unwrap();
        match read_prob(&p3) {
            Err(VoxError::Format(_)) => {}
            other => panic!("{other:?}"),
        }
        let geom = VoxelGeometry::isotropic([2, 2, 2]);
        let pv = ProbVolume::new(geom, 2, vec![0.5; 16]).unwrap();
        let p4 = dir.path().join("v4.nii");
        write_prob(&p4, &pv).unwrap();
        match read_scalar(&p4) {
            Err(VoxError::Format(_)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tmpdir();
        let vol = sample_volume();
        let path = dir.path().join("v.nii");
        write_scalar(&path, &vol).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cut = dir.path().join("cut.nii");
        std::fs::write(&cut, &bytes[..bytes.len() - 7]).unwrap();
        match read_scalar(&cut) {
            Err(VoxError::Corrupt(_)) => {}
            other => panic!("{other:?}"),
        }
        let stub = dir.path().join("stub.nii");
        std::fs::write(&stub, &bytes[..100]).unwrap();
        assert!(matches!(read_scalar(&stub), Err(VoxError::Corrupt(_))));
    }

    #[test]
    fn big_endian_is_reported() {
        let dir = tmpdir();
        let vol = sample_volume();
        let path = dir.path().join("v.nii");
        write_scalar(&path, &vol).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0..4].copy_from_slice(&(348i32).to_be_bytes());
        let be = dir.path().join("be.nii");
        std::fs::write(&be, &bytes).unwrap();
        let err = read_scalar(&be).unwrap_err();
        assert!(err.to_string().contains("big-endian"), "{err}");
    }

    #[test]
    fn slope_and_intercept_are_applied() {
        let dir = tmpdir();
        let vol = sample_volume();
        let path = dir.path().join("v.nii");
        write_scalar(&path, &vol).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        put_f32(&mut bytes, 112, 2.0);
        put_f32(&mut bytes, 116, -1.0);
        let scaled = dir.path().join("scaled.nii");
        std::fs::write(&scaled, &bytes).unwrap();
        let back = read_scalar(&scaled).unwrap();
        for (a, b) in vol.data.iter().zip(&back.data) {
            assert!((2.0 * a - 1.0 - b).abs() < 1e-4);
        }
    }

    #[test]
    fn affine_precedence_sform_qform_pixdim() {
        let dir = tmpdir();
        let vol = sample_volume();
        let path = dir.path().join("v.nii");
        write_scalar(&path, &vol).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();

        // qform only: 90-degree rotation about z, spacing (1, 2, 3)
        put_i16(&mut bytes, 254, 0);
        put_i16(&mut bytes, 252, 1);
        put_f32(&mut bytes, 80, 1.0);
        put_f32(&mut bytes, 84, 2.0);
        put_f32(&mut bytes, 88, 3.0);
        put_f32(&mut bytes, 256, 0.0);
        put_f32(&mut bytes, 260, 0.0);
        put_f32(&mut bytes, 264, std::f64::consts::FRAC_1_SQRT_2 as f32);
        let qpath = dir.path().join("q.nii");
        std::fs::write(&qpath, &bytes).unwrap();
        let q = read_scalar(&qpath).unwrap();
        assert!((q.geometry.affine[1][0] - 1.0).abs() < 1e-5);
        assert!((q.geometry.affine[0][1] + 2.0).abs() < 1e-5);
        assert!((q.geometry.affine[2][2] - 3.0).abs() < 1e-5);
        assert!((q.geometry.spacing[1] - 2.0).abs() < 1e-5);

        // neither code set: diagonal pixdim affine
        put_i16(&mut bytes, 252, 0);
        let dpath = dir.path().join("d.nii");
        std::fs::write(&dpath, &bytes).unwrap();
        let d = read_scalar(&dpath).unwrap();
        assert!((d.geometry.affine[0][0] - 1.0).abs() < 1e-6);
        assert!((d.geometry.affine[1][1] - 2.0).abs() < 1e-6);
        assert!((d.geometry.affine[2][2] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn int16_payload_is_decoded() {
        let dir = tmpdir();
        let geom = VoxelGeometry::isotropic([2, 2, 1]);
        let mut bytes = encode_header(&geom, 3, 1, DT_INT16, 16);
        for v in [-5i16, 0, 7, 300] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let path = dir.path().join("i16.nii");
        std::fs::write(&path, &bytes).unwrap();
        let vol = read_scalar(&path).unwrap();
        assert_eq!(vol.data, vec![-5.0, 0.0, 7.0, 300.0]);
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let dir = tmpdir();
        let vol = sample_volume();
        let a = dir.path().join("a.nii.gz");
        let b = dir.path().join("b.nii.gz");
        write_scalar(&a, &vol).unwrap();
        write_scalar(&b, &vol).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
