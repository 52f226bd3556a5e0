//! Voxel geometry, volumes, masks, label schemas, and the 2D grid type used
//! by the slice transforms.
//!
//! Volume data is stored in Fortran order: index `x + nx*(y + ny*z)`, so an
//! axial slice (fixed `z`) is one contiguous plane with `x` fastest.

use std::collections::BTreeMap;

use crate::error::{Result, VoxError};

/// Relative tolerance for geometry equality (spacing and affine entries);
/// absorbs file-format float rounding without masking real mismatches.
pub const GEOMETRY_REL_TOL: f64 = 1e-4;

/// Voxel grid sizing: dims, physical spacing (mm), and the voxel-to-mm affine.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGeometry {
    /// Voxels per axis; all ≥ 1.
    pub dims: [usize; 3],
    /// Millimetres per voxel; all > 0.
    pub spacing: [f64; 3],
    /// 4×4 voxel-index → physical-mm map, row-major.
    pub affine: [[f64; 4]; 4],
}

impl VoxelGeometry {
    /// Geometry with the given spacing and a diagonal affine.
    pub fn with_spacing(dims: [usize; 3], spacing: [f64; 3]) -> Self {
        let mut affine = [[0.0; 4]; 4];
        for a in 0..3 {
            affine[a][a] = spacing[a];
        }
        affine[3][3] = 1.0;
        VoxelGeometry { dims, spacing, affine }
    }

    /// Unit-spacing geometry with an identity affine.
    pub fn isotropic(dims: [usize; 3]) -> Self {
        Self::with_spacing(dims, [1.0, 1.0, 1.0])
    }

    /// Total voxel count.
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks positivity and that the affine's upper-left 3×3 column norms
    /// equal spacing within `GEOMETRY_REL_TOL` relative.
    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 1) {
            return Err(VoxError::Argument(format!(
                "all dims must be >= 1, got {:?}",
                self.dims
            )));
        }
        if self.spacing.iter().any(|&s| !s.is_finite() || s <= 0.0) {
            return Err(VoxError::Argument(format!(
                "all spacing entries must be positive, got {:?}",
                self.spacing
            )));
        }
        for a in 0..3 {
            let norm = (0..3).map(|r| self.affine[r][a].powi(2)).sum::<f64>().sqrt();
            let rel = (norm - self.spacing[a]).abs() / self.spacing[a];
            if rel > GEOMETRY_REL_TOL {
                return Err(VoxError::Argument(format!(
                    "affine column {a} norm {norm} disagrees with spacing {} beyond {GEOMETRY_REL_TOL} relative",
                    self.spacing[a]
                )));
            }
        }
        Ok(())
    }

    /// Flat Fortran-order index of voxel (x, y, z).
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }
}

/// True iff dims match exactly and spacing/affine match within
/// `GEOMETRY_REL_TOL` relative tolerance.
pub fn geometry_compatible(a: &VoxelGeometry, b: &VoxelGeometry) -> bool {
    if a.dims != b.dims {
        return false;
    }
    let rel_eq = |x: f64, y: f64| {
        let scale = x.abs().max(y.abs()).max(1e-30);
        (x - y).abs() <= GEOMETRY_REL_TOL * scale
    };
    for i in 0..3 {
        if !rel_eq(a.spacing[i], b.spacing[i]) {
            return false;
        }
    }
    for r in 0..4 {
        for c in 0..4 {
            let (x, y) = (a.affine[r][c], b.affine[r][c]);
            // absolute comparison for near-zero entries, relative otherwise
            if x.abs().max(y.abs()) > GEOMETRY_REL_TOL {
                if !rel_eq(x, y) {
                    return false;
                }
            } else if (x - y).abs() > GEOMETRY_REL_TOL {
                return false;
            }
        }
    }
    true
}

/// Real-valued volume over a voxel grid.
#[derive(Debug, Clone)]
pub struct ScalarVolume {
    pub geometry: VoxelGeometry,
    /// Fortran-order values; length = product of dims.
    pub data: Vec<f64>,
}

impl ScalarVolume {
    pub fn new(geometry: VoxelGeometry, data: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if data.len() != geometry.len() {
            return Err(VoxError::Argument(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                geometry.dims
            )));
        }
        Ok(ScalarVolume { geometry, data })
    }

    /// Constant-valued volume.
    pub fn filled(geometry: VoxelGeometry, value: f64) -> Self {
        let n = geometry.len();
        ScalarVolume { geometry, data: vec![value; n] }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies axial slice `z` out as a 2D grid (rows = y, cols = x).
    pub fn slice(&self, z: usize) -> Grid2 {
        let [nx, ny, _] = self.geometry.dims;
        let plane = &self.data[z * nx * ny..(z + 1) * nx * ny];
        Grid2 { rows: ny, cols: nx, data: plane.to_vec() }
    }

    /// Writes a grid back into axial slice `z`; dims must match.
    pub fn set_slice(&mut self, z: usize, g: &Grid2) {
        let [nx, ny, _] = self.geometry.dims;
        assert_eq!((g.rows, g.cols), (ny, nx), "slice dims mismatch");
        self.data[z * nx * ny..(z + 1) * nx * ny].copy_from_slice(&g.data);
    }
}

/// Integer-labelled volume (0 = background).
#[derive(Debug, Clone)]
pub struct LabelVolume {
    pub geometry: VoxelGeometry,
    /// Fortran-order label codes; length = product of dims.
    pub labels: Vec<u32>,
}

impl LabelVolume {
    pub fn new(geometry: VoxelGeometry, labels: Vec<u32>) -> Result<Self> {
        geometry.validate()?;
        if labels.len() != geometry.len() {
            return Err(VoxError::Argument(format!(
                "label count {} does not match dims {:?}",
                labels.len(),
                geometry.dims
            )));
        }
        Ok(LabelVolume { geometry, labels })
    }

    /// Errors with the offending code if any label is neither 0 nor a raw
    /// schema code.
    pub fn validate_against(&self, schema: &LabelSchema) -> Result<()> {
        for &v in &self.labels {
            if v != 0 && !schema.raw_regions.iter().any(|(_, code)| *code == v) {
                return Err(VoxError::SchemaViolation(format!(
                    "label code {v} is not in the active schema"
                )));
            }
        }
        Ok(())
    }
}

/// Boolean mask over a voxel grid.
#[derive(Debug, Clone)]
pub struct BinaryMask {
    pub geometry: VoxelGeometry,
    /// Fortran-order bits; length = product of dims.
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(geometry: VoxelGeometry, bits: Vec<bool>) -> Result<Self> {
        geometry.validate()?;
        if bits.len() != geometry.len() {
            return Err(VoxError::Argument(format!(
                "bit count {} does not match dims {:?}",
                bits.len(),
                geometry.dims
            )));
        }
        Ok(BinaryMask { geometry, bits })
    }

    pub fn empty(geometry: VoxelGeometry) -> Self {
        let n = geometry.len();
        BinaryMask { geometry, bits: vec![false; n] }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Region naming: raw single-code regions plus composites defined as unions
/// of raw regions.
#[derive(Debug, Clone)]
pub struct LabelSchema {
    /// Name → integer code, in declaration order (also the probability-class
    /// order after background).
    pub raw_regions: Vec<(String, u32)>,
    /// Name → member raw-region names.
    pub composites: Vec<(String, Vec<String>)>,
}

impl LabelSchema {
    /// Default pediatric schema: ET=1, NET=2, CC=3, ED=4; TC = ET∪NET∪CC,
    /// WT = TC∪ED.
    pub fn ped2025() -> Self {
        LabelSchema {
            raw_regions: vec![
                ("ET".into(), 1),
                ("NET".into(), 2),
                ("CC".into(), 3),
                ("ED".into(), 4),
            ],
            composites: vec![
                ("TC".into(), vec!["ET".into(), "NET".into(), "CC".into()]),
                (
                    "WT".into(),
                    vec!["ET".into(), "NET".into(), "CC".into(), "ED".into()],
                ),
            ],
        }
    }

    /// Evaluation region order used in every report.
    pub fn region_order(&self) -> Vec<String> {
        self.raw_regions
            .iter()
            .map(|(n, _)| n.clone())
            .chain(self.composites.iter().map(|(n, _)| n.clone()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (name, code) in &self.raw_regions {
            if *code == 0 {
                return Err(VoxError::SchemaViolation(format!(
                    "raw region {name} uses reserved background code 0"
                )));
            }
            if !seen.insert(*code) {
                return Err(VoxError::SchemaViolation(format!(
                    "raw code {code} assigned twice"
                )));
            }
        }
        for (name, members) in &self.composites {
            for m in members {
                if !self.raw_regions.iter().any(|(n, _)| n == m) {
                    return Err(VoxError::SchemaViolation(format!(
                        "composite {name} references unknown raw region {m}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One mask per raw region (voxels holding its code) and per composite
/// (union of member masks); all masks share the input geometry.
pub fn compose_regions(
    labels: &LabelVolume,
    schema: &LabelSchema,
) -> Result<BTreeMap<String, BinaryMask>> {
    schema.validate()?;
    labels.validate_against(schema)?;
    let mut out = BTreeMap::new();
    for (name, code) in &schema.raw_regions {
        let bits: Vec<bool> = labels.labels.iter().map(|&v| v == *code).collect();
        out.insert(name.clone(), BinaryMask { geometry: labels.geometry.clone(), bits });
    }
    for (name, members) in &schema.composites {
        let mut bits = vec![false; labels.labels.len()];
        for m in members {
            let member = &out[m];
            for (b, &mb) in bits.iter_mut().zip(&member.bits) {
                *b |= mb;
            }
        }
        out.insert(name.clone(), BinaryMask { geometry: labels.geometry.clone(), bits });
    }
    Ok(out)
}

/// Dense row-major 2D grid used by the slice transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Grid2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid2 { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Grid2 { rows, cols, data: vec![v; rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copies column c into out; out.len() must equal rows.
    pub fn col_into(&self, c: usize, out: &mut [f64]) {
        assert_eq!(out.len(), self.rows);
        for (r, v) in out.iter_mut().enumerate() {
            *v = self.at(r, c);
        }
    }

    /// Writes vals into column c; vals.len() must equal rows.
    pub fn set_col(&mut self, c: usize, vals: &[f64]) {
        assert_eq!(vals.len(), self.rows);
        for (r, &v) in vals.iter().enumerate() {
            *self.at_mut(r, c) = v;
        }
    }

    /// Elementwise a − b; dims must match.
    pub fn sub(&self, other: &Grid2) -> Grid2 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Grid2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
