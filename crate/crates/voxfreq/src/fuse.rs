//! Ensemble fusion: weighted averaging of per-model class-probability maps
//! and conversion to label maps.

use crate::error::{Result, VoxError};
use crate::volgrid::{geometry_compatible, LabelSchema, LabelVolume, VoxelGeometry};

/// Allowed deviation of a per-voxel class-probability sum from 1 on load
/// (float32 serialization of softmax outputs).
pub const PROB_SUM_TOL: f64 = 1e-4;
/// Required precision of the ensemble weight sum.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Per-voxel class probabilities; class is the slowest axis, so class `c`
/// of voxel `v` lives at `c * geometry.len() + v`.
#[derive(Debug, Clone)]
pub struct ProbVolume {
    pub geometry: VoxelGeometry,
    pub classes: usize,
    pub probs: Vec<f64>,
}

impl ProbVolume {
    /// Validates ranges and per-voxel sums, then renormalizes each voxel's
    /// class distribution to sum to exactly 1.
    pub fn new(geometry: VoxelGeometry, classes: usize, probs: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if classes < 2 {
            return Err(VoxError::Argument(format!("classes must be >= 2, got {classes}")));
        }
        let v = geometry.len();
        if probs.len() != classes * v {
            return Err(VoxError::Argument(format!(
                "{} probability values for {classes} classes x {v} voxels",
                probs.len()
            )));
        }
        let mut probs = probs;
        for p in &mut probs {
            if !p.is_finite() || *p < -1e-9 || *p > 1.0 + 1e-9 {
                return Err(VoxError::Argument(format!("probability {p} outside [0, 1]")));
            }
            *p = p.clamp(0.0, 1.0);
        }
        for vox in 0..v {
            let sum: f64 = (0..classes).map(|c| probs[c * v + vox]).sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(VoxError::Argument(format!(
                    "voxel {vox}: class probabilities sum to {sum}"
                )));
            }
            for c in 0..classes {
                probs[c * v + vox] /= sum;
            }
        }
        Ok(ProbVolume { geometry, classes, probs })
    }

    pub fn at(&self, class: usize, voxel: usize) -> f64 {
        self.probs[class * self.geometry.len() + voxel]
    }
}

/// Per-model averaging weights.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub weights: Vec<f64>,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec { weights: vec![1.0 / 3.0; 3] }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(VoxError::Spec(format!("weights must all be positive: {:?}", self.weights)));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(VoxError::Spec(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Per-voxel, per-class weighted average of the model probabilities.
pub fn fuse_probs(models: &[ProbVolume], spec: &EnsembleSpec) -> Result<ProbVolume> {
    if models.len() < 2 {
        return Err(VoxError::Argument(format!(
            "{} model(s); fusion needs at least 2",
            models.len()
        )));
    }
    spec.validate()?;
    if spec.weights.len() != models.len() {
        return Err(VoxError::Spec(format!(
            "{} weights for {} models",
            spec.weights.len(),
            models.len()
        )));
    }
    let first = &models[0];
    for (i, m) in models.iter().enumerate().skip(1) {
        if !geometry_compatible(&first.geometry, &m.geometry) {
            return Err(VoxError::Incompatible(format!("model {i} geometry differs from model 0")));
        }
        if m.classes != first.classes {
            return Err(VoxError::Incompatible(format!(
                "model {i} has {} classes, model 0 has {}",
                m.classes, first.classes
            )));
        }
    }
    let mut probs = vec![0.0; first.probs.len()];
    for (m, &w) in models.iter().zip(&spec.weights) {
        for (o, p) in probs.iter_mut().zip(&m.probs) {
            *o += w * p;
        }
    }
    Ok(ProbVolume { geometry: first.geometry.clone(), classes: first.classes, probs })
}

/// Per-voxel argmax into schema codes: class 0 is background (code 0),
/// class i maps to the i-th raw-region code. Ties go to the lowest class.
pub fn argmax_labels(prob: &ProbVolume, schema: &LabelSchema) -> Result<LabelVolume> {
    schema.validate()?;
    if prob.classes != schema.raw_regions.len() + 1 {
        return Err(VoxError::Spec(format!(
            "{} classes, schema has {} raw regions plus background",
            prob.classes,
            schema.raw_regions.len()
        )));
    }
    let v = prob.geometry.len();
    let mut labels = Vec::with_capacity(v);
    for vox in 0..v {
        let mut best = 0usize;
        let mut best_p = prob.probs[vox];
        for c in 1..prob.classes {
            let p = prob.probs[c * v + vox];
            if p > best_p {
                best = c;
                best_p = p;
            }
        }
        labels.push(if best == 0 { 0 } else { schema.raw_regions[best - 1].1 });
    }
    Ok(LabelVolume { geometry: prob.geometry.clone(), labels })
}
