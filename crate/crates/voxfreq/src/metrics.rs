//! Lesion-wise Dice and normalized surface distance over schema regions,
//! with connected-component lesion matching.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VoxError};
use crate::volgrid::{
    compose_regions, geometry_compatible, BinaryMask, LabelSchema, LabelVolume,
};

/// Default boundary tolerance (mm).
pub const DEFAULT_TAU_MM: f64 = 0.5;

/// Voxel adjacency rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Six,
    Eighteen,
    TwentySix,
}

impl Connectivity {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            _ => Err(VoxError::Argument(format!("connectivity must be 6, 18 or 26, got {v}"))),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Connectivity::Six => 6,
            Connectivity::Eighteen => 18,
            Connectivity::TwentySix => 26,
        }
    }

    fn offsets(self) -> Vec<[i64; 3]> {
        let mut offs = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let order = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => order == 1,
                        Connectivity::Eighteen => order <= 2,
                        Connectivity::TwentySix => true,
                    };
                    if keep {
                        offs.push([dx, dy, dz]);
                    }
                }
            }
        }
        offs
    }
}

/// Lesion-matching and scoring parameters.
#[derive(Debug, Clone)]
pub struct MetricConfig {
    pub connectivity: Connectivity,
    /// 26-neighborhood dilation iterations applied to each reference lesion
    /// before assigning predicted components.
    pub match_dilation_voxels: usize,
    pub tau_mm: f64,
    /// Reference components smaller than this are not scored.
    pub min_lesion_voxels: usize,
    /// Also report whole-region (non-lesion-wise) NSD per region.
    pub whole_region_nsd: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            connectivity: Connectivity::TwentySix,
            match_dilation_voxels: 1,
            tau_mm: DEFAULT_TAU_MM,
            min_lesion_voxels: 0,
            whole_region_nsd: false,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_mm.is_finite() && self.tau_mm > 0.0) {
            return Err(VoxError::Argument(format!("tau_mm must be > 0, got {}", self.tau_mm)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "connectivity": self.connectivity.as_u8(),
            "match_dilation_voxels": self.match_dilation_voxels,
            "tau_mm": self.tau_mm,
            "min_lesion_voxels": self.min_lesion_voxels,
            "whole_region_nsd": self.whole_region_nsd,
        })
    }
}

/// Connected-component labeling: 0 is background, component ids are 1..count
/// in first-voxel scan order.
#[derive(Debug, Clone)]
pub struct ComponentLabeling {
    pub labels: Vec<u32>,
    pub count: usize,
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn mask_of(&self, id: u32, like: &BinaryMask) -> BinaryMask {
        BinaryMask {
            geometry: like.geometry.clone(),
            bits: self.labels.iter().map(|&l| l == id).collect(),
        }
    }
}

fn unindex(i: usize, dims: [usize; 3]) -> (usize, usize, usize) {
    (i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1]))
}

fn neighbor(dims: [usize; 3], x: usize, y: usize, z: usize, o: [i64; 3]) -> Option<usize> {
    let nx = x as i64 + o[0];
    let ny = y as i64 + o[1];
    let nz = z as i64 + o[2];
    if nx < 0 || ny < 0 || nz < 0 || nx >= dims[0] as i64 || ny >= dims[1] as i64 || nz >= dims[2] as i64
    {
        return None;
    }
    Some(nx as usize + dims[0] * (ny as usize + dims[1] * nz as usize))
}

/// Breadth-first labeling over the chosen connectivity.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> ComponentLabeling {
    let dims = mask.geometry.dims;
    let offs = connectivity.offsets();
    let mut labels = vec![0u32; mask.bits.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    let mut count = 0u32;
    for start in 0..mask.bits.len() {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        let mut size = 1usize;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y, z) = unindex(i, dims);
            for o in &offs {
                if let Some(j) = neighbor(dims, x, y, z, *o) {
                    if mask.bits[j] && labels[j] == 0 {
                        labels[j] = count;
                        size += 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    ComponentLabeling { labels, count: count as usize, sizes }
}

/// 2|a∩b| / (|a|+|b|); 1.0 when both masks are empty.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if !geometry_compatible(&a.geometry, &b.geometry) {
        return Err(VoxError::Incompatible("dice over mismatched geometries".into()));
    }
    let inter = a.bits.iter().zip(&b.bits).filter(|(x, y)| **x && **y).count();
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Surface voxels: mask voxels with a 6-neighbor outside the mask, the
/// volume border counting as outside.
fn surface_voxels(mask: &BinaryMask) -> Vec<usize> {
    let dims = mask.geometry.dims;
    let offs = Connectivity::Six.offsets();
    let mut out = Vec::new();
    for i in 0..mask.bits.len() {
        if !mask.bits[i] {
            continue;
        }
        let (x, y, z) = unindex(i, dims);
        let exposed = offs.iter().any(|o| match neighbor(dims, x, y, z, *o) {
            Some(j) => !mask.bits[j],
            None => true,
        });
        if exposed {
            out.push(i);
        }
    }
    out
}

/// Fraction of surface voxels of either mask lying within `tau_mm` of the
/// other mask's surface (Euclidean voxel-center distances). Both masks
/// empty → 1.0; exactly one empty → 0.0.
pub fn nsd(a: &BinaryMask, b: &BinaryMask, tau_mm: f64) -> Result<f64> {
    if !geometry_compatible(&a.geometry, &b.geometry) {
        return Err(VoxError::Incompatible("nsd over mismatched geometries".into()));
    }
    if !(tau_mm.is_finite() && tau_mm > 0.0) {
        return Err(VoxError::Argument(format!("tau_mm must be > 0, got {tau_mm}")));
    }
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let sa = surface_voxels(a);
    let sb = surface_voxels(b);
    let spacing = a.geometry.spacing;
    let dims = a.geometry.dims;
    let near_a = count_within(&sa, &sb, dims, spacing, tau_mm);
    let near_b = count_within(&sb, &sa, dims, spacing, tau_mm);
    Ok((near_a + near_b) as f64 / (sa.len() + sb.len()) as f64)
}

/// Counts query voxels within `tau` mm of any target voxel. Targets are
/// bucketed on a `tau`-sized grid, so only the 27 neighboring cells can
/// contain a hit; the distance test itself is the same exact comparison an
/// all-pairs scan performs.
fn count_within(
    queries: &[usize],
    targets: &[usize],
    dims: [usize; 3],
    spacing: [f64; 3],
    tau: f64,
) -> usize {
    let mm = |i: usize| {
        let (x, y, z) = unindex(i, dims);
        [x as f64 * spacing[0], y as f64 * spacing[1], z as f64 * spacing[2]]
    };
    let cell = |p: [f64; 3]| {
        [
            (p[0] / tau).floor() as i64,
            (p[1] / tau).floor() as i64,
            (p[2] / tau).floor() as i64,
        ]
    };
    let mut buckets: HashMap<[i64; 3], Vec<[f64; 3]>> = HashMap::new();
    for &t in targets {
        let p = mm(t);
        buckets.entry(cell(p)).or_default().push(p);
    }
    let tau2 = tau * tau;
    queries
        .iter()
        .filter(|&&q| {
            let p = mm(q);
            let c = cell(p);
            for dz in -1..=1 {
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if let Some(pts) = buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for t in pts {
                                let d2 = (p[0] - t[0]).powi(2)
                                    + (p[1] - t[1]).powi(2)
                                    + (p[2] - t[2]).powi(2);
                                if d2 <= tau2 {
                                    return true;
                                }
                            }
                        }
                    }
                }
            }
            false
        })
        .count()
}

/// One iterated 26-neighborhood dilation step per iteration.
fn dilate26(bits: &[bool], dims: [usize; 3], iterations: usize) -> Vec<bool> {
    let offs = Connectivity::TwentySix.offsets();
    let mut cur = bits.to_vec();
    for _ in 0..iterations {
        let mut next = cur.clone();
        for (i, &set) in cur.iter().enumerate() {
            if !set {
                continue;
            }
            let (x, y, z) = unindex(i, dims);
            for o in &offs {
                if let Some(j) = neighbor(dims, x, y, z, *o) {
                    next[j] = true;
                }
            }
        }
        cur = next;
    }
    cur
}

/// Reference-lesion to predicted-component assignment.
#[derive(Debug, Clone)]
pub struct LesionMatching {
    pub ref_components: ComponentLabeling,
    /// Reference component ids meeting `min_lesion_voxels`, scan order.
    pub kept_ref: Vec<u32>,
    pub pred_components: ComponentLabeling,
    /// Per kept reference lesion, the predicted component ids whose voxels
    /// intersect its dilated mask.
    pub assigned: Vec<Vec<u32>>,
    /// Predicted component ids assigned to no reference lesion.
    pub false_positives: Vec<u32>,
}

/// Matches predicted components to dilated reference lesions. A predicted
/// component touching several lesions is assigned to all of them.
pub fn lesion_match(rf: &BinaryMask, pred: &BinaryMask, cfg: &MetricConfig) -> Result<LesionMatching> {
    if !geometry_compatible(&rf.geometry, &pred.geometry) {
        return Err(VoxError::Incompatible("lesion match over mismatched geometries".into()));
    }
    cfg.validate()?;
    let dims = rf.geometry.dims;
    let ref_components = connected_components(rf, cfg.connectivity);
    let pred_components = connected_components(pred, cfg.connectivity);
    let kept_ref: Vec<u32> = (1..=ref_components.count as u32)
        .filter(|&id| ref_components.sizes[(id - 1) as usize] >= cfg.min_lesion_voxels.max(1))
        .collect();
    let mut assigned = Vec::with_capacity(kept_ref.len());
    let mut used = vec![false; pred_components.count + 1];
    for &id in &kept_ref {
        let lesion: Vec<bool> = ref_components.labels.iter().map(|&l| l == id).collect();
        let dilated = dilate26(&lesion, dims, cfg.match_dilation_voxels);
        let mut hits = Vec::new();
        for pid in 1..=pred_components.count as u32 {
            let touches = pred_components
                .labels
                .iter()
                .zip(&dilated)
                .any(|(&l, &d)| l == pid && d);
            if touches {
                hits.push(pid);
                used[pid as usize] = true;
            }
        }
        assigned.push(hits);
    }
    let false_positives: Vec<u32> =
        (1..=pred_components.count as u32).filter(|&pid| !used[pid as usize]).collect();
    Ok(LesionMatching { ref_components, kept_ref, pred_components, assigned, false_positives })
}

/// Scores for one region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionScores {
    pub lesion_dice: f64,
    pub lesion_nsd: f64,
    pub n_ref_lesions: usize,
    pub n_pred_lesions: usize,
    pub n_false_positive_lesions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_nsd: Option<f64>,
}

/// Per-region lesion-wise report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LesionReport {
    pub regions: BTreeMap<String, RegionScores>,
}

/// Empty term lists (possible only with nothing to score) count as perfect.
fn mean_or_one(terms: &[f64]) -> f64 {
    if terms.is_empty() {
        1.0
    } else {
        terms.iter().sum::<f64>() / terms.len() as f64
    }
}

fn score_region(rf: &BinaryMask, pred: &BinaryMask, cfg: &MetricConfig) -> Result<RegionScores> {
    let region_nsd = if cfg.whole_region_nsd {
        Some(nsd(rf, pred, cfg.tau_mm)?)
    } else {
        None
    };
    if rf.is_empty() {
        let n_pred = connected_components(pred, cfg.connectivity).count;
        let score = if n_pred == 0 { 1.0 } else { 0.0 };
        return Ok(RegionScores {
            lesion_dice: score,
            lesion_nsd: score,
            n_ref_lesions: 0,
            n_pred_lesions: n_pred,
            n_false_positive_lesions: n_pred,
            region_nsd,
        });
    }
    let m = lesion_match(rf, pred, cfg)?;
    let mut dice_terms = Vec::new();
    let mut nsd_terms = Vec::new();
    for (&id, hits) in m.kept_ref.iter().zip(&m.assigned) {
        let lesion = m.ref_components.mask_of(id, rf);
        let union = BinaryMask {
            geometry: rf.geometry.clone(),
            bits: m
                .pred_components
                .labels
                .iter()
                .map(|&l| l != 0 && hits.contains(&l))
                .collect(),
        };
        dice_terms.push(dice(&lesion, &union)?);
        nsd_terms.push(nsd(&lesion, &union, cfg.tau_mm)?);
    }
    for _ in &m.false_positives {
        dice_terms.push(0.0);
        nsd_terms.push(0.0);
    }
    Ok(RegionScores {
        lesion_dice: mean_or_one(&dice_terms),
        lesion_nsd: mean_or_one(&nsd_terms),
        n_ref_lesions: m.kept_ref.len(),
        n_pred_lesions: m.pred_components.count,
        n_false_positive_lesions: m.false_positives.len(),
        region_nsd,
    })
}

/// Lesion-wise Dice and NSD over every schema region (raw and composite).
pub fn lesion_wise_scores(
    rf: &LabelVolume,
    pred: &LabelVolume,
    schema: &LabelSchema,
    cfg: &MetricConfig,
) -> Result<LesionReport> {
    if !geometry_compatible(&rf.geometry, &pred.geometry) {
        return Err(VoxError::Incompatible(
            "reference and prediction geometries differ".into(),
        ));
    }
    cfg.validate()?;
    rf.validate_against(schema)?;
    pred.validate_against(schema)?;
    let ref_regions = compose_regions(rf, schema)?;
    let pred_regions = compose_regions(pred, schema)?;
    let mut regions = BTreeMap::new();
    for name in schema.region_order() {
        let scores = score_region(&ref_regions[&name], &pred_regions[&name], cfg)?;
        regions.insert(name, scores);
    }
    Ok(LesionReport { regions })
}
