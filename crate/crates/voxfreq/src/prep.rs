//! Normalization, patch extraction, and the per-case 4-modality to
//! 20-channel frequency decomposition.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dtcwt::extract_lf;
use crate::error::{Result, VoxError};
use crate::filters::FilterBank;
use crate::nsct::extract_hf;
use crate::volgrid::{geometry_compatible, ScalarVolume, VoxelGeometry};

/// Standard deviations below this are treated as zero variance.
pub const ZSCORE_DEGENERATE_STD: f64 = 1e-12;

/// Voxel set a z-score normalizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Every voxel.
    AllVoxels,
    /// Voxels with nonzero intensity; the rest stay 0. The default for
    /// skull-stripped inputs, where air voxels would skew the statistics.
    NonzeroMask,
}

/// Z-score normalization over the selected voxel set (population variance).
/// Zero-variance sets normalize to all zeros.
pub fn zscore(vol: &ScalarVolume, mode: NormMode) -> Result<ScalarVolume> {
    if !vol.all_finite() {
        return Err(VoxError::Argument("non-finite values in volume".into()));
    }
    let selected: Vec<usize> = match mode {
        NormMode::AllVoxels => (0..vol.data.len()).collect(),
        NormMode::NonzeroMask => (0..vol.data.len()).filter(|&i| vol.data[i] != 0.0).collect(),
    };
    if selected.is_empty() {
        return Err(VoxError::Degenerate(
            "nonzero-mask z-score on an all-zero volume".into(),
        ));
    }
    let n = selected.len() as f64;
    let mean = selected.iter().map(|&i| vol.data[i]).sum::<f64>() / n;
    let var = selected.iter().map(|&i| (vol.data[i] - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let mut out = vec![0.0; vol.data.len()];
    if std >= ZSCORE_DEGENERATE_STD {
        for &i in &selected {
            out[i] = (vol.data[i] - mean) / std;
        }
    }
    Ok(ScalarVolume { geometry: vol.geometry.clone(), data: out })
}

/// Patch placement rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchMode {
    Centered,
    SeededRandom,
}

/// A fixed-size patch request. Output dims always equal `size`; axes where
/// the volume is smaller get symmetric `pad_value` margins (low side gets
/// the floor of the deficit halved).
#[derive(Debug, Clone)]
pub struct PatchSpec {
    pub size: [usize; 3],
    pub mode: PatchMode,
    pub seed: Option<u64>,
    pub pad_value: f64,
}

impl PatchSpec {
    pub fn centered(size: [usize; 3]) -> Self {
        PatchSpec { size, mode: PatchMode::Centered, seed: None, pad_value: 0.0 }
    }

    pub fn seeded(size: [usize; 3], seed: u64) -> Self {
        PatchSpec { size, mode: PatchMode::SeededRandom, seed: Some(seed), pad_value: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size.contains(&0) {
            return Err(VoxError::Argument(format!("patch size {:?} has a zero axis", self.size)));
        }
        if self.mode == PatchMode::SeededRandom && self.seed.is_none() {
            return Err(VoxError::Argument("seeded-random patch mode requires a seed".into()));
        }
        Ok(())
    }
}

/// Extracts (or pads out to) a `spec.size` patch. The affine translation is
/// shifted so every copied voxel keeps its world coordinates.
pub fn extract_patch(vol: &ScalarVolume, spec: &PatchSpec) -> Result<ScalarVolume> {
    spec.validate()?;
    let dims = vol.geometry.dims;
    let mut rng = spec.seed.map(ChaCha12Rng::seed_from_u64);
    let mut src_start = [0usize; 3];
    let mut dst_start = [0usize; 3];
    let mut copy_len = [0usize; 3];
    for a in 0..3 {
        if dims[a] >= spec.size[a] {
            let play = dims[a] - spec.size[a];
            src_start[a] = match spec.mode {
                PatchMode::Centered => play / 2,
                PatchMode::SeededRandom => rng.as_mut().unwrap().gen_range(0..=play),
            };
            copy_len[a] = spec.size[a];
        } else {
            dst_start[a] = (spec.size[a] - dims[a]) / 2;
            copy_len[a] = dims[a];
        }
    }
    let mut affine = vol.geometry.affine;
    for row in affine.iter_mut().take(3) {
        for c in 0..3 {
            row[3] += row[c] * (src_start[c] as f64 - dst_start[c] as f64);
        }
    }
    let geometry = VoxelGeometry { dims: spec.size, spacing: vol.geometry.spacing, affine };
    let mut data = vec![spec.pad_value; geometry.len()];
    for z in 0..copy_len[2] {
        for y in 0..copy_len[1] {
            let src = vol
                .geometry
                .index(src_start[0], src_start[1] + y, src_start[2] + z);
            let dst = geometry.index(dst_start[0], dst_start[1] + y, dst_start[2] + z);
            data[dst..dst + copy_len[0]].copy_from_slice(&vol.data[src..src + copy_len[0]]);
        }
    }
    Ok(ScalarVolume { geometry, data })
}

/// Modality keys in canonical order.
pub const MODALITIES: [&str; 4] = ["t1n", "t1c", "t2w", "t2f"];

/// One case's four co-registered MRI modalities.
#[derive(Debug, Clone)]
pub struct CaseBundle {
    pub case_id: String,
    /// In `MODALITIES` order: T1N, T1C, T2W, T2F.
    pub modalities: [ScalarVolume; 4],
}

impl CaseBundle {
    pub fn new(case_id: impl Into<String>, modalities: [ScalarVolume; 4]) -> Result<Self> {
        let b = CaseBundle { case_id: case_id.into(), modalities };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (m, name) in self.modalities.iter().zip(MODALITIES).skip(1) {
            if !geometry_compatible(&self.modalities[0].geometry, &m.geometry) {
                return Err(VoxError::Incompatible(format!(
                    "case {}: modality {} geometry differs from {}",
                    self.case_id, name, MODALITIES[0]
                )));
            }
        }
        Ok(())
    }
}

/// Decomposes each modality into one low-frequency channel (`{m}_lf`, the
/// J-level oriented-subband-free reconstruction) and four directional
/// high-frequency channels (`{m}_hf1..{m}_hf4`): 20 channels total.
pub fn decompose_case(
    bundle: &CaseBundle,
    levels: usize,
    bank: &FilterBank,
) -> Result<BTreeMap<String, ScalarVolume>> {
    bundle.validate()?;
    let mut out = BTreeMap::new();
    for (name, vol) in MODALITIES.iter().zip(&bundle.modalities) {
        let annotate = |e: VoxError| e.with_context(format!("modality {name}"));
        let lf = extract_lf(vol, levels, bank).map_err(annotate)?;
        out.insert(format!("{name}_lf"), lf);
        let hf = extract_hf(vol, &bank.nsct).map_err(annotate)?;
        for (i, ch) in hf.into_iter().enumerate() {
            out.insert(format!("{name}_hf{}", i + 1), ch);
        }
    }
    Ok(out)
}

/// `decompose_case` with the four modalities processed on separate threads.
/// Channel values are identical to the sequential path.
pub fn decompose_case_parallel(
    bundle: &CaseBundle,
    levels: usize,
    bank: &FilterBank,
    jobs: usize,
) -> Result<BTreeMap<String, ScalarVolume>> {
    if jobs <= 1 {
        return decompose_case(bundle, levels, bank);
    }
    bundle.validate()?;
    let per_modality: Vec<Result<Vec<(String, ScalarVolume)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = MODALITIES
            .iter()
            .zip(&bundle.modalities)
            .map(|(name, vol)| {
                s.spawn(move || {
                    let annotate = |e: VoxError| e.with_context(format!("modality {name}"));
                    let mut chans =
                        vec![(format!("{name}_lf"), extract_lf(vol, levels, bank).map_err(annotate)?)];
                    let hf = extract_hf(vol, &bank.nsct).map_err(annotate)?;
                    for (i, ch) in hf.into_iter().enumerate() {
                        chans.push((format!("{name}_hf{}", i + 1), ch));
                    }
                    Ok(chans)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("modality worker panicked")).collect()
    });
    let mut out = BTreeMap::new();
    for chans in per_modality {
        for (name, vol) in chans? {
            out.insert(name, vol);
        }
    }
    Ok(out)
}
