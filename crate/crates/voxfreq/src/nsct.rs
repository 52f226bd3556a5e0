//! Nonsubsampled contourlet transform: an à-trous pyramid split (NSP)
//! followed by a 4-direction nonsubsampled directional filter bank (NSDFB).
//! Nothing is decimated, so every output grid matches the input dims, and
//! every split's second half is formed by subtraction, making the additive
//! reconstruction exact by construction.
//!
//! Direction index convention: 0 = near-horizontal, 1 = +45°,
//! 2 = near-vertical, 3 = −45° (wedge of the dominant wavevector).

use crate::error::{Result, VoxError};
use crate::volgrid::{Grid2, ScalarVolume};

/// Relative tolerance for the additive-partition invariants.
pub const NSCT_PARTITION_REL_TOL: f64 = 1e-10;

/// Absolute-over-|c| tolerance for constant-input highpass annihilation.
pub const NSCT_CONSTANT_REL_TOL: f64 = 1e-12;

/// Dense row-major 2D convolution kernel with odd dims.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Kernel2 {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Kernel2 { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Outer product of a 1D tap vector with itself.
    pub fn separable(taps: &[f64]) -> Self {
        let n = taps.len();
        let mut data = Vec::with_capacity(n * n);
        for &a in taps {
            for &b in taps {
                data.push(a * b);
            }
        }
        Kernel2 { rows: n, cols: n, data }
    }
}

/// The pyramid smoother and the two fan kernels of the directional bank.
#[derive(Debug, Clone)]
pub struct NsctKernels {
    /// 2D pyramid smoother (separable; built from `pyramid_factor`).
    pub pyramid_lowpass: Kernel2,
    /// 1D factor of the pyramid smoother, used by the separable fast path.
    pub pyramid_factor: Vec<f64>,
    /// First-stage fan kernel F1 (tilted-fan wedge selector).
    pub fan_level1: Kernel2,
    /// Second-stage fan kernel F2: quincunx-upsampled variant of the
    /// shear-selective complement prototype (identity − F1).
    pub fan_level2: Kernel2,
}

impl NsctKernels {
    pub fn new(pyramid_factor: Vec<f64>, fan_level1: Kernel2, fan_level2: Kernel2) -> Result<Self> {
        if pyramid_factor.len().is_multiple_of(2) || pyramid_factor.is_empty() {
            return Err(VoxError::Format(
                "pyramid factor must have odd length".into(),
            ));
        }
        let dc: f64 = pyramid_factor.iter().sum();
        if (dc - 1.0).abs() > 1e-12 {
            return Err(VoxError::Format(format!(
                "pyramid factor DC gain {dc} must be 1"
            )));
        }
        for (name, k) in [("fan_level1", &fan_level1), ("fan_level2", &fan_level2)] {
            if k.rows % 2 == 0 || k.cols % 2 == 0 {
                return Err(VoxError::Format(format!("{name} must have odd dims")));
            }
            // each fan passes exactly half the DC energy; its complement the rest
            if (k.sum() - 0.5).abs() > 1e-12 {
                return Err(VoxError::Format(format!(
                    "{name} DC gain {} must be 1/2",
                    k.sum()
                )));
            }
        }
        // quincunx support: nonzero F2 taps only where the offset-sum from the
        // centre is even
        let (cr, cc) = (fan_level2.rows / 2, fan_level2.cols / 2);
        for r in 0..fan_level2.rows {
            for c in 0..fan_level2.cols {
                let off = (r as isize - cr as isize) + (c as isize - cc as isize);
                if off.rem_euclid(2) == 1 && fan_level2.at(r, c) != 0.0 {
                    return Err(VoxError::Format(
                        "fan_level2 has taps off the quincunx lattice".into(),
                    ));
                }
            }
        }
        let pyramid_lowpass = Kernel2::separable(&pyramid_factor);
        Ok(NsctKernels { pyramid_lowpass, pyramid_factor, fan_level1, fan_level2 })
    }
}

/// One pyramid level plus its four-way directional split.
#[derive(Debug, Clone)]
pub struct NsctSet {
    pub lowpass: Grid2,
    pub bandpass: Grid2,
    /// Index order: near-horizontal, +45°, near-vertical, −45°.
    pub directions: [Grid2; 4],
}

/// Symmetric (half-sample mirror) index with multi-bounce reflection.
#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// True 2D convolution (kernel flipped) under symmetric extension; output
/// dims equal input dims.
pub fn conv2_sym(img: &Grid2, k: &Kernel2) -> Grid2 {
    let (kr2, kc2) = (k.rows / 2, k.cols / 2);
    let mut out = Grid2::zeros(img.rows, img.cols);
    for i in 0..img.rows {
        for j in 0..img.cols {
            let mut acc = 0.0;
            for p in 0..k.rows {
                let ii = mirror(i as isize + kr2 as isize - p as isize, img.rows);
                let krow = &k.data[p * k.cols..(p + 1) * k.cols];
                let irow = i_row(img, ii);
                for (q, &kv) in krow.iter().enumerate() {
                    if kv != 0.0 {
                        let jj = mirror(j as isize + kc2 as isize - q as isize, img.cols);
                        acc += kv * irow[jj];
                    }
                }
            }
            *out.at_mut(i, j) = acc;
        }
    }
    out
}

#[inline]
fn i_row(img: &Grid2, r: usize) -> &[f64] {
    &img.data[r * img.cols..(r + 1) * img.cols]
}

/// Separable symmetric-extension convolution with a 1D factor applied along
/// both axes (cols first, then rows).
pub fn conv2_sym_separable(img: &Grid2, taps: &[f64]) -> Grid2 {
    let half = taps.len() / 2;
    let mut tmp = Grid2::zeros(img.rows, img.cols);
    for i in 0..img.rows {
        let row = i_row(img, i);
        for j in 0..img.cols {
            let mut acc = 0.0;
            for (m, &h) in taps.iter().enumerate() {
                let jj = mirror(j as isize + half as isize - m as isize, img.cols);
                acc += h * row[jj];
            }
            *tmp.at_mut(i, j) = acc;
        }
    }
    let mut out = Grid2::zeros(img.rows, img.cols);
    for j in 0..img.cols {
        for i in 0..img.rows {
            let mut acc = 0.0;
            for (m, &h) in taps.iter().enumerate() {
                let ii = mirror(i as isize + half as isize - m as isize, img.rows);
                acc += h * tmp.at(ii, j);
            }
            *out.at_mut(i, j) = acc;
        }
    }
    out
}

fn ensure_finite(grid: &Grid2) -> Result<()> {
    if grid.data.iter().any(|v| !v.is_finite()) {
        return Err(VoxError::Argument("non-finite values in input grid".into()));
    }
    Ok(())
}

/// À-trous pyramid split: lowpass = smoothed input, bandpass = input −
/// lowpass (exact complement). Both keep the input dims.
pub fn nsp_split(slice: &Grid2, k: &NsctKernels) -> Result<(Grid2, Grid2)> {
    ensure_finite(slice)?;
    let lowpass = conv2_sym_separable(slice, &k.pyramid_factor);
    let bandpass = slice.sub(&lowpass);
    Ok((lowpass, bandpass))
}

/// Two-stage directional split of a bandpass grid into four orientation
/// wedges. Stage 1: W = bandpass ⊛ F1 and complement bandpass − W; stage 2
/// splits each via F2 and complement. The four outputs sum exactly to the
/// bandpass input.
pub fn nsdfb_split(bandpass: &Grid2, k: &NsctKernels) -> Result<[Grid2; 4]> {
    ensure_finite(bandpass)?;
    let w = conv2_sym(bandpass, &k.fan_level1);
    let w_c = bandpass.sub(&w);
    let d0 = conv2_sym(&w, &k.fan_level2);
    let d1 = w.sub(&d0);
    let d3 = conv2_sym(&w_c, &k.fan_level2);
    let d2 = w_c.sub(&d3);
    Ok([d0, d1, d2, d3])
}

/// Full per-slice analysis bundling both splits.
pub fn nsct_analyze(slice: &Grid2, k: &NsctKernels) -> Result<NsctSet> {
    let (lowpass, bandpass) = nsp_split(slice, k)?;
    let directions = nsdfb_split(&bandpass, k)?;
    Ok(NsctSet { lowpass, bandpass, directions })
}

/// Per-axial-slice directional high-frequency extraction; each of the four
/// outputs keeps the input geometry.
pub fn extract_hf(vol: &ScalarVolume, k: &NsctKernels) -> Result<[ScalarVolume; 4]> {
    if !vol.all_finite() {
        return Err(VoxError::Argument("non-finite values in volume".into()));
    }
    let nz = vol.geometry.dims[2];
    let mut out: [ScalarVolume; 4] = std::array::from_fn(|_| ScalarVolume {
        geometry: vol.geometry.clone(),
        data: vec![0.0; vol.data.len()],
    });
    for z in 0..nz {
        let dirs = nsdfb_split(&nsp_split(&vol.slice(z), k)?.1, k)?;
        for (d, grid) in dirs.iter().enumerate() {
            out[d].set_slice(z, grid);
        }
    }
    Ok(out)
}
