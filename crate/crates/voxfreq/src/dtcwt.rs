//! Dual-tree complex wavelet transform over 2D slices.
//!
//! Two parallel real wavelet trees (A and B) run over both axes, giving four
//! tree combinations. Level 1 uses a 13/19 biorthogonal pair on both trees,
//! with tree B decimating one sample later; levels ≥ 2 use the quarter-shift
//! orthonormal pair, tree A carrying the larger group delay and tree B its
//! time reverse, which keeps the trees offset by half a sample at every
//! level's rate. The four real subband quartets mix unitarily into six
//! oriented complex subbands per level.
//!
//! Internally all filtering is circular with net group delays compensated by
//! rotation; inputs are mirror-padded up front to the next multiple of 2^J
//! (recorded in `pad_record`, cropped after the inverse), so round trips are
//! exact to machine precision for every input size.

use crate::error::{Result, VoxError};
use crate::filters::{FilterBank, FilterPair};
use crate::volgrid::{Grid2, ScalarVolume};

/// Circular rotation compensating the level-1 analysis+synthesis delay.
pub const LEVEL1_DELAY: usize = 15;
/// Circular rotation compensating the quarter-shift analysis+synthesis delay.
pub const QSHIFT_DELAY: usize = 13;

/// Round-trip tolerance relative to the input's max magnitude.
pub const PR_REL_TOL: f64 = 1e-8;

/// Approximate wavevector angles (degrees, from the +column axis toward the
/// +row axis) of the six oriented subbands, in storage order.
pub const ORIENTATION_ANGLES_DEG: [f64; 6] = [15.0, 45.0, 75.0, 105.0, 135.0, 165.0];

/// storage[i] = internal[STORAGE_FROM_INTERNAL[i]], where the internal
/// quartet-mix order is [LH z1, LH z2, HL z1, HL z2, HH z1, HH z2].
const STORAGE_FROM_INTERNAL: [usize; 6] = [3, 4, 1, 0, 5, 2];

/// One complex subband grid (split re/im planes).
#[derive(Debug, Clone)]
pub struct ComplexGrid {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexGrid { rows, cols, re: vec![0.0; rows * cols], im: vec![0.0; rows * cols] }
    }

    pub fn energy(&self) -> f64 {
        self.re.iter().map(|v| v * v).sum::<f64>() + self.im.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .fold(0.0f64, |m, (r, i)| m.max((r * r + i * i).sqrt()))
    }
}

/// Complete forward-transform output.
#[derive(Debug, Clone)]
pub struct SubbandSet {
    /// Decomposition depth J ≥ 1.
    pub levels: usize,
    /// Per level, six oriented complex subbands in `ORIENTATION_ANGLES_DEG`
    /// order; level ℓ grids have the padded dims halved ℓ times.
    pub oriented: Vec<Vec<ComplexGrid>>,
    /// Coarsest-scale real lowpass per tree combination (AA, AB, BA, BB).
    pub lowpass_residual: Vec<Grid2>,
    /// Input dims before padding (rows, cols).
    pub original_dims: (usize, usize),
    /// Rows/cols of mirror padding appended at the high end of each axis.
    pub pad_record: (usize, usize),
}

impl SubbandSet {
    /// Zeroes every oriented subband in place, keeping the lowpass residual.
    pub fn zero_oriented(&mut self) {
        for level in &mut self.oriented {
            for z in level {
                z.re.iter_mut().for_each(|v| *v = 0.0);
                z.im.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }

    fn padded_dims(&self) -> (usize, usize) {
        (self.original_dims.0 + self.pad_record.0, self.original_dims.1 + self.pad_record.1)
    }

    /// Dims consistency: six subbands per level following the halving law,
    /// and four residual grids at the coarsest dims.
    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 || self.oriented.len() != self.levels {
            return Err(VoxError::Structure(format!(
                "levels {} disagrees with {} oriented levels",
                self.levels,
                self.oriented.len()
            )));
        }
        let (pr, pc) = self.padded_dims();
        let m = 1usize << self.levels;
        if pr % m != 0 || pc % m != 0 {
            return Err(VoxError::Structure(format!(
                "padded dims {pr}x{pc} are not a multiple of 2^{}",
                self.levels
            )));
        }
        for (lev, bands) in self.oriented.iter().enumerate() {
            if bands.len() != 6 {
                return Err(VoxError::Structure(format!(
                    "level {} has {} subbands, expected 6",
                    lev + 1,
                    bands.len()
                )));
            }
            let want = (pr >> (lev + 1), pc >> (lev + 1));
            for z in bands {
                if (z.rows, z.cols) != want {
                    return Err(VoxError::Structure(format!(
                        "level {} subband is {}x{}, expected {}x{}",
                        lev + 1,
                        z.rows,
                        z.cols,
                        want.0,
                        want.1
                    )));
                }
                if z.re.len() != z.rows * z.cols || z.im.len() != z.rows * z.cols {
                    return Err(VoxError::Structure("subband plane length mismatch".into()));
                }
            }
        }
        if self.lowpass_residual.len() != 4 {
            return Err(VoxError::Structure(format!(
                "{} lowpass grids, expected 4",
                self.lowpass_residual.len()
            )));
        }
        let want = (pr >> self.levels, pc >> self.levels);
        for g in &self.lowpass_residual {
            if (g.rows, g.cols) != want {
                return Err(VoxError::Structure(format!(
                    "lowpass residual is {}x{}, expected {}x{}",
                    g.rows, g.cols, want.0, want.1
                )));
            }
        }
        Ok(())
    }
}

/// Per-tree filter selection for one transform level.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Tree {
    A,
    B,
}

impl Tree {
    /// Level-1 decimation phase: tree B samples one position later.
    fn phase(self) -> usize {
        match self {
            Tree::A => 0,
            Tree::B => 1,
        }
    }
}

const COMBOS: [(Tree, Tree); 4] = [
    (Tree::A, Tree::A),
    (Tree::A, Tree::B),
    (Tree::B, Tree::A),
    (Tree::B, Tree::B),
];

fn qshift_analysis(bank: &FilterBank, t: Tree) -> &FilterPair {
    match t {
        Tree::A => &bank.qshift_a_analysis,
        Tree::B => &bank.qshift_b_analysis,
    }
}

fn qshift_synthesis(bank: &FilterBank, t: Tree) -> &FilterPair {
    match t {
        Tree::A => &bank.qshift_a_synthesis,
        Tree::B => &bank.qshift_b_synthesis,
    }
}

/// y[k] = Σ_m h[m] · x[(2k + phase − m) mod N]
fn circ_analysis(x: &[f64], h: &[f64], phase: usize, out: &mut [f64]) {
    let n = x.len() as isize;
    for (k, o) in out.iter_mut().enumerate() {
        let base = 2 * k as isize + phase as isize;
        let mut acc = 0.0;
        for (m, &hm) in h.iter().enumerate() {
            acc += hm * x[(base - m as isize).rem_euclid(n) as usize];
        }
        *o = acc;
    }
}

/// x[(2k + phase + m) mod N] += f0[m]·y0[k] + f1[m]·y1[k]
fn circ_synthesis(y0: &[f64], y1: &[f64], f0: &[f64], f1: &[f64], phase: usize, out: &mut [f64]) {
    let n = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..y0.len() {
        let base = 2 * k + phase;
        for (m, &fm) in f0.iter().enumerate() {
            out[(base + m) % n] += fm * y0[k];
        }
        for (m, &fm) in f1.iter().enumerate() {
            out[(base + m) % n] += fm * y1[k];
        }
    }
}

fn roll_back(x: &mut Vec<f64>, delay: usize) {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        *o = x[(i + delay) % n];
    }
    *x = out;
}

struct LevelBands {
    lh: Grid2,
    hl: Grid2,
    hh: Grid2,
}

/// One separable analysis level: axis 1 (within rows) first, then axis 0.
fn analysis_level(
    cur: &Grid2,
    lo1: &[f64],
    hi1: &[f64],
    phase1: usize,
    lo0: &[f64],
    hi0: &[f64],
    phase0: usize,
) -> (Grid2, LevelBands) {
    let (rows, cols) = (cur.rows, cur.cols);
    let (hr, hc) = (rows / 2, cols / 2);
    let mut rows_lo = Grid2::zeros(rows, hc);
    let mut rows_hi = Grid2::zeros(rows, hc);
    for r in 0..rows {
        let sig = cur.row(r);
        circ_analysis(sig, lo1, phase1, &mut rows_lo.data[r * hc..(r + 1) * hc]);
        circ_analysis(sig, hi1, phase1, &mut rows_hi.data[r * hc..(r + 1) * hc]);
    }
    let mut ll = Grid2::zeros(hr, hc);
    let mut lh = Grid2::zeros(hr, hc);
    let mut hl = Grid2::zeros(hr, hc);
    let mut hh = Grid2::zeros(hr, hc);
    let mut col = vec![0.0; rows];
    let mut half = vec![0.0; hr];
    for c in 0..hc {
        rows_lo.col_into(c, &mut col);
        circ_analysis(&col, lo0, phase0, &mut half);
        ll.set_col(c, &half);
        circ_analysis(&col, hi0, phase0, &mut half);
        lh.set_col(c, &half);
        rows_hi.col_into(c, &mut col);
        circ_analysis(&col, lo0, phase0, &mut half);
        hl.set_col(c, &half);
        circ_analysis(&col, hi0, phase0, &mut half);
        hh.set_col(c, &half);
    }
    (ll, LevelBands { lh, hl, hh })
}

/// One separable synthesis level mirroring `analysis_level`: axis 0 first,
/// then axis 1, rotating each axis back by the level's net delay.
#[allow(clippy::too_many_arguments)]
fn synthesis_level(
    ll: &Grid2,
    bands: &LevelBands,
    lo1: &[f64],
    hi1: &[f64],
    phase1: usize,
    lo0: &[f64],
    hi0: &[f64],
    phase0: usize,
    delay: usize,
) -> Grid2 {
    let (hr, hc) = (ll.rows, ll.cols);
    let (rows, cols) = (hr * 2, hc * 2);
    let mut lo_cols = Grid2::zeros(rows, hc);
    let mut hi_cols = Grid2::zeros(rows, hc);
    let mut c0 = vec![0.0; hr];
    let mut c1 = vec![0.0; hr];
    let mut full = vec![0.0; rows];
    for c in 0..hc {
        ll.col_into(c, &mut c0);
        bands.lh.col_into(c, &mut c1);
        circ_synthesis(&c0, &c1, lo0, hi0, phase0, &mut full);
        roll_back(&mut full, delay);
        lo_cols.set_col(c, &full);
        bands.hl.col_into(c, &mut c0);
        bands.hh.col_into(c, &mut c1);
        circ_synthesis(&c0, &c1, lo0, hi0, phase0, &mut full);
        roll_back(&mut full, delay);
        hi_cols.set_col(c, &full);
    }
    let mut out = Grid2::zeros(rows, cols);
    let mut line = vec![0.0; cols];
    for r in 0..rows {
        circ_synthesis(lo_cols.row(r), hi_cols.row(r), lo1, hi1, phase1, &mut line);
        roll_back(&mut line, delay);
        out.data[r * cols..(r + 1) * cols].copy_from_slice(&line);
    }
    out
}

struct TreeOutput {
    bands: Vec<LevelBands>,
    lowpass: Grid2,
}

/// Full J-level analysis for one tree combination (tree0 filters axis 0,
/// tree1 filters axis 1).
fn tree_forward(x: &Grid2, levels: usize, tree0: Tree, tree1: Tree, bank: &FilterBank) -> TreeOutput {
    let mut cur = x.clone();
    let mut bands = Vec::with_capacity(levels);
    for lev in 1..=levels {
        let (ll, b) = if lev == 1 {
            let p = &bank.level1_analysis;
            analysis_level(
                &cur,
                &p.lowpass,
                &p.highpass,
                tree1.phase(),
                &p.lowpass,
                &p.highpass,
                tree0.phase(),
            )
        } else {
            let p1 = qshift_analysis(bank, tree1);
            let p0 = qshift_analysis(bank, tree0);
            analysis_level(&cur, &p1.lowpass, &p1.highpass, 0, &p0.lowpass, &p0.highpass, 0)
        };
        bands.push(b);
        cur = ll;
    }
    TreeOutput { bands, lowpass: cur }
}

fn tree_inverse(t: &TreeOutput, tree0: Tree, tree1: Tree, bank: &FilterBank) -> Grid2 {
    let mut cur = t.lowpass.clone();
    for lev in (1..=t.bands.len()).rev() {
        let b = &t.bands[lev - 1];
        cur = if lev == 1 {
            let p = &bank.level1_synthesis;
            synthesis_level(
                &cur,
                b,
                &p.lowpass,
                &p.highpass,
                tree1.phase(),
                &p.lowpass,
                &p.highpass,
                tree0.phase(),
                LEVEL1_DELAY,
            )
        } else {
            let p1 = qshift_synthesis(bank, tree1);
            let p0 = qshift_synthesis(bank, tree0);
            synthesis_level(
                &cur,
                b,
                &p1.lowpass,
                &p1.highpass,
                0,
                &p0.lowpass,
                &p0.highpass,
                0,
                QSHIFT_DELAY,
            )
        };
    }
    cur
}

/// Mirror-pads (half-sample symmetric, high end) to the next multiple of 2^J.
fn pad_to_multiple(x: &Grid2, levels: usize) -> (Grid2, (usize, usize)) {
    let m = 1usize << levels;
    let pr = (m - x.rows % m) % m;
    let pc = (m - x.cols % m) % m;
    if pr == 0 && pc == 0 {
        return (x.clone(), (0, 0));
    }
    let (rows, cols) = (x.rows + pr, x.cols + pc);
    let mut out = Grid2::zeros(rows, cols);
    for r in 0..rows {
        let sr = mirror_idx(r, x.rows);
        for c in 0..cols {
            *out.at_mut(r, c) = x.at(sr, mirror_idx(c, x.cols));
        }
    }
    (out, (pr, pc))
}

#[inline]
fn mirror_idx(i: usize, n: usize) -> usize {
    let period = 2 * n;
    let m = i % period;
    if m < n {
        m
    } else {
        period - 1 - m
    }
}

/// Unitary quartet-to-complex mix:
/// z1 = ((aa − bb) + i(ab + ba))/√2, z2 = ((aa + bb) + i(ab − ba))/√2.
fn q2c(aa: &Grid2, ab: &Grid2, ba: &Grid2, bb: &Grid2) -> (ComplexGrid, ComplexGrid) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (rows, cols) = (aa.rows, aa.cols);
    let mut z1 = ComplexGrid::zeros(rows, cols);
    let mut z2 = ComplexGrid::zeros(rows, cols);
    for i in 0..rows * cols {
        let (a, b, c, d) = (aa.data[i], ab.data[i], ba.data[i], bb.data[i]);
        z1.re[i] = (a - d) * s;
        z1.im[i] = (b + c) * s;
        z2.re[i] = (a + d) * s;
        z2.im[i] = (b - c) * s;
    }
    (z1, z2)
}

/// Inverse of `q2c`.
fn c2q(z1: &ComplexGrid, z2: &ComplexGrid) -> (Grid2, Grid2, Grid2, Grid2) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (rows, cols) = (z1.rows, z1.cols);
    let mut aa = Grid2::zeros(rows, cols);
    let mut ab = Grid2::zeros(rows, cols);
    let mut ba = Grid2::zeros(rows, cols);
    let mut bb = Grid2::zeros(rows, cols);
    for i in 0..rows * cols {
        aa.data[i] = (z1.re[i] + z2.re[i]) * s;
        bb.data[i] = (z2.re[i] - z1.re[i]) * s;
        ab.data[i] = (z1.im[i] + z2.im[i]) * s;
        ba.data[i] = (z1.im[i] - z2.im[i]) * s;
    }
    (aa, ab, ba, bb)
}

/// Forward transform of one 2D slice.
pub fn dtcwt_forward(slice: &Grid2, levels: usize, bank: &FilterBank) -> Result<SubbandSet> {
    if levels < 1 {
        return Err(VoxError::Argument(format!("levels must be >= 1, got {levels}")));
    }
    if slice.rows == 0 || slice.cols == 0 {
        return Err(VoxError::Argument(format!(
            "degenerate grid {}x{}",
            slice.rows, slice.cols
        )));
    }
    let (padded, pad_record) = pad_to_multiple(slice, levels);
    let trees: Vec<TreeOutput> = COMBOS
        .iter()
        .map(|&(t0, t1)| tree_forward(&padded, levels, t0, t1, bank))
        .collect();

    // tight-frame normalisation over the four trees
    let mut oriented = Vec::with_capacity(levels);
    for lev in 0..levels {
        let scaled: Vec<LevelBands> = trees
            .iter()
            .map(|t| {
                let b = &t.bands[lev];
                let half = |g: &Grid2| Grid2 {
                    rows: g.rows,
                    cols: g.cols,
                    data: g.data.iter().map(|v| v * 0.5).collect(),
                };
                LevelBands { lh: half(&b.lh), hl: half(&b.hl), hh: half(&b.hh) }
            })
            .collect();
        let mut internal = Vec::with_capacity(6);
        for pick in [
            |b: &LevelBands| b.lh.clone(),
            |b: &LevelBands| b.hl.clone(),
            |b: &LevelBands| b.hh.clone(),
        ] {
            let (z1, z2) = q2c(&pick(&scaled[0]), &pick(&scaled[1]), &pick(&scaled[2]), &pick(&scaled[3]));
            internal.push(z1);
            internal.push(z2);
        }
        let stored: Vec<ComplexGrid> = STORAGE_FROM_INTERNAL
            .iter()
            .map(|&i| internal[i].clone())
            .collect();
        oriented.push(stored);
    }
    let lowpass_residual: Vec<Grid2> = trees
        .iter()
        .map(|t| Grid2 {
            rows: t.lowpass.rows,
            cols: t.lowpass.cols,
            data: t.lowpass.data.iter().map(|v| v * 0.5).collect(),
        })
        .collect();

    let set = SubbandSet {
        levels,
        oriented,
        lowpass_residual,
        original_dims: (slice.rows, slice.cols),
        pad_record,
    };
    debug_assert!(set.validate().is_ok());
    Ok(set)
}

/// Inverse transform back to a 2D slice of `original_dims`.
pub fn dtcwt_inverse(s: &SubbandSet, bank: &FilterBank) -> Result<Grid2> {
    s.validate()?;
    // undo the unitary mix back into the four trees
    let mut tree_bands: Vec<Vec<LevelBands>> = (0..4).map(|_| Vec::with_capacity(s.levels)).collect();
    for bands in &s.oriented {
        let mut internal: Vec<&ComplexGrid> = vec![&bands[0]; 6];
        for (stored, &int_idx) in STORAGE_FROM_INTERNAL.iter().enumerate() {
            internal[int_idx] = &bands[stored];
        }
        let (lh_q, hl_q, hh_q) = (
            c2q(internal[0], internal[1]),
            c2q(internal[2], internal[3]),
            c2q(internal[4], internal[5]),
        );
        let quartets = [lh_q, hl_q, hh_q];
        for (tree, per_level) in tree_bands.iter_mut().enumerate() {
            let grab = |q: &(Grid2, Grid2, Grid2, Grid2)| match tree {
                0 => q.0.clone(),
                1 => q.1.clone(),
                2 => q.2.clone(),
                _ => q.3.clone(),
            };
            per_level.push(LevelBands {
                lh: grab(&quartets[0]),
                hl: grab(&quartets[1]),
                hh: grab(&quartets[2]),
            });
        }
    }

    let (rows, cols) = (
        s.original_dims.0 + s.pad_record.0,
        s.original_dims.1 + s.pad_record.1,
    );
    let mut acc = Grid2::zeros(rows, cols);
    for (tree, &(t0, t1)) in COMBOS.iter().enumerate() {
        let out = TreeOutput {
            bands: std::mem::take(&mut tree_bands[tree]),
            lowpass: s.lowpass_residual[tree].clone(),
        };
        let rec = tree_inverse(&out, t0, t1, bank);
        for (a, b) in acc.data.iter_mut().zip(&rec.data) {
            *a += b;
        }
    }
    // forward scaled by 1/2; summing four trees needs another 1/2
    acc.data.iter_mut().for_each(|v| *v *= 0.5);

    let (or, oc) = s.original_dims;
    let mut out = Grid2::zeros(or, oc);
    for r in 0..or {
        out.data[r * oc..(r + 1) * oc].copy_from_slice(&acc.data[r * cols..r * cols + oc]);
    }
    Ok(out)
}

/// Per-axial-slice low-frequency extraction: forward J levels, zero all
/// oriented subbands, inverse. Output geometry is identical to the input.
pub fn extract_lf(vol: &ScalarVolume, levels: usize, bank: &FilterBank) -> Result<ScalarVolume> {
    if !vol.all_finite() {
        return Err(VoxError::Argument("non-finite values in volume".into()));
    }
    let mut out = ScalarVolume { geometry: vol.geometry.clone(), data: vec![0.0; vol.data.len()] };
    for z in 0..vol.geometry.dims[2] {
        let mut set = dtcwt_forward(&vol.slice(z), levels, bank)?;
        set.zero_oriented();
        out.set_slice(z, &dtcwt_inverse(&set, bank)?);
    }
    Ok(out)
}
