//! Versioned filter-coefficient tables: the dual-tree wavelet filter pairs
//! and the contourlet kernels, shipped as a plain-text data file (one
//! coefficient per line, labeled sections) and parsed at startup.
//!
//! Level-1 trees share one 13/19 biorthogonal table pair; tree B applies it
//! one sample later (the offset lives in the decimation phase, so both
//! level-1 roles carry identical coefficients). Q-shift tree B is the time
//! reverse of tree A; synthesis filters are the time-reversed analysis
//! filters and are reconstructed by the loader.

use crate::error::{Result, VoxError};
use crate::nsct::{Kernel2, NsctKernels};

/// Embedded copy of the default data file.
pub const EMBEDDED_FILTERS: &str = include_str!("../data/filters-v1.txt");

/// Environment variable that overrides the filter data file path.
pub const FILTERS_ENV_VAR: &str = "VOXFREQ_FILTERS";

/// Tolerance for the coefficient-sum invariants.
pub const FILTER_SUM_TOL: f64 = 1e-8;

/// Which tree and stage a filter pair drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterStage {
    Level1TreeA,
    Level1TreeB,
    QshiftTreeA,
    QshiftTreeB,
}

/// Analysis (forward) or synthesis (inverse) side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDir {
    Analysis,
    Synthesis,
}

/// A lowpass/highpass filter pair with its role tag.
#[derive(Debug, Clone)]
pub struct FilterPair {
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
    pub stage: FilterStage,
    pub dir: FilterDir,
}

impl FilterPair {
    /// Lowpass must sum to √2 and highpass to 0, both within
    /// `FILTER_SUM_TOL`.
    pub fn validate(&self) -> Result<()> {
        let lo_sum: f64 = self.lowpass.iter().sum();
        if (lo_sum - std::f64::consts::SQRT_2).abs() > FILTER_SUM_TOL {
            return Err(VoxError::Format(format!(
                "{:?}/{:?} lowpass sums to {lo_sum}, expected sqrt(2)",
                self.stage, self.dir
            )));
        }
        let hi_sum: f64 = self.highpass.iter().sum();
        if hi_sum.abs() > FILTER_SUM_TOL {
            return Err(VoxError::Format(format!(
                "{:?}/{:?} highpass sums to {hi_sum}, expected 0",
                self.stage, self.dir
            )));
        }
        Ok(())
    }
}

/// All filter tables consumed by the dual-tree and contourlet transforms.
#[derive(Debug, Clone)]
pub struct FilterBank {
    /// Data-file version token (e.g. "v1").
    pub version: String,
    pub level1_analysis: FilterPair,
    pub level1_synthesis: FilterPair,
    pub qshift_a_analysis: FilterPair,
    pub qshift_b_analysis: FilterPair,
    pub qshift_a_synthesis: FilterPair,
    pub qshift_b_synthesis: FilterPair,
    pub nsct: NsctKernels,
}

impl FilterBank {
    /// Parses the embedded default tables.
    pub fn embedded() -> Result<FilterBank> {
        FilterBank::from_text(EMBEDDED_FILTERS)
    }

    /// Reads and parses a data file from disk.
    pub fn from_path(path: &std::path::Path) -> Result<FilterBank> {
        let text = std::fs::read_to_string(path)?;
        FilterBank::from_text(&text)
    }

    /// The level-1 analysis pair for either tree (identical tables; tree B
    /// differs only in decimation phase).
    pub fn level1_for_tree(&self, tree_b: bool) -> FilterPair {
        let mut p = self.level1_analysis.clone();
        p.stage = if tree_b { FilterStage::Level1TreeB } else { FilterStage::Level1TreeA };
        p
    }

    /// Parses the labeled-section plain-text format.
    pub fn from_text(text: &str) -> Result<FilterBank> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| VoxError::Format("empty filter data file".into()))?;
        let mut head = header.split_whitespace();
        if head.next() != Some("dtcwt-nsct-filters") {
            return Err(VoxError::Format(format!(
                "unrecognized filter data header: {header}"
            )));
        }
        let version = head
            .next()
            .ok_or_else(|| VoxError::Format("missing filter data version".into()))?
            .to_string();
        if version != "v1" {
            return Err(VoxError::Format(format!(
                "unsupported filter data version {version}"
            )));
        }

        // section name -> (shape, values)
        let mut sections: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::new();
        for (no, raw) in lines.enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') {
                let inner = line.trim_start_matches('[').trim_end_matches(']');
                let mut parts = inner.split_whitespace();
                let name = parts
                    .next()
                    .ok_or_else(|| VoxError::Format(format!("bad section header at line {}", no + 2)))?
                    .to_string();
                let shape: Vec<usize> = parts
                    .map(|p| {
                        p.parse::<usize>().map_err(|_| {
                            VoxError::Format(format!("bad section shape in [{inner}]"))
                        })
                    })
                    .collect::<Result<_>>()?;
                if shape.is_empty() || shape.len() > 2 {
                    return Err(VoxError::Format(format!(
                        "section [{name}] must declare 1 or 2 shape numbers"
                    )));
                }
                sections.push((name, shape, Vec::new()));
            } else {
                let v: f64 = line.parse().map_err(|_| {
                    VoxError::Format(format!("bad coefficient at line {}: {line}", no + 2))
                })?;
                sections
                    .last_mut()
                    .ok_or_else(|| {
                        VoxError::Format(format!("coefficient before any section at line {}", no + 2))
                    })?
                    .2
                    .push(v);
            }
        }

        let take = |name: &str| -> Result<(Vec<usize>, Vec<f64>)> {
            let (_, shape, vals) = sections
                .iter()
                .find(|(n, _, _)| n == name)
                .ok_or_else(|| VoxError::Format(format!("missing section [{name}]")))?;
            let expect: usize = shape.iter().product();
            if vals.len() != expect {
                return Err(VoxError::Format(format!(
                    "section [{name}] holds {} coefficients, header promises {expect}",
                    vals.len()
                )));
            }
            Ok((shape.clone(), vals.clone()))
        };
        let take1 = |name: &str| -> Result<Vec<f64>> {
            let (shape, vals) = take(name)?;
            if shape.len() != 1 {
                return Err(VoxError::Format(format!("section [{name}] must be 1-D")));
            }
            Ok(vals)
        };
        let take2 = |name: &str| -> Result<Kernel2> {
            let (shape, vals) = take(name)?;
            if shape.len() != 2 {
                return Err(VoxError::Format(format!("section [{name}] must be 2-D")));
            }
            Ok(Kernel2::new(shape[0], shape[1], vals))
        };

        let pair = |lo: Vec<f64>, hi: Vec<f64>, stage, dir| -> Result<FilterPair> {
            let p = FilterPair { lowpass: lo, highpass: hi, stage, dir };
            p.validate()?;
            Ok(p)
        };
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();

        let level1_analysis = pair(
            take1("level1-analysis-lowpass")?,
            take1("level1-analysis-highpass")?,
            FilterStage::Level1TreeA,
            FilterDir::Analysis,
        )?;
        let level1_synthesis = pair(
            take1("level1-synthesis-lowpass")?,
            take1("level1-synthesis-highpass")?,
            FilterStage::Level1TreeA,
            FilterDir::Synthesis,
        )?;
        let qshift_a_analysis = pair(
            take1("qshift-tree-a-analysis-lowpass")?,
            take1("qshift-tree-a-analysis-highpass")?,
            FilterStage::QshiftTreeA,
            FilterDir::Analysis,
        )?;
        let qshift_b_analysis = pair(
            take1("qshift-tree-b-analysis-lowpass")?,
            take1("qshift-tree-b-analysis-highpass")?,
            FilterStage::QshiftTreeB,
            FilterDir::Analysis,
        )?;
        let qshift_a_synthesis = pair(
            rev(&qshift_a_analysis.lowpass),
            rev(&qshift_a_analysis.highpass),
            FilterStage::QshiftTreeA,
            FilterDir::Synthesis,
        )?;
        let qshift_b_synthesis = pair(
            rev(&qshift_b_analysis.lowpass),
            rev(&qshift_b_analysis.highpass),
            FilterStage::QshiftTreeB,
            FilterDir::Synthesis,
        )?;

        let pyr1d = take1("nsct-pyramid-lowpass")?;
        let fan1 = take2("nsct-fan-level1")?;
        let fan2 = take2("nsct-fan-level2")?;
        let nsct = NsctKernels::new(pyr1d, fan1, fan2)?;

        Ok(FilterBank {
            version,
            level1_analysis,
            level1_synthesis,
            qshift_a_analysis,
            qshift_b_analysis,
            qshift_a_synthesis,
            qshift_b_synthesis,
            nsct,
        })
    }
}
