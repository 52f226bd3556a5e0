//! Volumetric frequency decomposition and segmentation evaluation for
//! multi-modal brain MRI.
//!
//! The library covers the numerical core of a frequency-aware segmentation
//! ensemble workflow:
//!
//! - [`volgrid`]: voxel geometry, scalar/label volumes, masks, and the
//!   pediatric label schema with its composite regions.
//! - [`filters`]: the embedded dual-tree wavelet and directional filter
//!   coefficient tables, with validation and file overrides.
//! - [`dtcwt`]: slice-wise dual-tree complex wavelet transform, its inverse,
//!   and size-preserving low-frequency extraction.
//! - [`nsct`]: undecimated pyramid/fan-filter decomposition producing four
//!   directional high-frequency channels per slice.
//! - [`prep`]: z-score normalization, patch extraction, and the per-case
//!   4-modality to 20-channel decomposition.
//! - [`hyper`]: closed-form initialization scales, seeded Gaussian sampling,
//!   and the polynomial learning-rate schedule.
//! - [`fuse`]: weighted probability fusion and argmax label conversion.
//! - [`metrics`]: lesion-wise Dice/NSD scoring with connected-component
//!   matching.
//! - [`nifti`]: single-file little-endian NIfTI-1 I/O (uint8/int16/float32,
//!   gzip or plain, 3D and 4D).
//! - [`manifest`]: per-run reproducibility records with content digests.

pub mod dtcwt;
pub mod error;
pub mod filters;
pub mod fuse;
pub mod hyper;
pub mod manifest;
pub mod metrics;
pub mod nifti;
pub mod nsct;
pub mod prep;
pub mod volgrid;

pub use error::{Result, VoxError};
pub use filters::FilterBank;
pub use volgrid::{
    BinaryMask, Grid2, LabelSchema, LabelVolume, ScalarVolume, VoxelGeometry,
};
