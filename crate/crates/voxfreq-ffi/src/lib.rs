//! C ABI over the voxfreq core: opaque handles, integer status codes, and a
//! thread-local last-error message.
//!
//! Conventions:
//! - Every function returning [`VxfStatus`] clears the thread's error slot
//!   on entry and fills it on failure; fetch it with [`vxf_last_error`].
//! - Out-parameters are written only on `VXF_STATUS_OK`.
//! - Objects returned through `*mut` out-parameters are owned by the caller
//!   and must be released with the matching `_free` function exactly once.
//! - All entry points catch panics; a panic reports `VXF_STATUS_PANIC`
//!   instead of unwinding across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use voxfreq::error::VoxError;
use voxfreq::filters::FilterBank;
use voxfreq::hyper::{init_std, lr_at, InitSpec, ScheduleSpec};
use voxfreq::metrics::{lesion_wise_scores, Connectivity, MetricConfig};
use voxfreq::nifti;
use voxfreq::prep::{zscore, NormMode};
use voxfreq::volgrid::{LabelSchema, ScalarVolume};

/// Result of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VxfStatus {
    /// Success.
    Ok = 0,
    /// File-system failure.
    IoError = 1,
    /// Invalid arguments, file contents, or incompatible inputs.
    InvalidInput = 2,
    /// The computation itself failed.
    ComputeError = 3,
    /// A required pointer argument was null.
    NullArgument = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Opaque filter-coefficient bank.
pub struct VxfFilterBank(FilterBank);

/// Opaque 3D scalar volume.
pub struct VxfVolume(ScalarVolume);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let cstr = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(cstr));
}

fn status_of(e: &VoxError) -> VxfStatus {
    match e.exit_code() {
        1 => VxfStatus::IoError,
        2 => VxfStatus::InvalidInput,
        _ => VxfStatus::ComputeError,
    }
}

/// Runs `f` with panic containment and error capture.
fn guarded(f: impl FnOnce() -> Result<(), VoxError>) -> VxfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VxfStatus::Ok,
        Ok(Err(err)) => {
            let status = status_of(&err);
            set_error(err.to_string());
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            VxfStatus::Panic
        }
    }
}

fn null_arg(name: &str) -> VxfStatus {
    set_error(format!("null argument: {name}"));
    VxfStatus::NullArgument
}

unsafe fn path_arg(ptr: *const c_char) -> Result<&'static Path, VoxError> {
    let s = CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| VoxError::Argument("path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

/// Message for the most recent failure on this thread, or null after a
/// success. The pointer stays valid until the next FFI call on the thread.
#[no_mangle]
pub extern "C" fn vxf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Builds the embedded filter bank.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vxf_filter_bank_embedded(out: *mut *mut VxfFilterBank) -> VxfStatus {
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        let bank = FilterBank::embedded()?;
        unsafe { *out = Box::into_raw(Box::new(VxfFilterBank(bank))) };
        Ok(())
    })
}

/// Loads a filter bank from a coefficient file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vxf_filter_bank_load(
    path: *const c_char,
    out: *mut *mut VxfFilterBank,
) -> VxfStatus {
    if path.is_null() {
        return null_arg("path");
    }
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        let bank = FilterBank::from_path(unsafe { path_arg(path) }?)?;
        unsafe { *out = Box::into_raw(Box::new(VxfFilterBank(bank))) };
        Ok(())
    })
}

/// Releases a filter bank. Null is ignored.
///
/// # Safety
/// `bank` must be a pointer produced by a `vxf_filter_bank_*` constructor,
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vxf_filter_bank_free(bank: *mut VxfFilterBank) {
    if !bank.is_null() {
        drop(unsafe { Box::from_raw(bank) });
    }
}

/// Reads a 3D scalar NIfTI volume.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vxf_volume_read(
    path: *const c_char,
    out: *mut *mut VxfVolume,
) -> VxfStatus {
    if path.is_null() {
        return null_arg("path");
    }
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        let vol = nifti::read_scalar(unsafe { path_arg(path) }?)?;
        unsafe { *out = Box::into_raw(Box::new(VxfVolume(vol))) };
        Ok(())
    })
}

/// Writes a volume as float32 NIfTI (gzip when the path ends in `.gz`).
///
/// # Safety
/// `path` must be a NUL-terminated string; `vol` must be a live volume
/// handle.
#[no_mangle]
pub unsafe extern "C" fn vxf_volume_write(path: *const c_char, vol: *const VxfVolume) -> VxfStatus {
    if path.is_null() {
        return null_arg("path");
    }
    if vol.is_null() {
        return null_arg("vol");
    }
    guarded(|| nifti::write_scalar(unsafe { path_arg(path) }?, unsafe { &(*vol).0 }))
}

/// Copies the volume's dims into `dims[0..3]`.
///
/// # Safety
/// `vol` must be a live volume handle; `dims` must point to three writable
/// `size_t`.
#[no_mangle]
pub unsafe extern "C" fn vxf_volume_dims(vol: *const VxfVolume, dims: *mut usize) -> VxfStatus {
    if vol.is_null() {
        return null_arg("vol");
    }
    if dims.is_null() {
        return null_arg("dims");
    }
    guarded(|| {
        let d = unsafe { &(*vol).0 }.geometry.dims;
        unsafe {
            *dims = d[0];
            *dims.add(1) = d[1];
            *dims.add(2) = d[2];
        }
        Ok(())
    })
}

/// Copies the voxel spacing (mm) into `spacing[0..3]`.
///
/// # Safety
/// `vol` must be a live volume handle; `spacing` must point to three
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vxf_volume_spacing(vol: *const VxfVolume, spacing: *mut f64) -> VxfStatus {
    if vol.is_null() {
        return null_arg("vol");
    }
    if spacing.is_null() {
        return null_arg("spacing");
    }
    guarded(|| {
        let s = unsafe { &(*vol).0 }.geometry.spacing;
        unsafe {
            *spacing = s[0];
            *spacing.add(1) = s[1];
            *spacing.add(2) = s[2];
        }
        Ok(())
    })
}

/// Number of voxels (product of dims).
///
/// # Safety
/// `vol` must be a live volume handle.
#[no_mangle]
pub unsafe extern "C" fn vxf_volume_voxel_count(vol: *const VxfVolume) -> usize {
    if vol.is_null() {
        return 0;
    }
    unsafe { &(*vol).0 }.data.len()
}

/// Borrowed pointer to the Fortran-ordered voxel data (x fastest). Valid
/// until the volume is freed; never null for a live handle.
///
/// # Safety
/// `vol` must be a live volume handle.
#[no_mangle]
pub unsafe extern "C" fn vxf_volume_data(vol: *const VxfVolume) -> *const f64 {
    if vol.is_null() {
        return std::ptr::null();
    }
    unsafe { &(*vol).0 }.data.as_ptr()
}

/// Releases a volume. Null is ignored.
///
/// # Safety
/// `vol` must be a pointer produced by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vxf_volume_free(vol: *mut VxfVolume) {
    if !vol.is_null() {
        drop(unsafe { Box::from_raw(vol) });
    }
}

/// Size-preserving low-frequency extraction (`levels` wavelet scales).
///
/// # Safety
/// `vol` and `bank` must be live handles; `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vxf_extract_lf(
    vol: *const VxfVolume,
    levels: usize,
    bank: *const VxfFilterBank,
    out: *mut *mut VxfVolume,
) -> VxfStatus {
    if vol.is_null() {
        return null_arg("vol");
    }
    if bank.is_null() {
        return null_arg("bank");
    }
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        let lf = voxfreq::dtcwt::extract_lf(unsafe { &(*vol).0 }, levels, unsafe { &(*bank).0 })?;
        unsafe { *out = Box::into_raw(Box::new(VxfVolume(lf))) };
        Ok(())
    })
}

/// One directional high-frequency channel; `direction` is 0..4.
///
/// # Safety
/// `vol` and `bank` must be live handles; `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vxf_extract_hf(
    vol: *const VxfVolume,
    direction: usize,
    bank: *const VxfFilterBank,
    out: *mut *mut VxfVolume,
) -> VxfStatus {
    if vol.is_null() {
        return null_arg("vol");
    }
    if bank.is_null() {
        return null_arg("bank");
    }
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        if direction >= 4 {
            return Err(VoxError::Argument(format!("direction {direction} outside 0..4")));
        }
        let hf = voxfreq::nsct::extract_hf(unsafe { &(*vol).0 }, &unsafe { &(*bank).0 }.nsct)?;
        let chan = hf.into_iter().nth(direction).unwrap();
        unsafe { *out = Box::into_raw(Box::new(VxfVolume(chan))) };
        Ok(())
    })
}

/// Z-score normalization; `nonzero_mask` nonzero normalizes over nonzero
/// voxels only.
///
/// # Safety
/// `vol` must be a live handle; `out` must point to writable storage for
/// one pointer.
#[no_mangle]
pub unsafe extern "C" fn vxf_zscore(
    vol: *const VxfVolume,
    nonzero_mask: i32,
    out: *mut *mut VxfVolume,
) -> VxfStatus {
    if vol.is_null() {
        return null_arg("vol");
    }
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        let mode = if nonzero_mask != 0 { NormMode::NonzeroMask } else { NormMode::AllVoxels };
        let z = zscore(unsafe { &(*vol).0 }, mode)?;
        unsafe { *out = Box::into_raw(Box::new(VxfVolume(z))) };
        Ok(())
    })
}

/// Polynomial learning-rate schedule value at `epoch`.
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn vxf_lr_at(
    lr_init: f64,
    max_epoch: usize,
    epoch: usize,
    out: *mut f64,
) -> VxfStatus {
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        let spec = ScheduleSpec { lr_init, max_epoch, ..ScheduleSpec::default() };
        let lr = lr_at(&spec, epoch)?;
        unsafe { *out = lr };
        Ok(())
    })
}

/// Closed-form initialization scale d^(-gamma).
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn vxf_init_std(d: usize, gamma: f64, out: *mut f64) -> VxfStatus {
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        let std = init_std(&InitSpec { d, gamma })?;
        unsafe { *out = std };
        Ok(())
    })
}

/// Scores `pred_path` against `ref_path` (ped2025 schema) and returns the
/// lesion-wise report as a JSON string. `connectivity` is 6, 18 or 26;
/// `whole_region_nsd` nonzero adds the whole-region NSD per region.
///
/// # Safety
/// `pred_path` and `ref_path` must be NUL-terminated strings; `out` must
/// point to writable storage for one pointer. Free the result with
/// [`vxf_string_free`].
#[no_mangle]
pub unsafe extern "C" fn vxf_eval_report_json(
    pred_path: *const c_char,
    ref_path: *const c_char,
    tau_mm: f64,
    match_dilation_voxels: usize,
    connectivity: u8,
    min_lesion_voxels: usize,
    whole_region_nsd: i32,
    out: *mut *mut c_char,
) -> VxfStatus {
    if pred_path.is_null() {
        return null_arg("pred_path");
    }
    if ref_path.is_null() {
        return null_arg("ref_path");
    }
    if out.is_null() {
        return null_arg("out");
    }
    guarded(|| {
        let schema = LabelSchema::ped2025();
        let cfg = MetricConfig {
            connectivity: Connectivity::from_u8(connectivity)?,
            match_dilation_voxels,
            tau_mm,
            min_lesion_voxels,
            whole_region_nsd: whole_region_nsd != 0,
        };
        let pred = nifti::read_labels(unsafe { path_arg(pred_path) }?, &schema)?;
        let reference = nifti::read_labels(unsafe { path_arg(ref_path) }?, &schema)?;
        let report = lesion_wise_scores(&reference, &pred, &schema, &cfg)?;
        let json = serde_json::to_string_pretty(&report).map_err(VoxError::from)?;
        let cstr = CString::new(json)
            .map_err(|_| VoxError::Structure("report contains a NUL byte".into()))?;
        unsafe { *out = cstr.into_raw() };
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from a `vxf_*` function documented to require
/// `vxf_string_free`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vxf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
