#ifndef VOXFREQ_H
#define VOXFREQ_H

/* Generated from the voxfreq-ffi Rust source. Regenerate with: cargo build -p voxfreq-ffi --features regen-header */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
enum VxfStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  // Success.
  VXF_STATUS_OK = 0,
  // File-system failure.
  VXF_STATUS_IO_ERROR = 1,
  // Invalid arguments, file contents, or incompatible inputs.
  VXF_STATUS_INVALID_INPUT = 2,
  // The computation itself failed.
  VXF_STATUS_COMPUTE_ERROR = 3,
  // A required pointer argument was null.
  VXF_STATUS_NULL_ARGUMENT = 4,
  // An internal panic was caught at the boundary.
  VXF_STATUS_PANIC = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum VxfStatus VxfStatus;
#else
typedef int32_t VxfStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque filter-coefficient bank.
typedef struct VxfFilterBank VxfFilterBank;

// Opaque 3D scalar volume.
typedef struct VxfVolume VxfVolume;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null after a
// success. The pointer stays valid until the next FFI call on the thread.
const char *vxf_last_error(void);

// Builds the embedded filter bank.
//
// # Safety
// `out` must point to writable storage for one pointer.
VxfStatus vxf_filter_bank_embedded(struct VxfFilterBank **out);

// Loads a filter bank from a coefficient file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must point to writable
// storage for one pointer.
VxfStatus vxf_filter_bank_load(const char *path, struct VxfFilterBank **out);

// Releases a filter bank. Null is ignored.
//
// # Safety
// `bank` must be a pointer produced by a `vxf_filter_bank_*` constructor,
// not yet freed.
void vxf_filter_bank_free(struct VxfFilterBank *bank);

// Reads a 3D scalar NIfTI volume.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must point to writable
// storage for one pointer.
VxfStatus vxf_volume_read(const char *path, struct VxfVolume **out);

// Writes a volume as float32 NIfTI (gzip when the path ends in `.gz`).
//
// # Safety
// `path` must be a NUL-terminated string; `vol` must be a live volume
// handle.
VxfStatus vxf_volume_write(const char *path, const struct VxfVolume *vol);

// Copies the volume's dims into `dims[0..3]`.
//
// # Safety
// `vol` must be a live volume handle; `dims` must point to three writable
// `size_t`.
VxfStatus vxf_volume_dims(const struct VxfVolume *vol, size_t *dims);

// Copies the voxel spacing (mm) into `spacing[0..3]`.
//
// # Safety
// `vol` must be a live volume handle; `spacing` must point to three
// writable doubles.
VxfStatus vxf_volume_spacing(const struct VxfVolume *vol, double *spacing);

// Number of voxels (product of dims).
//
// # Safety
// `vol` must be a live volume handle.
size_t vxf_volume_voxel_count(const struct VxfVolume *vol);

// Borrowed pointer to the Fortran-ordered voxel data (x fastest). Valid
// until the volume is freed; never null for a live handle.
//
// # Safety
// `vol` must be a live volume handle.
const double *vxf_volume_data(const struct VxfVolume *vol);

// Releases a volume. Null is ignored.
//
// # Safety
// `vol` must be a pointer produced by this library, not yet freed.
void vxf_volume_free(struct VxfVolume *vol);

// Size-preserving low-frequency extraction (`levels` wavelet scales).
//
// # Safety
// `vol` and `bank` must be live handles; `out` must point to writable
// storage for one pointer.
VxfStatus vxf_extract_lf(const struct VxfVolume *vol,
                         size_t levels,
                         const struct VxfFilterBank *bank,
                         struct VxfVolume **out);

// One directional high-frequency channel; `direction` is 0..4.
//
// # Safety
// `vol` and `bank` must be live handles; `out` must point to writable
// storage for one pointer.
VxfStatus vxf_extract_hf(const struct VxfVolume *vol,
                         size_t direction,
                         const struct VxfFilterBank *bank,
                         struct VxfVolume **out);

// Z-score normalization; `nonzero_mask` nonzero normalizes over nonzero
// voxels only.
//
// # Safety
// `vol` must be a live handle; `out` must point to writable storage for
// one pointer.
VxfStatus vxf_zscore(const struct VxfVolume *vol, int32_t nonzero_mask, struct VxfVolume **out);

// Polynomial learning-rate schedule value at `epoch`.
//
// # Safety
// `out` must point to one writable double.
VxfStatus vxf_lr_at(double lr_init, size_t max_epoch, size_t epoch, double *out);

// Closed-form initialization scale d^(-gamma).
//
// # Safety
// `out` must point to one writable double.
VxfStatus vxf_init_std(size_t d, double gamma, double *out);

// Scores `pred_path` against `ref_path` (ped2025 schema) and returns the
// lesion-wise report as a JSON string. `connectivity` is 6, 18 or 26;
// `whole_region_nsd` nonzero adds the whole-region NSD per region.
//
// # Safety
// `pred_path` and `ref_path` must be NUL-terminated strings; `out` must
// point to writable storage for one pointer. Free the result with
// [`vxf_string_free`].
VxfStatus vxf_eval_report_json(const char *pred_path,
                               const char *ref_path,
                               double tau_mm,
                               size_t match_dilation_voxels,
                               uint8_t connectivity,
                               size_t min_lesion_voxels,
                               int32_t whole_region_nsd,
                               char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from a `vxf_*` function documented to require
// `vxf_string_free`, not yet freed.
void vxf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VOXFREQ_H */
