#pragma once

// Minimal NIfTI-1 reader/writer (.nii, .nii.gz, .hdr/.img pairs), a raw
// float32 + JSON sidecar fallback, and JSON/CSV result reports.
// Honored header fields: dim, datatype, bitpix, pixdim, scl_slope/inter,
// vox_offset, magic. Extensions are skipped; the remaining header bytes
// (orientation, affine) are carried opaquely and echoed on write.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "noisefit/volume.hpp"

namespace noisefit::io {

// Accepts .nii / .nii.gz / .hdr (NIfTI-1, either byte order) and
// .raw with a {shape, voxel_dims} JSON sidecar. 3D inputs are promoted
// to K = 1. Values are mapped through scl_slope/scl_inter; non-finite
// samples are a load error and negative samples clamp to zero.
Volume4D read_volume(const std::string& path);

// Format chosen from the extension: .raw writes raw f32 + sidecar,
// anything else NIfTI-1 (gzip when the path ends in .gz).
void write_volume(const Volume4D& volume, const std::string& path, Dtype dtype = Dtype::f32);

struct SliceRecord {
    std::size_t slice_index = 0;
    double sigma = 0.0;
    double n_dof = 0.0;
    std::size_t voxel_count = 0;
    bool converged = false;
    std::string method;
    std::string error; // non-empty when the slice failed
};

enum class ReportFormat { json, csv };

ReportFormat report_format_for_path(const std::string& path);

// JSON: {"metadata": ..., "results": [...]}. CSV: fixed header
// slice_index,sigma,n_dof,voxel_count,converged,method.
void write_report(const std::vector<SliceRecord>& records, const nlohmann::json& metadata,
                  const std::string& path, ReportFormat format);

nlohmann::json report_to_json(const std::vector<SliceRecord>& records,
                              const nlohmann::json& metadata);

std::vector<SliceRecord> read_report(const std::string& path);

} // namespace noisefit::io
