#pragma once

// Voxelwise (sigma_g, N) fields from acquired noise-only maps, estimated
// over small local windows (3x3x3 by default) that shrink at borders.

#include <array>
#include <cstdint>
#include <vector>

#include "noisefit/estimators.hpp"
#include "noisefit/volume.hpp"

namespace noisefit::localmaps {

struct NoiseField {
    std::array<std::size_t, 3> dim{0, 0, 0};
    std::array<int, 3> window{3, 3, 3};
    std::vector<double> sigma; // NaN where invalid
    std::vector<double> n_dof; // NaN where invalid
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return dim[0] * dim[1] * dim[2]; }
};

NoiseField estimate_field(const Volume4D& noise_maps, std::array<int, 3> window,
                          estimators::Method method, int threads = 1);

struct SummaryStats {
    double median = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double p5 = 0.0;
    double p95 = 0.0;
};

struct FieldSummary {
    std::size_t valid_count = 0;
    SummaryStats sigma;
    SummaryStats n_dof;
};

// Statistics over valid voxels inside the region mask (empty mask =
// whole field). Throws when no valid voxel is selected.
FieldSummary field_summary(const NoiseField& field,
                           const std::vector<std::uint8_t>& region_mask = {});

SummaryStats summarize(std::vector<double> values);

} // namespace noisefit::localmaps
