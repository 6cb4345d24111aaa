#pragma once

// Automatic identification of noise-only voxels, slice by slice. A grid
// of sigma candidates is scanned; for each candidate the voxels whose
// summed change-of-variable statistic falls inside the Gamma(K*N, 1)
// quantile interval are kept, the largest such mask wins, (sigma_g, N)
// are estimated from it, and the grid is refined around the estimate
// until both parameters settle.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "noisefit/estimators.hpp"
#include "noisefit/volume.hpp"

namespace noisefit::background {

enum class SliceAxis { x, y, z, automatic };

SliceAxis axis_from_name(const std::string& name);
std::string axis_name(SliceAxis axis);

// automatic resolves to the last spatial axis.
SliceAxis resolve_axis(SliceAxis axis);

struct IdentificationConfig {
    double p = 0.05;               // rejection level
    int grid_length = 50;          // l, initial sigma search grid
    double n_min = 1.0;
    double n_max = 12.0;
    int max_outer_iterations = 100;
    double relative_tolerance = 1e-4;
    SliceAxis slice_axis = SliceAxis::automatic;
    std::size_t min_background_voxels = 100;
    std::vector<std::size_t> exclude_volumes; // K indices dropped from the sums

    void validate() const;
};

struct SliceResult {
    std::size_t slice_index = 0;
    std::optional<estimators::EstimateResult> estimate;
    std::vector<std::uint8_t> mask; // per slice voxel, 1 = background
    std::size_t rejected_count = 0;
    int outer_iterations = 0;
    bool converged = false;
    std::string error; // non-empty when the slice yielded no estimate
};

// sigma_g_max = median / sqrt(2 icdf(N_max, 1/2)).
double sigma_upper_bound(double volume_median, double n_max);

// (lambda-, lambda+) = (icdf(K N, p/2), icdf(K N, 1 - p/2)) for the
// summed statistic over K volumes.
std::pair<double, double> selection_bounds(std::size_t k_volumes, double n_dof, double p);

// Marks voxels of one slice whose sum_k m_k^2 / (2 sigma^2) lies inside
// the selection bounds.
std::vector<std::uint8_t> select_background(const Volume4D& volume, std::size_t slice_index,
                                            SliceAxis axis, double sigma_candidate,
                                            double n_dof, double p);

double volume_median(const Volume4D& volume,
                     const std::vector<std::size_t>& exclude_volumes = {});

SliceResult identify_slice(const Volume4D& volume, std::size_t slice_index,
                           const IdentificationConfig& config, estimators::Method method,
                           std::optional<double> global_median = std::nullopt);

std::vector<SliceResult> identify_volume(const Volume4D& volume,
                                         const IdentificationConfig& config,
                                         estimators::Method method, int threads = 1);

} // namespace noisefit::background
