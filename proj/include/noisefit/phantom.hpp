#pragma once

// Synthetic ground-truth generator: noiseless signal + noncentral-chi
// noise with a stationary or radially ramped spatial profile tau, plus
// the percentage-error metric used to score estimates against truth.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisefit/background_id.hpp"
#include "noisefit/volume.hpp"

namespace noisefit::phantom {

enum class TauProfile { stationary, sphere_ramp };

TauProfile tau_from_name(const std::string& name);
std::string tau_name(TauProfile profile);

struct SignalModel {
    enum class Kind { uniform, sphere, imported };
    Kind kind = Kind::uniform;
    double value = 0.0;                          // uniform
    double inside_value = 0.0, outside_value = 0.0; // sphere
    double radius_fraction = 0.35;               // sphere radius / min(shape)
    Volume4D imported;                           // 3D template, replicated over K

    static SignalModel uniform(double v);
    static SignalModel sphere(double inside, double outside, double radius_fraction = 0.35);
    static SignalModel from_volume(Volume4D v);
};

struct PhantomSpec {
    std::array<std::size_t, 3> shape{32, 32, 16};
    std::size_t k_volumes = 33;
    SignalModel signal;
    double snr = 30.0;
    // Explicit sigma_g; required for pure-noise phantoms where the mean
    // signal (and hence sigma from SNR) is undefined. 0 = derive from SNR.
    double sigma = 0.0;
    double n_dof = 1.0;
    TauProfile tau = TauProfile::stationary;
    double tau_center = 1.0;
    double tau_edge = 1.75;
    std::uint64_t seed = 0;
};

struct PhantomOutput {
    Volume4D noisy;
    Volume4D noiseless;
    Volume4D sigma_true; // K = 1, sigma_g * tau voxelwise
    double n_true = 1.0;
    std::vector<std::uint8_t> object_mask; // signal > 0
    double sigma_g = 0.0;                  // base value before tau
    double mean_signal = 0.0;
};

// sigma_g = mean_signal / snr.
double sigma_from_snr(double mean_signal, double snr);

PhantomOutput generate(const PhantomSpec& spec, int threads = 1);

struct ErrorSummary {
    std::vector<double> errors; // percent, per voxel or per slice
    std::size_t skipped = 0;    // slices/voxels without a usable estimate
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
    double mean_abs = 0.0;
};

// Voxelwise percentage error 100 (est - true) / true inside the mask
// (empty mask = everywhere).
ErrorSummary evaluate_field(const Volume4D& estimated, const Volume4D& truth,
                            const std::vector<std::uint8_t>& mask = {});

// Slicewise: each estimate is scored against the mean of the true field
// over that slice (restricted to the mask when given). NaN estimates
// (failed slices) are skipped and counted.
ErrorSummary evaluate_slicewise(std::span<const double> slice_estimates, const Volume4D& truth,
                                const std::vector<std::uint8_t>& mask = {},
                                background::SliceAxis axis = background::SliceAxis::automatic);

} // namespace noisefit::phantom
