#pragma once

// Signal bias correction for noncentral-chi magnitude data, valid for
// non-integer degrees of freedom (half-Gaussian N = 0.5 included).
// Recovers eta from a first-moment estimate m_hat by fixed-point
// iteration on eta = sqrt(m_hat^2 + (xi(eta) - 2N) sigma^2).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "noisefit/volume.hpp"

namespace noisefit::bias {

// beta_N = sqrt(2) Gamma(N + 1/2) / Gamma(N); the eta = 0 magnitude
// mean in units of sigma.
double beta_n(double n_dof);

// Correction factor xi(eta | sigma_g, N)
//   = 2N + eta^2/sigma^2 - (beta_N 1F1(-1/2, N, -eta^2/(2 sigma^2)))^2.
double xi(double eta, double sigma_g, double n_dof);

struct EtaResult {
    double eta = 0.0;
    int iterations = 0;
    bool converged = false;
    bool clamped = false; // radicand went negative; eta pinned at the noise floor
};

// tolerance is relative to sigma_g: iteration stops once
// |eta_{k+1} - eta_k| < tolerance * sigma_g.
EtaResult correct_eta(double m_hat, double sigma_g, double n_dof,
                      double tolerance = 1e-6, int max_iterations = 500);

enum class Smoothing { none, box3 };

// sigma / N supplied either as a scalar or as a spatial field matching
// the volume's spatial dims (K = 1).
struct ScalarOrField {
    double scalar = 0.0;
    const Volume4D* field = nullptr;

    static ScalarOrField from_scalar(double v) { return {v, nullptr}; }
    static ScalarOrField from_field(const Volume4D& f) { return {0.0, &f}; }
    double at(std::size_t spatial_index) const {
        return field ? field->data[spatial_index] : scalar;
    }
};

struct CorrectionStats {
    std::size_t clamped = 0;
    std::size_t nonconverged = 0;
};

// Per voxel and volume index: m_hat = (optionally box-smoothed)
// magnitude, then eta via correct_eta. sigma = 0 passes values through
// unchanged.
Volume4D correct_volume(const Volume4D& volume, const ScalarOrField& sigma,
                        const ScalarOrField& n_dof, Smoothing smoothing,
                        CorrectionStats* stats = nullptr, int threads = 1);

// 3x3x3 boxcar mean of each volume, window clamped at borders.
Volume4D boxcar3(const Volume4D& volume);

} // namespace noisefit::bias
