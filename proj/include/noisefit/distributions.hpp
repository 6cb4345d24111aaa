#pragma once

// Gamma, central-chi and noncentral-chi densities, quantiles, moments
// and samplers. Densities are evaluated in log space so large degrees
// of freedom and m/sigma ratios stay finite.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace noisefit::distributions {

using Rng = std::mt19937_64;

struct GammaParams {
    double alpha = 1.0; // shape; houses N and K*N
    double beta = 1.0;  // scale; 1 in the magnitude change of variable
};

struct NcChiParams {
    double eta = 0.0;     // noiseless signal
    double sigma_g = 1.0; // Gaussian component standard deviation
    double n_dof = 1.0;   // degrees of freedom, non-integer allowed
};

// True when n is close enough to a positive integer for the
// sum-of-squared-Gaussians sampler.
bool integer_dof(double n, long long* rounded = nullptr);

double gamma_pdf(double t, const GammaParams& params);
double gamma_log_pdf(double t, const GammaParams& params);
double gamma_cdf(double t, const GammaParams& params);
double gamma_icdf(const GammaParams& params, double p);

double central_chi_pdf(double m, double sigma_g, double n_dof);
double central_chi_log_pdf(double m, double sigma_g, double n_dof);

double ncchi_pdf(double m, const NcChiParams& params);
double ncchi_log_pdf(double m, const NcChiParams& params);

// E[m] = sigma_g * beta_N * 1F1(-1/2, N, -eta^2 / (2 sigma_g^2)).
double ncchi_mean(const NcChiParams& params);

// E[m^2] = eta^2 + 2 N sigma_g^2.
double ncchi_second_moment(const NcChiParams& params);

// i.i.d. noncentral-chi draws. Integer N uses the root-sum-of-squares
// of 2N Gaussian components; eta = 0 with non-integer N goes through
// t ~ Gamma(N, 1), m = sigma * sqrt(2 t). Non-integer N with eta > 0
// throws UnsupportedCombinationError.
std::vector<double> sample_ncchi(Rng& rng, const NcChiParams& params, std::size_t count);

} // namespace noisefit::distributions
