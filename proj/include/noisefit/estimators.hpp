#pragma once

// Method-of-moments and maximum-likelihood estimation of (sigma_g, N)
// from noise-only magnitude samples, through the change of variable
// t = m^2 / (2 sigma_g^2) ~ Gamma(N, 1).

#include <cstddef>
#include <span>
#include <string>

namespace noisefit::estimators {

enum class Method { moments, maximum_likelihood };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Neumaier compensated accumulator; V can reach 1e6 and m^4 spans many
// orders of magnitude.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

// Compensated power/log sums of a sample set. Zero-valued samples are
// kept in the power sums but excluded from the log moment.
struct SampleStats {
    std::size_t count = 0;      // V
    std::size_t zero_count = 0; // samples with m = 0
    double sum_sq = 0.0;        // sum of m^2
    double sum_quad = 0.0;      // sum of m^4
    double sum_log_sq = 0.0;    // sum over m > 0 of log(m^2)
    double mean = 0.0;
    double sd = 0.0; // sample standard deviation (V - 1 denominator)

    double mean_log_sq() const;
};

SampleStats compute_stats(std::span<const double> samples);

struct EstimateResult {
    double sigma_g = 0.0;
    double n_dof = 0.0;
    Method method = Method::moments;
    int iterations = 0;
    bool converged = false;
    std::size_t zero_count = 0;
};

// sigma_g = sqrt((sum m^4 / sum m^2 - sum m^2 / V) / 2).
// Throws DegenerateSampleError when the radicand is not positive.
double sigma_from_moments(const SampleStats& stats);

// N = sum m^2 / (2 V sigma_g^2).
double n_from_mean(const SampleStats& stats, double sigma_g);

// The implicit maximum-likelihood equation for sigma_g,
//   f(sigma) = psi(sum m^2 / (2 V sigma^2)) - mean log(m^2) + log(2 sigma^2),
// with its analytic derivative
//   f'(sigma) = -psi'(u) sum m^2 / (V sigma^3) + 2 / sigma,  u as above.
// f is evaluated through psi(u) - log(u) so Newton steps resolve below
// 1e-13 in absolute terms.
struct SigmaMlEquation {
    double sum_sq = 0.0;
    double mean_log_sq = 0.0;
    std::size_t count = 0;

    explicit SigmaMlEquation(const SampleStats& stats);
    SigmaMlEquation(double sum_sq_, double mean_log_sq_, std::size_t count_)
        : sum_sq(sum_sq_), mean_log_sq(mean_log_sq_), count(count_) {}

    double shape_at(double sigma) const; // u = sum m^2 / (2 V sigma^2)
    double f(double sigma) const;
    double df(double sigma) const;
};

struct NewtonResult {
    double root = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Newton on f(sigma) with bisection safeguarding, started at sigma0
// (the sample standard deviation of the magnitudes). Stops once
// |x_n - x_{n-1}| < 1e-13 or after 100 iterations.
NewtonResult sigma_from_ml(const SampleStats& stats, double sigma0);

// Solves psi(N) = mean log(m^2 / (2 sigma_g^2)) by safeguarded Newton
// with f'(N) = psi'(N), started at the Minka digamma-inverse estimate.
NewtonResult n_from_ml(const SampleStats& stats, double sigma_g);

// Starting estimate for psi^-1(y):
//   exp(y) + 1/2     if y >= -2.22
//   -1/(y + psi(1))  otherwise
double minka_digamma_inverse(double y);

EstimateResult estimate(std::span<const double> samples, Method method);
EstimateResult estimate(const SampleStats& stats, Method method);

} // namespace noisefit::estimators
