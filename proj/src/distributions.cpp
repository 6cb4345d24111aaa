#include "noisefit/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "noisefit/errors.hpp"
#include "noisefit/specfun.hpp"

namespace noisefit::distributions {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check(const NcChiParams& p) {
    if (!(p.eta >= 0.0)) throw std::domain_error("ncchi: requires eta >= 0");
    if (!(p.sigma_g > 0.0)) throw std::domain_error("ncchi: requires sigma_g > 0");
    if (!(p.n_dof > 0.0)) throw std::domain_error("ncchi: requires n_dof > 0");
}

} // namespace

bool integer_dof(double n, long long* rounded) {
    const double r = std::round(n);
    if (rounded) *rounded = static_cast<long long>(r);
    return r >= 1.0 && std::fabs(n - r) <= 1e-9;
}

double gamma_log_pdf(double t, const GammaParams& params) {
    if (!(params.alpha > 0.0) || !(params.beta > 0.0))
        throw std::domain_error("gamma_pdf: requires alpha, beta > 0");
    if (!(t > 0.0)) throw std::domain_error("gamma_pdf: requires t > 0");
    return (params.alpha - 1.0) * std::log(t) - t / params.beta -
           specfun::ln_gamma(params.alpha) - params.alpha * std::log(params.beta);
}

double gamma_pdf(double t, const GammaParams& params) {
    return std::exp(gamma_log_pdf(t, params));
}

double gamma_cdf(double t, const GammaParams& params) {
    if (!(params.alpha > 0.0) || !(params.beta > 0.0))
        throw std::domain_error("gamma_cdf: requires alpha, beta > 0");
    if (t <= 0.0) return 0.0;
    return specfun::reg_inc_gamma_p(params.alpha, t / params.beta);
}

double gamma_icdf(const GammaParams& params, double p) {
    if (!(params.alpha > 0.0) || !(params.beta > 0.0))
        throw std::domain_error("gamma_icdf: requires alpha, beta > 0");
    return params.beta * specfun::inv_reg_inc_gamma_p(params.alpha, p);
}

double central_chi_log_pdf(double m, double sigma_g, double n_dof) {
    if (!(sigma_g > 0.0) || !(n_dof > 0.0))
        throw std::domain_error("central_chi_pdf: requires sigma_g, n_dof > 0");
    if (!(m >= 0.0)) throw std::domain_error("central_chi_pdf: requires m >= 0");
    if (m == 0.0) {
        if (n_dof > 0.5) return -kInf;
        if (n_dof == 0.5) return 0.5 * std::log(2.0 / M_PI) - std::log(sigma_g);
        return kInf;
    }
    return (2.0 * n_dof - 1.0) * std::log(m) - (n_dof - 1.0) * std::log(2.0) -
           2.0 * n_dof * std::log(sigma_g) - specfun::ln_gamma(n_dof) -
           m * m / (2.0 * sigma_g * sigma_g);
}

double central_chi_pdf(double m, double sigma_g, double n_dof) {
    return std::exp(central_chi_log_pdf(m, sigma_g, n_dof));
}

double ncchi_log_pdf(double m, const NcChiParams& p) {
    check(p);
    if (!(m >= 0.0)) throw std::domain_error("ncchi_pdf: requires m >= 0");
    if (p.eta == 0.0) return central_chi_log_pdf(m, p.sigma_g, p.n_dof);
    const double s2 = p.sigma_g * p.sigma_g;
    if (m == 0.0) {
        // m^(2N-1) limit, as in the central case but biased by eta.
        if (p.n_dof > 0.5) return -kInf;
        if (p.n_dof == 0.5)
            return 0.5 * std::log(2.0 / M_PI) - std::log(p.sigma_g) -
                   p.eta * p.eta / (2.0 * s2);
        return kInf;
    }
    const double z = m * p.eta / s2;
    // exp(-(m^2+eta^2)/2s2) I_{N-1}(z) = exp(-(m-eta)^2/2s2) [e^-z I_{N-1}(z)]
    return p.n_dof * std::log(m) - std::log(s2) - (p.n_dof - 1.0) * std::log(p.eta) -
           (m - p.eta) * (m - p.eta) / (2.0 * s2) +
           (specfun::log_bessel_i(p.n_dof - 1.0, z) - z);
}

double ncchi_pdf(double m, const NcChiParams& p) {
    return std::exp(ncchi_log_pdf(m, p));
}

double ncchi_mean(const NcChiParams& p) {
    check(p);
    const double beta_n =
        std::sqrt(2.0) * std::exp(specfun::ln_gamma(p.n_dof + 0.5) - specfun::ln_gamma(p.n_dof));
    const double x = -p.eta * p.eta / (2.0 * p.sigma_g * p.sigma_g);
    return p.sigma_g * beta_n * specfun::kummer_1f1(-0.5, p.n_dof, x);
}

double ncchi_second_moment(const NcChiParams& p) {
    check(p);
    return p.eta * p.eta + 2.0 * p.n_dof * p.sigma_g * p.sigma_g;
}

std::vector<double> sample_ncchi(Rng& rng, const NcChiParams& p, std::size_t count) {
    check(p);
    if (count == 0) throw std::invalid_argument("sample_ncchi: requires count >= 1");

    std::vector<double> out(count);
    long long n_int = 0;
    if (integer_dof(p.n_dof, &n_int)) {
        // Root sum of squares of 2N Gaussians; the signal splits as
        // eta/sqrt(N) per real component so the noiseless magnitude is eta.
        std::normal_distribution<double> gauss(0.0, p.sigma_g);
        const double signal = p.eta / std::sqrt(static_cast<double>(n_int));
        for (std::size_t i = 0; i < count; ++i) {
            double acc = 0.0;
            for (long long n = 0; n < n_int; ++n) {
                const double re = signal + gauss(rng);
                const double im = gauss(rng);
                acc += re * re + im * im;
            }
            out[i] = std::sqrt(acc);
        }
        return out;
    }

    if (p.eta != 0.0)
        throw UnsupportedCombinationError(
            "sample_ncchi: non-integer n_dof requires eta = 0");
    std::gamma_distribution<double> gamma(p.n_dof, 1.0);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = p.sigma_g * std::sqrt(2.0 * gamma(rng));
    return out;
}

} // namespace noisefit::distributions
