#include "noisefit/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "noisefit/errors.hpp"
#include "noisefit/specfun.hpp"

namespace noisefit::estimators {

namespace {

constexpr double kStepTolerance = 1e-13;
constexpr int kMaxNewtonIterations = 100;

} // namespace

std::string method_name(Method m) {
    return m == Method::moments ? "moments" : "maximum_likelihood";
}

Method method_from_name(const std::string& name) {
    if (name == "moments") return Method::moments;
    if (name == "maximum_likelihood" || name == "ml") return Method::maximum_likelihood;
    throw std::invalid_argument("unknown estimation method: " + name);
}

double SampleStats::mean_log_sq() const {
    const std::size_t n = count - zero_count;
    if (n == 0) throw DegenerateSampleError("sample set has no nonzero values");
    return sum_log_sq / static_cast<double>(n);
}

SampleStats compute_stats(std::span<const double> samples) {
    SampleStats s;
    s.count = samples.size();
    KahanSum sum_m, sum_sq, sum_quad, sum_log;
    for (double m : samples) {
        if (!(m >= 0.0)) throw std::domain_error("samples must be nonnegative");
        const double m2 = m * m;
        sum_m.add(m);
        sum_sq.add(m2);
        sum_quad.add(m2 * m2);
        if (m == 0.0)
            ++s.zero_count;
        else
            sum_log.add(2.0 * std::log(m));
    }
    s.sum_sq = sum_sq.value();
    s.sum_quad = sum_quad.value();
    s.sum_log_sq = sum_log.value();
    if (s.count > 0) {
        s.mean = sum_m.value() / static_cast<double>(s.count);
        if (s.count > 1) {
            const double var =
                (s.sum_sq - static_cast<double>(s.count) * s.mean * s.mean) /
                static_cast<double>(s.count - 1);
            s.sd = var > 0.0 ? std::sqrt(var) : 0.0;
        }
    }
    return s;
}

double sigma_from_moments(const SampleStats& stats) {
    if (stats.count < 2) throw DegenerateSampleError("need at least 2 samples");
    if (!(stats.sum_sq > 0.0)) throw DegenerateSampleError("all samples are zero");
    const double v = static_cast<double>(stats.count);
    const double scale = stats.sum_quad / stats.sum_sq;
    const double radicand = scale - stats.sum_sq / v;
    // constant input cancels to rounding noise around zero
    if (!(radicand > 1e-12 * scale))
        throw DegenerateSampleError("nonpositive moment radicand; samples look constant or contaminated");
    return std::sqrt(0.5 * radicand);
}

double n_from_mean(const SampleStats& stats, double sigma_g) {
    if (!(sigma_g > 0.0)) throw std::domain_error("n_from_mean: requires sigma_g > 0");
    if (stats.count == 0) throw DegenerateSampleError("empty sample set");
    return stats.sum_sq / (2.0 * static_cast<double>(stats.count) * sigma_g * sigma_g);
}

SigmaMlEquation::SigmaMlEquation(const SampleStats& stats)
    : sum_sq(stats.sum_sq), mean_log_sq(stats.mean_log_sq()), count(stats.count) {}

double SigmaMlEquation::shape_at(double sigma) const {
    return sum_sq / (2.0 * static_cast<double>(count) * sigma * sigma);
}

double SigmaMlEquation::f(double sigma) const {
    const double u = shape_at(sigma);
    // psi(u) - log(2 sigma^2) rearranged through psi(u) - log(u):
    // log(2 sigma^2) = log(sum_sq / V) - log(u).
    const double c = std::log(sum_sq / static_cast<double>(count)) - mean_log_sq;
    return specfun::digamma_minus_log(u) + c;
}

double SigmaMlEquation::df(double sigma) const {
    const double u = shape_at(sigma);
    return -specfun::trigamma(u) * sum_sq /
               (static_cast<double>(count) * sigma * sigma * sigma) +
           2.0 / sigma;
}

namespace {

// Safeguarded Newton for a strictly monotone scalar equation on (0, inf).
// Keeps a sign-changing bracket and bisects whenever the Newton step
// leaves it. Stops once |x_n - x_{n-1}| < 1e-13 or the residual is
// exactly zero.
template <typename F, typename DF>
NewtonResult newton_monotone(F&& f, DF&& df, double x0, bool increasing) {
    NewtonResult res;
    double x = x0;
    double fx = f(x);

    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    auto update_bracket = [&](double xv, double fv) {
        const bool below = increasing ? fv < 0.0 : fv > 0.0;
        if (below)
            lo = std::max(lo, xv);
        else
            hi = std::min(hi, xv);
    };
    update_bracket(x, fx);
    if (fx == 0.0) {
        res.root = x;
        res.converged = true;
        return res;
    }

    for (int it = 0; it < kMaxNewtonIterations; ++it) {
        const double d = df(x);
        double xn = d != 0.0 ? x - fx / d : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(xn) || xn <= 0.0 || xn < lo || xn > hi)
            xn = std::isinf(hi) ? 2.0 * std::max(x, lo) : 0.5 * (lo + hi);
        const double step = std::fabs(xn - x);
        x = xn;
        fx = f(x);
        update_bracket(x, fx);
        res.iterations = it + 1;
        if (step < kStepTolerance || fx == 0.0) {
            res.converged = true;
            break;
        }
    }
    res.root = x;
    return res;
}

} // namespace

NewtonResult sigma_from_ml(const SampleStats& stats, double sigma0) {
    if (stats.count < 2) throw DegenerateSampleError("need at least 2 samples");
    if (!(sigma0 > 0.0)) throw std::domain_error("sigma_from_ml: requires sigma0 > 0");
    SigmaMlEquation eq(stats);
    // f decreases from log(mean m^2) - mean log m^2 > 0 toward -inf; a
    // nonpositive limit means the samples are (numerically) constant.
    const double c = std::log(eq.sum_sq / static_cast<double>(eq.count)) - eq.mean_log_sq;
    if (!(c > 0.0)) throw DegenerateSampleError("zero log-moment spread; samples look constant");
    return newton_monotone([&](double s) { return eq.f(s); },
                           [&](double s) { return eq.df(s); }, sigma0,
                           /*increasing=*/false);
}

double minka_digamma_inverse(double y) {
    if (y >= -2.22) return std::exp(y) + 0.5;
    return -1.0 / (y + specfun::digamma(1.0));
}

NewtonResult n_from_ml(const SampleStats& stats, double sigma_g) {
    if (!(sigma_g > 0.0)) throw std::domain_error("n_from_ml: requires sigma_g > 0");
    if (stats.count < 2) throw DegenerateSampleError("need at least 2 samples");
    const double y = stats.mean_log_sq() - std::log(2.0 * sigma_g * sigma_g);
    const double x0 = minka_digamma_inverse(y);
    return newton_monotone([&](double n) { return specfun::digamma(n) - y; },
                           [&](double n) { return specfun::trigamma(n); },
                           std::max(x0, 1e-8),
                           /*increasing=*/true);
}

EstimateResult estimate(const SampleStats& stats, Method method) {
    EstimateResult r;
    r.method = method;
    r.zero_count = stats.zero_count;
    if (method == Method::moments) {
        r.sigma_g = sigma_from_moments(stats);
        r.n_dof = n_from_mean(stats, r.sigma_g);
        r.converged = true;
        return r;
    }
    if (!(stats.sd > 0.0))
        throw DegenerateSampleError("zero sample standard deviation");
    const NewtonResult sig = sigma_from_ml(stats, stats.sd);
    const NewtonResult n = n_from_ml(stats, sig.root);
    r.sigma_g = sig.root;
    r.n_dof = n.root;
    r.iterations = sig.iterations + n.iterations;
    r.converged = sig.converged && n.converged;
    return r;
}

EstimateResult estimate(std::span<const double> samples, Method method) {
    return estimate(compute_stats(samples), method);
}

} // namespace noisefit::estimators
