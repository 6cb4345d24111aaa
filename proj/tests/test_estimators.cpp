#include "noisefit/estimators.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "noisefit/distributions.hpp"
#include "noisefit/errors.hpp"
#include "noisefit/specfun.hpp"
#include "test_util.hpp"

using namespace noisefit;
using namespace noisefit::estimators;
using noisefit::distributions::NcChiParams;
using noisefit::distributions::Rng;
using noisefit::distributions::sample_ncchi;
using testutil::rel_err;

namespace {

// Profile log-likelihood of the central-chi model in sigma, with N tied
// to sigma through N(sigma) = sum m^2 / (2 V sigma^2). Its maximizer is
// the root of the maximum-likelihood sigma equation.
double profile_loglik(const SampleStats& s, double sigma) {
    const double v = static_cast<double>(s.count);
    const double n = s.sum_sq / (2.0 * v * sigma * sigma);
    const double sum_log_m = 0.5 * s.sum_log_sq;
    return (2.0 * n - 1.0) * sum_log_m - v * (n - 1.0) * std::log(2.0) -
           2.0 * v * n * std::log(sigma) - v * specfun::ln_gamma(n) -
           s.sum_sq / (2.0 * sigma * sigma);
}

// Gamma log-likelihood in N for fixed samples t_v.
double gamma_loglik_n(const SampleStats& s, double sigma, double n) {
    const double v = static_cast<double>(s.count);
    const double mean_log_t = s.mean_log_sq() - std::log(2.0 * sigma * sigma);
    const double mean_t = s.sum_sq / (2.0 * v * sigma * sigma);
    return v * ((n - 1.0) * mean_log_t - mean_t - specfun::ln_gamma(n));
}

template <typename F>
double grid_argmax(double center, double rel_step, double rel_halfwidth, F&& f) {
    double best_x = center, best = f(center);
    const int steps = static_cast<int>(rel_halfwidth / rel_step);
    for (int i = -steps; i <= steps; ++i) {
        const double x = center * (1.0 + rel_step * i);
        const double y = f(x);
        if (y > best) {
            best = y;
            best_x = x;
        }
    }
    return best_x;
}

} // namespace

TEST_CASE("moment estimator of sigma") {
    Rng rng(0);
    SUBCASE("central chi draws, sigma 10, N 4") {
        auto draws = sample_ncchi(rng, {0.0, 10.0, 4.0}, 100000);
        const auto stats = compute_stats(draws);
        CHECK(rel_err(sigma_from_moments(stats), 10.0) < 0.01);
    }
    SUBCASE("Rayleigh draws, sigma 1") {
        auto draws = sample_ncchi(rng, {0.0, 1.0, 1.0}, 100000);
        CHECK(rel_err(sigma_from_moments(compute_stats(draws)), 1.0) < 0.01);
    }
    SUBCASE("constant samples are degenerate") {
        std::vector<double> constant(50, 3.2);
        CHECK_THROWS_AS(sigma_from_moments(compute_stats(constant)), DegenerateSampleError);
    }
}

TEST_CASE("moment estimator of N") {
    SUBCASE("constant t maps back exactly") {
        const double sigma = 2.5, c = 7.25;
        std::vector<double> samples(100, sigma * std::sqrt(2.0 * c));
        CHECK(rel_err(n_from_mean(compute_stats(samples), sigma), c) < 1e-12);
    }
    Rng rng(1);
    SUBCASE("N 12 at true sigma") {
        auto draws = sample_ncchi(rng, {0.0, 1.0, 12.0}, 100000);
        CHECK(rel_err(n_from_mean(compute_stats(draws), 1.0), 12.0) < 0.02);
    }
    SUBCASE("N 0.5 at true sigma") {
        auto draws = sample_ncchi(rng, {0.0, 2.0, 0.5}, 100000);
        CHECK(rel_err(n_from_mean(compute_stats(draws), 2.0), 0.5) < 0.02);
    }
}

TEST_CASE("maximum-likelihood sigma solver") {
    Rng rng(2);
    SUBCASE("sigma 10, N 4: accurate and few iterations") {
        auto draws = sample_ncchi(rng, {0.0, 10.0, 4.0}, 100000);
        const auto stats = compute_stats(draws);
        const auto res = sigma_from_ml(stats, stats.sd);
        CHECK(res.converged);
        CHECK(res.iterations <= 5);
        CHECK(rel_err(res.root, 10.0) < 0.01);
    }
    SUBCASE("agrees with a 1e-6 grid search of the log-likelihood") {
        auto draws = sample_ncchi(rng, {0.0, 1.0, 1.0}, 20000);
        const auto stats = compute_stats(draws);
        const auto res = sigma_from_ml(stats, stats.sd);
        CHECK(res.converged);
        const double grid_best = grid_argmax(
            res.root, 1e-6, 0.01, [&](double s) { return profile_loglik(stats, s); });
        CHECK(rel_err(res.root, grid_best) < 1e-5);
    }
    SUBCASE("constant samples are degenerate") {
        std::vector<double> constant(50, 3.2);
        CHECK_THROWS_AS(sigma_from_ml(compute_stats(constant), 1.0), DegenerateSampleError);
    }
}

TEST_CASE("maximum-likelihood N solver") {
    CHECK(minka_digamma_inverse(0.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(rel_err(minka_digamma_inverse(-3.0), 0.27954702586474505891) < 1e-10);

    Rng rng(3);
    auto draws = sample_ncchi(rng, {0.0, 1.0, 8.0}, 100000);
    const auto stats = compute_stats(draws);
    const auto res = n_from_ml(stats, 1.0);
    CHECK(res.converged);
    CHECK(rel_err(res.root, 8.0) < 0.02);

    SUBCASE("agrees with a 1e-6 grid search of the Gamma log-likelihood") {
        const double grid_best = grid_argmax(
            res.root, 1e-6, 0.01, [&](double n) { return gamma_loglik_n(stats, 1.0, n); });
        CHECK(rel_err(res.root, grid_best) < 1e-5);
    }
}

TEST_CASE("analytic derivatives match central finite differences") {
    Rng rng(4);
    auto draws = sample_ncchi(rng, {0.0, 5.0, 4.0}, 50000);
    const SigmaMlEquation eq(compute_stats(draws));
    for (double sigma : {3.0, 4.5, 5.0, 5.5, 8.0}) {
        const double h = sigma * 1e-6;
        const double fd = (eq.f(sigma + h) - eq.f(sigma - h)) / (2.0 * h);
        CHECK(rel_err(eq.df(sigma), fd) < 1e-6);
    }
    // f'(N) = psi'(N) against finite differences of psi
    for (double n : {0.5, 1.0, 4.0, 12.0}) {
        const double h = n * 1e-6;
        const double fd = (specfun::digamma(n + h) - specfun::digamma(n - h)) / (2.0 * h);
        CHECK(rel_err(specfun::trigamma(n), fd) < 1e-6);
    }
}

TEST_CASE("estimate dispatch") {
    Rng rng(5);
    auto draws = sample_ncchi(rng, {0.0, 10.0, 4.0}, 100000);

    const auto mom = estimate(draws, Method::moments);
    CHECK(mom.converged);
    CHECK(rel_err(mom.sigma_g, 10.0) < 0.01);
    CHECK(rel_err(mom.n_dof, 4.0) < 0.03);

    const auto ml = estimate(draws, Method::maximum_likelihood);
    CHECK(ml.converged);
    CHECK(rel_err(ml.sigma_g, mom.sigma_g) < 0.01);
    CHECK(rel_err(ml.n_dof, mom.n_dof) < 0.01);

    SUBCASE("maximum-likelihood stationarity at the solution") {
        const auto stats = compute_stats(draws);
        const SigmaMlEquation eq(stats);
        CHECK(std::fabs(eq.f(ml.sigma_g)) < 1e-9);
        const double y = stats.mean_log_sq() - std::log(2.0 * ml.sigma_g * ml.sigma_g);
        CHECK(std::fabs(specfun::digamma(ml.n_dof) - y) < 1e-9);
    }

    SUBCASE("minimal sample set returns or raises cleanly") {
        const std::vector<double> minimal{1.0, 2.0};
        try {
            const auto r = estimate(minimal, Method::moments);
            CHECK(r.sigma_g > 0.0);
        } catch (const DegenerateSampleError&) {
            // acceptable for a boundary sample set
        }
        try {
            const auto r = estimate(minimal, Method::maximum_likelihood);
            CHECK(r.sigma_g > 0.0);
        } catch (const DegenerateSampleError&) {
        }
    }
}

TEST_CASE("zero samples are excluded from the log moment but kept in power sums") {
    Rng rng(6);
    auto draws = sample_ncchi(rng, {0.0, 2.0, 1.0}, 50000);
    auto with_zeros = draws;
    with_zeros.insert(with_zeros.end(), 500, 0.0);
    const auto stats = compute_stats(with_zeros);
    CHECK(stats.zero_count == 500);
    CHECK(stats.count == draws.size() + 500);
    CHECK_NOTHROW(estimate(with_zeros, Method::maximum_likelihood));
    const auto r = estimate(with_zeros, Method::maximum_likelihood);
    CHECK(r.zero_count == 500);
    // 1% of zeros barely moves sigma
    CHECK(rel_err(r.sigma_g, 2.0) < 0.03);
}

TEST_CASE("scale equivariance of sigma and invariance of N") {
    Rng rng(7);
    auto base = sample_ncchi(rng, {0.0, 3.0, 4.0}, 2000);
    for (Method method : {Method::moments, Method::maximum_likelihood}) {
        const auto ref = estimate(base, method);
        for (double c : {0.1, 3.0, 1000.0}) {
            std::vector<double> scaled(base.size());
            for (std::size_t i = 0; i < base.size(); ++i) scaled[i] = c * base[i];
            const auto got = estimate(scaled, method);
            CHECK(rel_err(got.sigma_g, c * ref.sigma_g) < 1e-10);
            CHECK(rel_err(got.n_dof, ref.n_dof) < 1e-10);
        }
    }
}

TEST_CASE("consistency over seeds across the (sigma, N) grid") {
    const std::size_t v = 100000;
    const int n_seeds = 20;
    for (double sigma : {1.0, 20.0})
        for (double n : {0.5, 1.0, 4.0, 8.0, 12.0})
            for (Method method : {Method::moments, Method::maximum_likelihood}) {
                double err_sigma = 0.0, err_n = 0.0;
                for (int seed = 0; seed < n_seeds; ++seed) {
                    Rng rng(static_cast<std::uint64_t>(seed) * 977 + 13);
                    auto draws = sample_ncchi(rng, {0.0, sigma, n}, v);
                    const auto r = estimate(draws, method);
                    err_sigma += std::fabs(r.sigma_g - sigma) / sigma;
                    err_n += std::fabs(r.n_dof - n) / n;
                }
                CHECK(err_sigma / n_seeds <= 0.02);
                CHECK(err_n / n_seeds <= 0.02);
            }
}
