#include "noisefit/local_maps.hpp"

#include <cmath>

#include "doctest.h"
#include "noisefit/distributions.hpp"
#include "noisefit/phantom.hpp"
#include "test_util.hpp"

using namespace noisefit;
using namespace noisefit::localmaps;
using noisefit::distributions::Rng;
using noisefit::distributions::sample_ncchi;
using testutil::rel_err;

namespace {

Volume4D noise_volume(std::array<std::size_t, 3> dim, std::size_t k, double sigma, double n_dof,
                      std::uint64_t seed) {
    Volume4D v(dim[0], dim[1], dim[2], k);
    Rng rng(seed);
    auto draws = sample_ncchi(rng, {0.0, sigma, n_dof}, v.size());
    v.data = std::move(draws);
    return v;
}

} // namespace

TEST_CASE("uniform noise maps recover the field") {
    const auto maps = noise_volume({16, 16, 16}, 33, 5.0, 1.0, 1);
    const auto field = estimate_field(maps, {3, 3, 3}, estimators::Method::moments, 2);
    const auto summary = field_summary(field);
    CHECK(summary.valid_count == 16 * 16 * 16);
    CHECK(rel_err(summary.sigma.mean, 5.0) < 0.03);
    CHECK(rel_err(summary.n_dof.mean, 1.0) < 0.10);
}

TEST_CASE("window of one with a single volume is degenerate everywhere") {
    const auto maps = noise_volume({6, 6, 6}, 1, 2.0, 1.0, 2);
    const auto field = estimate_field(maps, {1, 1, 1}, estimators::Method::moments);
    for (std::size_t i = 0; i < field.size(); ++i) {
        CHECK(!field.valid[i]);
        CHECK(std::isnan(field.sigma[i]));
    }
    CHECK_THROWS_AS(field_summary(field), std::invalid_argument);
}

TEST_CASE("even or nonpositive windows are rejected") {
    const auto maps = noise_volume({4, 4, 4}, 2, 1.0, 1.0, 3);
    CHECK_THROWS_AS(estimate_field(maps, {2, 3, 3}, estimators::Method::moments),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_field(maps, {3, 0, 3}, estimators::Method::moments),
                    std::invalid_argument);
}

TEST_CASE("voxelwise sigma tracks a ramped field") {
    phantom::PhantomSpec spec;
    spec.shape = {16, 16, 16};
    spec.k_volumes = 33;
    spec.signal = phantom::SignalModel::uniform(0.0);
    spec.sigma = 4.0;
    spec.n_dof = 1.0;
    spec.tau = phantom::TauProfile::sphere_ramp;
    spec.seed = 4;
    const auto ph = phantom::generate(spec);

    const auto field = estimate_field(ph.noisy, {3, 3, 3}, estimators::Method::moments, 2);
    // Pearson correlation between estimated and true sigma
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    const double n = static_cast<double>(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double x = field.sigma[i];
        const double y = ph.sigma_true.data[i];
        sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
    }
    const double r = (n * sxy - sx * sy) /
                     std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    CHECK(r >= 0.95);
}

TEST_CASE("shift invariance in the clamp-free interior") {
    const auto a = noise_volume({10, 8, 8}, 5, 3.0, 4.0, 5);
    Volume4D b = a;
    for (std::size_t kk = 0; kk < a.nk(); ++kk)
        for (std::size_t z = 0; z < a.nz(); ++z)
            for (std::size_t y = 0; y < a.ny(); ++y) {
                for (std::size_t x = a.nx() - 1; x >= 1; --x)
                    b.at(x, y, z, kk) = a.at(x - 1, y, z, kk);
                b.at(0, y, z, kk) = 7.7;
            }
    const auto fa = estimate_field(a, {3, 3, 3}, estimators::Method::moments);
    const auto fb = estimate_field(b, {3, 3, 3}, estimators::Method::moments);
    for (std::size_t z = 1; z + 1 < a.nz(); ++z)
        for (std::size_t y = 1; y + 1 < a.ny(); ++y)
            for (std::size_t x = 2; x + 1 < a.nx(); ++x) {
                const std::size_t ia = (z * a.ny() + y) * a.nx() + (x - 1);
                const std::size_t ib = (z * a.ny() + y) * a.nx() + x;
                CHECK(fb.sigma[ib] == fa.sigma[ia]);
                CHECK(fb.n_dof[ib] == fa.n_dof[ia]);
            }
}

TEST_CASE("a window covering the whole volume equals the global estimate") {
    const auto maps = noise_volume({7, 6, 5}, 8, 2.0, 4.0, 6);
    const auto field = estimate_field(maps, {13, 11, 9}, estimators::Method::moments);
    // gather all samples in the window order (k major, then z, y, x)
    std::vector<double> all;
    for (std::size_t kk = 0; kk < maps.nk(); ++kk)
        for (std::size_t z = 0; z < maps.nz(); ++z)
            for (std::size_t y = 0; y < maps.ny(); ++y)
                for (std::size_t x = 0; x < maps.nx(); ++x)
                    all.push_back(maps.at(x, y, z, kk));
    const auto global = estimators::estimate(all, estimators::Method::moments);
    for (std::size_t i = 0; i < field.size(); ++i) {
        CHECK(rel_err(field.sigma[i], global.sigma_g) < 1e-12);
        CHECK(rel_err(field.n_dof[i], global.n_dof) < 1e-12);
    }
}

TEST_CASE("field summary statistics") {
    NoiseField field;
    field.dim = {2, 2, 1};
    field.window = {3, 3, 3};
    field.sigma = {1.0, 1.0, 1.0, std::nan("")};
    field.n_dof = {2.0, 2.0, 2.0, std::nan("")};
    field.valid = {1, 1, 1, 0};

    const auto s = field_summary(field);
    CHECK(s.valid_count == 3); // the NaN voxel is excluded
    CHECK(s.sigma.sd == 0.0);
    CHECK(s.sigma.mean == 1.0);
    CHECK(s.n_dof.median == 2.0);

    SUBCASE("mask restricts the region") {
        const std::vector<std::uint8_t> mask{1, 0, 0, 0};
        const auto m = field_summary(field, mask);
        CHECK(m.valid_count == 1);
        const std::vector<std::uint8_t> empty_region{0, 0, 0, 1};
        CHECK_THROWS_AS(field_summary(field, empty_region), std::invalid_argument);
    }

    SUBCASE("median percentage error agrees with the evaluate path") {
        // treat the sigma entries as estimates of a constant truth 0.8
        Volume4D est(2, 2, 1, 1), truth(2, 2, 1, 1);
        est.data = {1.0, 1.2, 0.9, 0.7};
        std::fill(truth.data.begin(), truth.data.end(), 0.8);
        const auto ev = phantom::evaluate_field(est, truth);
        std::vector<double> manual;
        for (double e : est.data) manual.push_back(100.0 * (e - 0.8) / 0.8);
        const auto stats = summarize(manual);
        CHECK(std::fabs(ev.median - stats.median) < 1e-12);
        CHECK(std::fabs(ev.mean - stats.mean) < 1e-12);
    }
}
