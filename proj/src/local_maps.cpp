#include "noisefit/local_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "noisefit/errors.hpp"
#include "noisefit/parallel.hpp"

namespace noisefit::localmaps {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

NoiseField estimate_field(const Volume4D& maps, std::array<int, 3> window,
                          estimators::Method method, int threads) {
    for (int w : window)
        if (w < 1 || w % 2 == 0)
            throw std::invalid_argument("estimate_field: window sizes must be odd and >= 1");
    if (maps.size() == 0) throw std::invalid_argument("estimate_field: empty volume");

    NoiseField field;
    field.dim = {maps.nx(), maps.ny(), maps.nz()};
    field.window = window;
    field.sigma.assign(field.size(), kNaN);
    field.n_dof.assign(field.size(), kNaN);
    field.valid.assign(field.size(), 0);

    const int hx = window[0] / 2, hy = window[1] / 2, hz = window[2] / 2;
    const std::size_t nk = maps.nk();

    parallel_for(maps.nz(), threads, [&](std::size_t z) {
        std::vector<double> samples;
        samples.reserve(static_cast<std::size_t>(window[0]) * window[1] * window[2] * nk);
        const long zi = static_cast<long>(z);
        for (std::size_t y = 0; y < maps.ny(); ++y) {
            const long yi = static_cast<long>(y);
            for (std::size_t x = 0; x < maps.nx(); ++x) {
                const long xi = static_cast<long>(x);
                // clamp the window at the borders instead of padding
                const std::size_t x0 = static_cast<std::size_t>(std::max(0L, xi - hx));
                const std::size_t x1 = std::min(maps.nx(), static_cast<std::size_t>(xi + hx + 1));
                const std::size_t y0 = static_cast<std::size_t>(std::max(0L, yi - hy));
                const std::size_t y1 = std::min(maps.ny(), static_cast<std::size_t>(yi + hy + 1));
                const std::size_t z0 = static_cast<std::size_t>(std::max(0L, zi - hz));
                const std::size_t z1 = std::min(maps.nz(), static_cast<std::size_t>(zi + hz + 1));

                samples.clear();
                for (std::size_t kk = 0; kk < nk; ++kk)
                    for (std::size_t zz = z0; zz < z1; ++zz)
                        for (std::size_t yy = y0; yy < y1; ++yy)
                            for (std::size_t xx = x0; xx < x1; ++xx)
                                samples.push_back(maps.at(xx, yy, zz, kk));

                const std::size_t idx = field.dim[0] * (field.dim[1] * z + y) + x;
                try {
                    const auto est = estimators::estimate(
                        std::span<const double>(samples.data(), samples.size()), method);
                    field.sigma[idx] = est.sigma_g;
                    field.n_dof[idx] = est.n_dof;
                    field.valid[idx] = 1;
                } catch (const DegenerateSampleError&) {
                    // field stays NaN/invalid at this voxel
                }
            }
        }
    });
    return field;
}

SummaryStats summarize(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("summarize: no values");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    SummaryStats s;
    s.median = quantile(0.5);
    s.p5 = quantile(0.05);
    s.p95 = quantile(0.95);
    estimators::KahanSum acc;
    for (double v : values) acc.add(v);
    s.mean = acc.value() / static_cast<double>(n);
    estimators::KahanSum var;
    for (double v : values) var.add((v - s.mean) * (v - s.mean));
    s.sd = n > 1 ? std::sqrt(var.value() / static_cast<double>(n - 1)) : 0.0;
    return s;
}

FieldSummary field_summary(const NoiseField& field, const std::vector<std::uint8_t>& mask) {
    if (!mask.empty() && mask.size() != field.size())
        throw std::invalid_argument("field_summary: mask shape does not match field");
    std::vector<double> sig, nd;
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (!field.valid[i]) continue;
        if (!mask.empty() && !mask[i]) continue;
        sig.push_back(field.sigma[i]);
        nd.push_back(field.n_dof[i]);
    }
    if (sig.empty()) throw std::invalid_argument("field_summary: no valid voxels selected");
    FieldSummary out;
    out.valid_count = sig.size();
    out.sigma = summarize(std::move(sig));
    out.n_dof = summarize(std::move(nd));
    return out;
}

} // namespace noisefit::localmaps
