#include "noisefit/background_id.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noisefit/errors.hpp"
#include "noisefit/parallel.hpp"
#include "noisefit/specfun.hpp"

namespace noisefit::background {

namespace {

struct SliceShape {
    std::size_t n_voxels = 0;
    std::size_t n_slices = 0;
};

SliceShape slice_shape(const Volume4D& v, SliceAxis axis) {
    switch (resolve_axis(axis)) {
        case SliceAxis::x: return {v.ny() * v.nz(), v.nx()};
        case SliceAxis::y: return {v.nx() * v.nz(), v.ny()};
        default: return {v.nx() * v.ny(), v.nz()};
    }
}

std::vector<std::uint8_t> included_mask(std::size_t k, const std::vector<std::size_t>& exclude) {
    std::vector<std::uint8_t> keep(k, 1);
    for (std::size_t idx : exclude) {
        if (idx >= k) throw std::invalid_argument("exclude_volumes index out of range");
        keep[idx] = 0;
    }
    return keep;
}

// Per-voxel samples of one slice, voxel-major, plus the per-voxel sum
// of squares driving the mask statistic.
struct SliceData {
    std::size_t n_voxels = 0;
    std::size_t k = 0;              // included volumes
    std::vector<double> samples;    // [voxel * k + j]
    std::vector<double> sum_sq;     // per voxel
};

SliceData gather_slice(const Volume4D& v, std::size_t slice_index, SliceAxis axis,
                       const std::vector<std::size_t>& exclude) {
    const SliceAxis ax = resolve_axis(axis);
    const SliceShape shape = slice_shape(v, ax);
    if (slice_index >= shape.n_slices) throw std::invalid_argument("slice index out of range");
    const auto keep = included_mask(v.nk(), exclude);
    const std::size_t k_inc =
        static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
    if (k_inc == 0) throw std::invalid_argument("all volumes excluded");

    SliceData sd;
    sd.n_voxels = shape.n_voxels;
    sd.k = k_inc;
    sd.samples.resize(shape.n_voxels * k_inc);
    sd.sum_sq.assign(shape.n_voxels, 0.0);

    std::size_t voxel = 0;
    auto fill_voxel = [&](std::size_t x, std::size_t y, std::size_t z) {
        double acc = 0.0;
        std::size_t j = 0;
        for (std::size_t kk = 0; kk < v.nk(); ++kk) {
            if (!keep[kk]) continue;
            const double m = v.at(x, y, z, kk);
            sd.samples[voxel * k_inc + j] = m;
            acc += m * m;
            ++j;
        }
        sd.sum_sq[voxel] = acc;
        ++voxel;
    };

    if (ax == SliceAxis::x) {
        for (std::size_t z = 0; z < v.nz(); ++z)
            for (std::size_t y = 0; y < v.ny(); ++y) fill_voxel(slice_index, y, z);
    } else if (ax == SliceAxis::y) {
        for (std::size_t z = 0; z < v.nz(); ++z)
            for (std::size_t x = 0; x < v.nx(); ++x) fill_voxel(x, slice_index, z);
    } else {
        for (std::size_t y = 0; y < v.ny(); ++y)
            for (std::size_t x = 0; x < v.nx(); ++x) fill_voxel(x, y, slice_index);
    }
    return sd;
}

std::size_t count_in_window(const std::vector<double>& sum_sq, double low, double high) {
    std::size_t n = 0;
    for (double s : sum_sq)
        if (s >= low && s <= high) ++n;
    return n;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = hi;
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
    return out;
}

} // namespace

SliceAxis axis_from_name(const std::string& name) {
    if (name == "x") return SliceAxis::x;
    if (name == "y") return SliceAxis::y;
    if (name == "z") return SliceAxis::z;
    if (name == "auto") return SliceAxis::automatic;
    throw std::invalid_argument("unknown slice axis: " + name);
}

std::string axis_name(SliceAxis axis) {
    switch (axis) {
        case SliceAxis::x: return "x";
        case SliceAxis::y: return "y";
        case SliceAxis::z: return "z";
        default: return "auto";
    }
}

SliceAxis resolve_axis(SliceAxis axis) {
    return axis == SliceAxis::automatic ? SliceAxis::z : axis;
}

void IdentificationConfig::validate() const {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("config: p must be in (0, 1)");
    if (grid_length < 2) throw std::invalid_argument("config: grid_length must be >= 2");
    if (!(n_min > 0.0) || !(n_max >= n_min))
        throw std::invalid_argument("config: requires 0 < n_min <= n_max");
    if (max_outer_iterations < 1)
        throw std::invalid_argument("config: max_outer_iterations must be >= 1");
    if (!(relative_tolerance > 0.0))
        throw std::invalid_argument("config: relative_tolerance must be > 0");
}

double sigma_upper_bound(double volume_median, double n_max) {
    if (!(n_max > 0.0)) throw std::domain_error("sigma_upper_bound: requires n_max > 0");
    if (!(volume_median > 0.0))
        throw DegenerateSampleError("sigma_upper_bound: dataset median is not positive");
    return volume_median / std::sqrt(2.0 * specfun::inv_reg_inc_gamma_p(n_max, 0.5));
}

std::pair<double, double> selection_bounds(std::size_t k_volumes, double n_dof, double p) {
    if (k_volumes == 0) throw std::invalid_argument("selection_bounds: requires k >= 1");
    if (!(n_dof > 0.0)) throw std::domain_error("selection_bounds: requires n_dof > 0");
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("selection_bounds: requires p in (0, 1)");
    const double alpha = static_cast<double>(k_volumes) * n_dof;
    return {specfun::inv_reg_inc_gamma_p(alpha, 0.5 * p),
            specfun::inv_reg_inc_gamma_p(alpha, 1.0 - 0.5 * p)};
}

std::vector<std::uint8_t> select_background(const Volume4D& volume, std::size_t slice_index,
                                            SliceAxis axis, double sigma_candidate,
                                            double n_dof, double p) {
    if (!(sigma_candidate > 0.0))
        throw std::domain_error("select_background: requires sigma_candidate > 0");
    const SliceData sd = gather_slice(volume, slice_index, axis, {});
    const auto [lm, lp] = selection_bounds(sd.k, n_dof, p);
    const double scale = 2.0 * sigma_candidate * sigma_candidate;
    std::vector<std::uint8_t> mask(sd.n_voxels, 0);
    for (std::size_t v = 0; v < sd.n_voxels; ++v) {
        const double s = sd.sum_sq[v] / scale;
        mask[v] = (s >= lm && s <= lp) ? 1 : 0;
    }
    return mask;
}

double volume_median(const Volume4D& volume, const std::vector<std::size_t>& exclude) {
    const auto keep = included_mask(volume.nk(), exclude);
    std::vector<double> values;
    values.reserve(volume.size());
    const std::size_t sp = volume.spatial_size();
    for (std::size_t kk = 0; kk < volume.nk(); ++kk) {
        if (!keep[kk]) continue;
        const double* begin = volume.data.data() + kk * sp;
        values.insert(values.end(), begin, begin + sp);
    }
    if (values.empty()) throw std::invalid_argument("volume_median: empty volume");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double med = values[mid];
    if (values.size() % 2 == 0) {
        const double lower = *std::max_element(values.begin(), values.begin() + mid);
        med = 0.5 * (med + lower);
    }
    return med;
}

SliceResult identify_slice(const Volume4D& volume, std::size_t slice_index,
                           const IdentificationConfig& config, estimators::Method method,
                           std::optional<double> global_median) {
    config.validate();
    SliceResult result;
    result.slice_index = slice_index;
    try {
        const SliceData sd = gather_slice(volume, slice_index, config.slice_axis,
                                          config.exclude_volumes);
        const double median =
            global_median ? *global_median : volume_median(volume, config.exclude_volumes);
        const double sigma_max = sigma_upper_bound(median, config.n_max);

        std::vector<double> grid =
            linspace(sigma_max / config.grid_length, sigma_max, config.grid_length);
        double n_lo = config.n_min;
        double n_hi = config.n_max;
        double prev_sigma = 0.0, prev_n = 0.0;

        for (int iter = 0; iter < config.max_outer_iterations; ++iter) {
            const double lambda_minus =
                selection_bounds(sd.k, n_lo, config.p).first;
            const double lambda_plus =
                selection_bounds(sd.k, n_hi, config.p).second;

            // Scan the candidate grid; strictly-greater keeps the smallest
            // sigma on ties.
            std::size_t best_count = 0;
            double best_sigma = grid.front();
            for (double sigma_c : grid) {
                const double scale = 2.0 * sigma_c * sigma_c;
                const std::size_t n =
                    count_in_window(sd.sum_sq, scale * lambda_minus, scale * lambda_plus);
                if (n > best_count) {
                    best_count = n;
                    best_sigma = sigma_c;
                }
            }

            if (best_count < config.min_background_voxels)
                throw NoBackgroundError("slice " + std::to_string(slice_index) + ": only " +
                                        std::to_string(best_count) +
                                        " candidate background voxels");

            const double scale = 2.0 * best_sigma * best_sigma;
            const double low = scale * lambda_minus, high = scale * lambda_plus;
            result.mask.assign(sd.n_voxels, 0);
            std::vector<double> samples;
            samples.reserve(best_count * sd.k);
            for (std::size_t v = 0; v < sd.n_voxels; ++v) {
                if (sd.sum_sq[v] >= low && sd.sum_sq[v] <= high) {
                    result.mask[v] = 1;
                    const double* begin = sd.samples.data() + v * sd.k;
                    samples.insert(samples.end(), begin, begin + sd.k);
                }
            }
            result.rejected_count = sd.n_voxels - best_count;

            const auto est = estimators::estimate(
                std::span<const double>(samples.data(), samples.size()), method);
            result.estimate = est;
            result.outer_iterations = iter + 1;

            if (iter > 0 && std::fabs(est.sigma_g - prev_sigma) <
                                config.relative_tolerance * prev_sigma &&
                std::fabs(est.n_dof - prev_n) < config.relative_tolerance * prev_n) {
                result.converged = true;
                break;
            }
            prev_sigma = est.sigma_g;
            prev_n = est.n_dof;

            // Lock the band to the estimate and refine the sigma grid to
            // [0.95, 1.05] of it, 11 steps of 1%.
            n_lo = n_hi = est.n_dof;
            grid = linspace(0.95 * est.sigma_g, 1.05 * est.sigma_g, 11);
        }
    } catch (const std::exception& e) {
        result.estimate.reset();
        result.converged = false;
        result.error = e.what();
    }
    return result;
}

std::vector<SliceResult> identify_volume(const Volume4D& volume,
                                         const IdentificationConfig& config,
                                         estimators::Method method, int threads) {
    config.validate();
    if (volume.size() == 0) throw std::invalid_argument("identify_volume: empty volume");
    const double median = volume_median(volume, config.exclude_volumes);
    const SliceShape shape = slice_shape(volume, config.slice_axis);
    std::vector<SliceResult> results(shape.n_slices);
    parallel_for(shape.n_slices, threads, [&](std::size_t s) {
        results[s] = identify_slice(volume, s, config, method, median);
    });
    return results;
}

} // namespace noisefit::background
