#include "noisefit/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "noisefit/distributions.hpp"
#include "noisefit/errors.hpp"
#include "noisefit/estimators.hpp"
#include "noisefit/parallel.hpp"

namespace noisefit::phantom {

TauProfile tau_from_name(const std::string& name) {
    if (name == "stationary") return TauProfile::stationary;
    if (name == "sphere_ramp") return TauProfile::sphere_ramp;
    throw std::invalid_argument("unknown tau profile: " + name);
}

std::string tau_name(TauProfile profile) {
    return profile == TauProfile::stationary ? "stationary" : "sphere_ramp";
}

SignalModel SignalModel::uniform(double v) {
    SignalModel m;
    m.kind = Kind::uniform;
    m.value = v;
    return m;
}

SignalModel SignalModel::sphere(double inside, double outside, double radius_fraction) {
    SignalModel m;
    m.kind = Kind::sphere;
    m.inside_value = inside;
    m.outside_value = outside;
    m.radius_fraction = radius_fraction;
    return m;
}

SignalModel SignalModel::from_volume(Volume4D v) {
    SignalModel m;
    m.kind = Kind::imported;
    m.imported = std::move(v);
    return m;
}

double sigma_from_snr(double mean_signal, double snr) {
    if (!(mean_signal > 0.0)) throw std::domain_error("sigma_from_snr: requires mean_signal > 0");
    if (!(snr > 0.0)) throw std::domain_error("sigma_from_snr: requires snr > 0");
    return mean_signal / snr;
}

namespace {

// Linear radial ramp from tau_center at the volume center to tau_edge
// at the circumscribed-sphere radius (the corner distance).
std::vector<double> tau_field(const PhantomSpec& spec) {
    const auto [nx, ny, nz] = spec.shape;
    std::vector<double> tau(nx * ny * nz, spec.tau_center);
    if (spec.tau == TauProfile::stationary) return tau;
    const double cx = 0.5 * static_cast<double>(nx - 1);
    const double cy = 0.5 * static_cast<double>(ny - 1);
    const double cz = 0.5 * static_cast<double>(nz - 1);
    const double radius = std::sqrt(cx * cx + cy * cy + cz * cz);
    std::size_t i = 0;
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < nx; ++x, ++i) {
                const double dx = static_cast<double>(x) - cx;
                const double dy = static_cast<double>(y) - cy;
                const double dz = static_cast<double>(z) - cz;
                const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                tau[i] = spec.tau_center + (spec.tau_edge - spec.tau_center) * (r / radius);
            }
    return tau;
}

std::vector<double> signal_field(const PhantomSpec& spec) {
    const auto [nx, ny, nz] = spec.shape;
    std::vector<double> signal(nx * ny * nz, 0.0);
    switch (spec.signal.kind) {
        case SignalModel::Kind::uniform:
            std::fill(signal.begin(), signal.end(), spec.signal.value);
            break;
        case SignalModel::Kind::sphere: {
            const double cx = 0.5 * static_cast<double>(nx - 1);
            const double cy = 0.5 * static_cast<double>(ny - 1);
            const double cz = 0.5 * static_cast<double>(nz - 1);
            const double radius =
                spec.signal.radius_fraction * static_cast<double>(std::min({nx, ny, nz}));
            std::size_t i = 0;
            for (std::size_t z = 0; z < nz; ++z)
                for (std::size_t y = 0; y < ny; ++y)
                    for (std::size_t x = 0; x < nx; ++x, ++i) {
                        const double dx = static_cast<double>(x) - cx;
                        const double dy = static_cast<double>(y) - cy;
                        const double dz = static_cast<double>(z) - cz;
                        signal[i] = (dx * dx + dy * dy + dz * dz <= radius * radius)
                                        ? spec.signal.inside_value
                                        : spec.signal.outside_value;
                    }
            break;
        }
        case SignalModel::Kind::imported: {
            const Volume4D& v = spec.signal.imported;
            if (v.nx() != nx || v.ny() != ny || v.nz() != nz)
                throw std::invalid_argument("imported signal volume does not match phantom shape");
            std::copy(v.data.begin(), v.data.begin() + static_cast<long>(signal.size()),
                      signal.begin());
            break;
        }
    }
    return signal;
}

distributions::Rng stream_for_volume(std::uint64_t seed, std::size_t k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    return distributions::Rng(seq);
}

} // namespace

PhantomOutput generate(const PhantomSpec& spec, int threads) {
    const auto [nx, ny, nz] = spec.shape;
    if (nx == 0 || ny == 0 || nz == 0 || spec.k_volumes == 0)
        throw std::invalid_argument("generate: shape and k_volumes must be >= 1");
    if (!(spec.n_dof > 0.0)) throw std::domain_error("generate: requires n_dof > 0");

    const std::vector<double> signal = signal_field(spec);
    const std::vector<double> tau = tau_field(spec);
    const std::size_t sp = signal.size();

    PhantomOutput out;
    out.n_true = spec.n_dof;
    out.object_mask.resize(sp);
    estimators::KahanSum signal_sum;
    std::size_t object_count = 0;
    for (std::size_t i = 0; i < sp; ++i) {
        out.object_mask[i] = signal[i] > 0.0 ? 1 : 0;
        if (out.object_mask[i]) {
            signal_sum.add(signal[i]);
            ++object_count;
        }
    }
    out.mean_signal = object_count ? signal_sum.value() / static_cast<double>(object_count) : 0.0;

    if (spec.sigma > 0.0)
        out.sigma_g = spec.sigma;
    else
        out.sigma_g = sigma_from_snr(out.mean_signal, spec.snr);

    long long n_int = 0;
    const bool integer_n = distributions::integer_dof(spec.n_dof, &n_int);
    if (!integer_n && object_count > 0)
        throw UnsupportedCombinationError(
            "generate: non-integer n_dof is only supported for pure-noise phantoms (eta = 0)");

    out.noiseless = Volume4D(nx, ny, nz, spec.k_volumes);
    out.noisy = Volume4D(nx, ny, nz, spec.k_volumes);
    out.sigma_true = Volume4D(nx, ny, nz, 1);
    for (std::size_t i = 0; i < sp; ++i) out.sigma_true.data[i] = out.sigma_g * tau[i];

    // one stream per volume index; generation order inside a volume is fixed
    parallel_for(spec.k_volumes, threads, [&](std::size_t k) {
        auto rng = stream_for_volume(spec.seed, k);
        const std::size_t base = k * sp;
        if (integer_n) {
            std::normal_distribution<double> gauss(0.0, out.sigma_g);
            const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_int));
            for (std::size_t i = 0; i < sp; ++i) {
                const double s = signal[i];
                out.noiseless.data[base + i] = s;
                const double component = s * inv_sqrt_n;
                double acc = 0.0;
                for (long long n = 0; n < n_int; ++n) {
                    const double re = component + tau[i] * gauss(rng);
                    const double im = tau[i] * gauss(rng);
                    acc += re * re + im * im;
                }
                out.noisy.data[base + i] = std::sqrt(acc);
            }
        } else {
            std::gamma_distribution<double> gamma(spec.n_dof, 1.0);
            for (std::size_t i = 0; i < sp; ++i) {
                out.noiseless.data[base + i] = 0.0;
                out.noisy.data[base + i] =
                    tau[i] * out.sigma_g * std::sqrt(2.0 * gamma(rng));
            }
        }
    });
    return out;
}

namespace {

ErrorSummary summarize_errors(std::vector<double> errors, std::size_t skipped) {
    ErrorSummary s;
    s.skipped = skipped;
    if (errors.empty()) throw std::invalid_argument("evaluate: no comparable values");
    estimators::KahanSum acc, acc_abs;
    for (double e : errors) {
        acc.add(e);
        acc_abs.add(std::fabs(e));
    }
    const double n = static_cast<double>(errors.size());
    s.mean = acc.value() / n;
    s.mean_abs = acc_abs.value() / n;
    estimators::KahanSum var;
    for (double e : errors) var.add((e - s.mean) * (e - s.mean));
    s.sd = errors.size() > 1 ? std::sqrt(var.value() / (n - 1.0)) : 0.0;
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    s.errors = std::move(errors);
    return s;
}

} // namespace

ErrorSummary evaluate_field(const Volume4D& estimated, const Volume4D& truth,
                            const std::vector<std::uint8_t>& mask) {
    if (estimated.spatial_size() != truth.spatial_size())
        throw std::invalid_argument("evaluate_field: estimated/truth shapes differ");
    if (!mask.empty() && mask.size() != truth.spatial_size())
        throw std::invalid_argument("evaluate_field: mask shape mismatch");
    std::vector<double> errors;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < truth.spatial_size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const double est = estimated.data[i];
        const double tru = truth.data[i];
        if (!std::isfinite(est) || !(tru != 0.0)) {
            ++skipped;
            continue;
        }
        errors.push_back(100.0 * (est - tru) / tru);
    }
    return summarize_errors(std::move(errors), skipped);
}

ErrorSummary evaluate_slicewise(std::span<const double> slice_estimates, const Volume4D& truth,
                                const std::vector<std::uint8_t>& mask,
                                background::SliceAxis axis) {
    const auto ax = background::resolve_axis(axis);
    const std::size_t n_slices = ax == background::SliceAxis::x   ? truth.nx()
                                 : ax == background::SliceAxis::y ? truth.ny()
                                                                  : truth.nz();
    if (slice_estimates.size() != n_slices)
        throw std::invalid_argument("evaluate_slicewise: estimate count does not match slices");
    if (!mask.empty() && mask.size() != truth.spatial_size())
        throw std::invalid_argument("evaluate_slicewise: mask shape mismatch");

    std::vector<double> errors;
    std::size_t skipped = 0;
    for (std::size_t s = 0; s < n_slices; ++s) {
        estimators::KahanSum acc;
        std::size_t count = 0;
        auto visit = [&](std::size_t x, std::size_t y, std::size_t z) {
            const std::size_t idx = truth.spatial_index(x, y, z);
            if (!mask.empty() && !mask[idx]) return;
            acc.add(truth.data[idx]);
            ++count;
        };
        if (ax == background::SliceAxis::x) {
            for (std::size_t z = 0; z < truth.nz(); ++z)
                for (std::size_t y = 0; y < truth.ny(); ++y) visit(s, y, z);
        } else if (ax == background::SliceAxis::y) {
            for (std::size_t z = 0; z < truth.nz(); ++z)
                for (std::size_t x = 0; x < truth.nx(); ++x) visit(x, s, z);
        } else {
            for (std::size_t y = 0; y < truth.ny(); ++y)
                for (std::size_t x = 0; x < truth.nx(); ++x) visit(x, y, s);
        }
        const double est = slice_estimates[s];
        if (count == 0 || !std::isfinite(est)) {
            ++skipped;
            continue;
        }
        const double ref = acc.value() / static_cast<double>(count);
        if (!(ref != 0.0)) {
            ++skipped;
            continue;
        }
        errors.push_back(100.0 * (est - ref) / ref);
    }
    return summarize_errors(std::move(errors), skipped);
}

} // namespace noisefit::phantom
