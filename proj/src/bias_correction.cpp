#include "noisefit/bias_correction.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "noisefit/parallel.hpp"
#include "noisefit/specfun.hpp"

namespace noisefit::bias {

double beta_n(double n_dof) {
    if (!(n_dof > 0.0)) throw std::domain_error("beta_n: requires n_dof > 0");
    return std::sqrt(2.0) *
           std::exp(specfun::ln_gamma(n_dof + 0.5) - specfun::ln_gamma(n_dof));
}

double xi(double eta, double sigma_g, double n_dof) {
    if (!(sigma_g > 0.0)) throw std::domain_error("xi: requires sigma_g > 0");
    if (!(n_dof > 0.0)) throw std::domain_error("xi: requires n_dof > 0");
    if (!(eta >= 0.0)) throw std::domain_error("xi: requires eta >= 0");
    const double snr2 = eta * eta / (sigma_g * sigma_g);
    const double mean_ratio = beta_n(n_dof) * specfun::kummer_1f1(-0.5, n_dof, -0.5 * snr2);
    return 2.0 * n_dof + snr2 - mean_ratio * mean_ratio;
}

EtaResult correct_eta(double m_hat, double sigma_g, double n_dof, double tolerance,
                      int max_iterations) {
    if (!(m_hat >= 0.0)) throw std::domain_error("correct_eta: requires m_hat >= 0");
    if (!(sigma_g >= 0.0)) throw std::domain_error("correct_eta: requires sigma_g >= 0");
    if (!(tolerance > 0.0)) throw std::domain_error("correct_eta: requires tolerance > 0");
    EtaResult res;
    if (sigma_g == 0.0) { // noiseless limit
        res.eta = m_hat;
        res.converged = true;
        return res;
    }
    const double s2 = sigma_g * sigma_g;
    const double m2 = m_hat * m_hat;
    double eta = m_hat;
    for (int it = 0; it < max_iterations; ++it) {
        const double radicand = m2 + (xi(eta, sigma_g, n_dof) - 2.0 * n_dof) * s2;
        const double next = radicand > 0.0 ? std::sqrt(radicand) : 0.0;
        res.iterations = it + 1;
        res.clamped = radicand <= 0.0;
        if (std::fabs(next - eta) < tolerance * sigma_g) {
            res.eta = next;
            res.converged = true;
            return res;
        }
        eta = next;
    }
    res.eta = eta;
    res.converged = false;
    return res;
}

Volume4D boxcar3(const Volume4D& volume) {
    // separable 3-tap mean with clamped borders, per volume index
    Volume4D out = volume;
    const std::array<std::size_t, 3> dims{volume.nx(), volume.ny(), volume.nz()};
    std::vector<double> buf(volume.data.size());

    auto pass = [&](std::vector<double>& src, std::vector<double>& dst, int axis) {
        const std::size_t nx = dims[0], ny = dims[1], nz = dims[2];
        for (std::size_t k = 0; k < volume.nk(); ++k) {
            const std::size_t base = k * volume.spatial_size();
            for (std::size_t z = 0; z < nz; ++z)
                for (std::size_t y = 0; y < ny; ++y)
                    for (std::size_t x = 0; x < nx; ++x) {
                        std::size_t lo[3] = {x, y, z}, hi[3] = {x, y, z};
                        const std::size_t c = axis == 0 ? x : axis == 1 ? y : z;
                        const std::size_t n = axis == 0 ? nx : axis == 1 ? ny : nz;
                        if (c > 0) lo[axis] = c - 1;
                        if (c + 1 < n) hi[axis] = c + 1;
                        double acc = 0.0;
                        std::size_t cnt = 0;
                        for (std::size_t i = lo[axis]; i <= hi[axis]; ++i) {
                            std::size_t p[3] = {x, y, z};
                            p[axis] = i;
                            acc += src[base + (p[2] * ny + p[1]) * nx + p[0]];
                            ++cnt;
                        }
                        dst[base + (z * ny + y) * nx + x] = acc / static_cast<double>(cnt);
                    }
        }
    };
    pass(out.data, buf, 0);
    pass(buf, out.data, 1);
    pass(out.data, buf, 2);
    out.data = std::move(buf);
    return out;
}

Volume4D correct_volume(const Volume4D& volume, const ScalarOrField& sigma,
                        const ScalarOrField& n_dof, Smoothing smoothing,
                        CorrectionStats* stats, int threads) {
    auto check_field = [&](const ScalarOrField& p, const char* name) {
        if (!p.field) return;
        if (p.field->nk() != 1 || p.field->nx() != volume.nx() ||
            p.field->ny() != volume.ny() || p.field->nz() != volume.nz())
            throw std::invalid_argument(
                std::string(name) + " field shape (" + std::to_string(p.field->nx()) + "x" +
                std::to_string(p.field->ny()) + "x" + std::to_string(p.field->nz()) + "x" +
                std::to_string(p.field->nk()) + ") does not match volume (" +
                std::to_string(volume.nx()) + "x" + std::to_string(volume.ny()) + "x" +
                std::to_string(volume.nz()) + ")");
    };
    check_field(sigma, "sigma");
    check_field(n_dof, "n");

    const Volume4D* source = &volume;
    Volume4D smoothed;
    if (smoothing == Smoothing::box3) {
        smoothed = boxcar3(volume);
        source = &smoothed;
    }

    Volume4D out = volume;
    std::atomic<std::size_t> clamped{0}, nonconverged{0};
    const std::size_t sp = volume.spatial_size();
    parallel_for(sp, threads, [&](std::size_t v) {
        const double sg = sigma.at(v);
        const double nd = n_dof.at(v);
        std::size_t local_clamped = 0, local_bad = 0;
        for (std::size_t k = 0; k < volume.nk(); ++k) {
            const std::size_t idx = k * sp + v;
            const auto res = correct_eta(source->data[idx], sg, nd);
            out.data[idx] = res.eta;
            if (res.clamped) ++local_clamped;
            if (!res.converged) ++local_bad;
        }
        if (local_clamped) clamped += local_clamped;
        if (local_bad) nonconverged += local_bad;
    });
    if (stats) {
        stats->clamped = clamped.load();
        stats->nonconverged = nonconverged.load();
    }
    return out;
}

} // namespace noisefit::bias
