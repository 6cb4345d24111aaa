#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace noisefit {

enum class Dtype : std::uint8_t { u8, i16, f32, f64 };

// X*Y*Z*K grid of magnitude samples, x fastest, stored in double
// precision regardless of the on-disk dtype.
struct Volume4D {
    std::array<std::size_t, 4> dim{0, 0, 0, 0}; // x, y, z, k
    std::array<double, 3> voxel_dims{1.0, 1.0, 1.0};
    Dtype dtype_origin = Dtype::f64;
    double scl_slope = 1.0;
    double scl_inter = 0.0;
    std::vector<double> data;

    // Count of negative on-disk samples clamped to zero at load.
    std::size_t negative_clamped = 0;

    // Native-order copy of the source NIfTI header, echoed on write so
    // orientation/affine fields survive a round trip.
    std::vector<std::uint8_t> source_header;

    Volume4D() = default;
    Volume4D(std::size_t x, std::size_t y, std::size_t z, std::size_t k)
        : dim{x, y, z, k}, data(x * y * z * k, 0.0) {}

    std::size_t nx() const { return dim[0]; }
    std::size_t ny() const { return dim[1]; }
    std::size_t nz() const { return dim[2]; }
    std::size_t nk() const { return dim[3]; }
    std::size_t spatial_size() const { return dim[0] * dim[1] * dim[2]; }
    std::size_t size() const { return spatial_size() * dim[3]; }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z, std::size_t k) const {
        return ((k * dim[2] + z) * dim[1] + y) * dim[0] + x;
    }
    std::size_t spatial_index(std::size_t x, std::size_t y, std::size_t z) const {
        return (z * dim[1] + y) * dim[0] + x;
    }
    double& at(std::size_t x, std::size_t y, std::size_t z, std::size_t k) {
        return data[index(x, y, z, k)];
    }
    double at(std::size_t x, std::size_t y, std::size_t z, std::size_t k) const {
        return data[index(x, y, z, k)];
    }
};

} // namespace noisefit
