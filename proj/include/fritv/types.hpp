#ifndef FRITV_TYPES_HPP
#define FRITV_TYPES_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fritv {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Thrown when a file cannot be read, written, or parsed.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when window/support geometry leaves no usable data
/// (empty valid region, window larger than the image spectrum).
struct geometry_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an iterative solver detects a persistently increasing objective.
struct divergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Complex Fourier samples on a centered Cartesian integer-frequency window
/// [-kx_half, kx_half] x [-ky_half, ky_half], in cycles per field of view.
/// Storage is row-major with kx fastest.
struct KSpaceGrid {
    int kx_half = 0;
    int ky_half = 0;
    CVector values;

    KSpaceGrid() = default;
    KSpaceGrid(int kxh, int kyh)
        : kx_half(kxh), ky_half(kyh),
          values(CVector::Zero(static_cast<Eigen::Index>(2 * kxh + 1) * (2 * kyh + 1))) {
        if (kxh < 0 || kyh < 0) throw std::invalid_argument("KSpaceGrid: negative half-width");
    }

    int nx() const { return 2 * kx_half + 1; }
    int ny() const { return 2 * ky_half + 1; }
    Eigen::Index size() const { return values.size(); }

    Eigen::Index index(int kx, int ky) const {
        return static_cast<Eigen::Index>(ky + ky_half) * nx() + (kx + kx_half);
    }
    Complex& at(int kx, int ky) { return values[index(kx, ky)]; }
    const Complex& at(int kx, int ky) const { return values[index(kx, ky)]; }

    bool same_extents(const KSpaceGrid& o) const {
        return kx_half == o.kx_half && ky_half == o.ky_half;
    }
};

/// Rectangular filter support Lambda = [-k1,k1] x [-l1,l1].
struct FilterSupport {
    int k1 = 0;
    int l1 = 0;

    int nx() const { return 2 * k1 + 1; }
    int ny() const { return 2 * l1 + 1; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(nx()) * ny(); }
    Eigen::Index index(int kx, int ky) const {
        return static_cast<Eigen::Index>(ky + l1) * nx() + (kx + k1);
    }
    Eigen::Index dc_index() const { return index(0, 0); }
    bool operator==(const FilterSupport&) const = default;
};

/// Complex filter coefficients on a FilterSupport, row-major with kx fastest.
struct FilterCoefficients {
    FilterSupport support;
    CVector coeffs;

    FilterCoefficients() = default;
    FilterCoefficients(FilterSupport s, CVector c) : support(s), coeffs(std::move(c)) {
        if (coeffs.size() != support.size())
            throw std::invalid_argument("FilterCoefficients: size does not match support");
    }

    static FilterCoefficients zero(FilterSupport s) {
        return FilterCoefficients(s, CVector::Zero(s.size()));
    }

    Complex& at(int kx, int ky) { return coeffs[support.index(kx, ky)]; }
    const Complex& at(int kx, int ky) const { return coeffs[support.index(kx, ky)]; }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform double in (0, 1], derived from a seed and a counter.
/// Counter-based so per-index draws are independent of evaluation order.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t bits = splitmix64(splitmix64(seed) ^ splitmix64(counter + 1));
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
}

/// Standard complex Gaussian pair (unit variance per real component).
inline Complex counter_gaussian(std::uint64_t seed, std::uint64_t index) {
    const double u1 = counter_uniform(seed, 2 * index);
    const double u2 = counter_uniform(seed, 2 * index + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    return Complex(r * std::cos(two_pi * u2), r * std::sin(two_pi * u2));
}

} // namespace detail

} // namespace fritv

#endif // FRITV_TYPES_HPP
