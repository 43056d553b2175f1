#ifndef FRITV_ANNIHILATION_HPP
#define FRITV_ANNIHILATION_HPP

#include <string>
#include <vector>

#include "fritv/dft.hpp"
#include "fritv/types.hpp"

namespace fritv {

enum class DerivativeKind { dx, dy, dxx, dyy, dxy, laplacian };

inline std::string to_string(DerivativeKind k) {
    switch (k) {
        case DerivativeKind::dx: return "dx";
        case DerivativeKind::dy: return "dy";
        case DerivativeKind::dxx: return "dxx";
        case DerivativeKind::dyy: return "dyy";
        case DerivativeKind::dxy: return "dxy";
        case DerivativeKind::laplacian: return "laplacian";
    }
    return "?";
}

namespace detail {

/// Fourier transfer factor of the derivative at omega = 2 pi k.
inline Complex derivative_factor(DerivativeKind kind, int kx, int ky) {
    const double wx = two_pi * kx, wy = two_pi * ky;
    switch (kind) {
        case DerivativeKind::dx: return Complex(0.0, -wx);
        case DerivativeKind::dy: return Complex(0.0, -wy);
        case DerivativeKind::dxx: return Complex(-wx * wx, 0.0);
        case DerivativeKind::dyy: return Complex(-wy * wy, 0.0);
        case DerivativeKind::dxy: return Complex(-wx * wy, 0.0);
        case DerivativeKind::laplacian: return Complex(-(wx * wx + wy * wy), 0.0);
    }
    return Complex(0.0, 0.0);
}

} // namespace detail

/// Pointwise multiplication by the derivative transfer factor.
inline KSpaceGrid derivative_weight(const KSpaceGrid& ksp, DerivativeKind kind) {
    KSpaceGrid out = ksp;
    for (int ky = -ksp.ky_half; ky <= ksp.ky_half; ++ky)
        for (int kx = -ksp.kx_half; kx <= ksp.kx_half; ++kx)
            out.at(kx, ky) *= detail::derivative_factor(kind, kx, ky);
    return out;
}

/// Stacked block-Toeplitz system: matrix * c evaluates the valid-region 2-D
/// convolutions of each weighted grid with the filter, derivative-kind-major,
/// then ky, then kx over shifts.
struct AnnihilationSystem {
    CMatrix matrix;
    int kx_half = 0;
    int ky_half = 0;
    FilterSupport support;
    std::vector<DerivativeKind> kinds;

    int shifts_x() const { return 2 * (kx_half - support.k1) + 1; }
    int shifts_y() const { return 2 * (ky_half - support.l1) + 1; }
    Eigen::Index shifts_per_grid() const {
        return static_cast<Eigen::Index>(shifts_x()) * shifts_y();
    }
};

inline AnnihilationSystem build_system(const std::vector<KSpaceGrid>& weighted,
                                       FilterSupport support,
                                       std::vector<DerivativeKind> kinds = {},
                                       bool normalize_rows = false) {
    if (weighted.empty()) throw std::invalid_argument("build_system: no grids");
    for (const auto& g : weighted)
        if (!g.same_extents(weighted.front()))
            throw std::invalid_argument("build_system: grids must share extents");
    const int kxh = weighted.front().kx_half, kyh = weighted.front().ky_half;
    if (support.k1 > kxh || support.l1 > kyh)
        throw geometry_error("build_system: filter support larger than the data window");

    AnnihilationSystem sys;
    sys.kx_half = kxh;
    sys.ky_half = kyh;
    sys.support = support;
    sys.kinds = std::move(kinds);
    const Eigen::Index n_shifts = sys.shifts_per_grid();
    if (n_shifts <= 0) throw geometry_error("build_system: empty valid region");
    const Eigen::Index cols = support.size();
    sys.matrix.resize(n_shifts * static_cast<Eigen::Index>(weighted.size()), cols);

    Eigen::Index row = 0;
    const int mx = kxh - support.k1, my = kyh - support.l1;
    for (const auto& g : weighted) {
        for (int sy = -my; sy <= my; ++sy) {
            for (int sx = -mx; sx <= mx; ++sx, ++row) {
                for (int l = -support.l1; l <= support.l1; ++l)
                    for (int k = -support.k1; k <= support.k1; ++k)
                        sys.matrix(row, support.index(k, l)) = g.at(sx - k, sy - l);
            }
        }
    }
    if (normalize_rows) {
        for (Eigen::Index r = 0; r < sys.matrix.rows(); ++r) {
            const double nrm = sys.matrix.row(r).norm();
            if (nrm > 0.0) sys.matrix.row(r) /= nrm;
        }
    }
    return sys;
}

/// Scale-free annihilation quality: ||T c||_2 / (||T||_F ||c||_2).
inline double annihilation_residual(const AnnihilationSystem& sys,
                                    const FilterCoefficients& c) {
    if (!(c.support == sys.support))
        throw std::invalid_argument("annihilation_residual: support mismatch");
    const double c_norm = c.coeffs.norm();
    if (!(c_norm > 0.0))
        throw std::invalid_argument("annihilation_residual: zero coefficient vector");
    const double t_norm = sys.matrix.norm();
    if (!(t_norm > 0.0)) return 0.0;
    return (sys.matrix * c.coeffs).norm() / (t_norm * c_norm);
}

/// 2-D self-convolution of the coefficients; support half-widths double.
inline FilterCoefficients square_coeffs(const FilterCoefficients& mu) {
    const FilterSupport in = mu.support;
    FilterCoefficients out = FilterCoefficients::zero({2 * in.k1, 2 * in.l1});
    for (int la = -in.l1; la <= in.l1; ++la)
        for (int ka = -in.k1; ka <= in.k1; ++ka) {
            const Complex a = mu.at(ka, la);
            if (a == Complex(0.0, 0.0)) continue;
            for (int lb = -in.l1; lb <= in.l1; ++lb)
                for (int kb = -in.k1; kb <= in.k1; ++kb)
                    out.at(ka + kb, la + lb) += a * mu.at(kb, lb);
        }
    return out;
}

} // namespace fritv

#endif // FRITV_ANNIHILATION_HPP
