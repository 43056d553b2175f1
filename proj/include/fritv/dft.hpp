#ifndef FRITV_DFT_HPP
#define FRITV_DFT_HPP

#include <cmath>

#include "fritv/types.hpp"

namespace fritv::detail {

constexpr double two_pi = 6.283185307179586476925286766559;

/// Phase matrix P of shape (n_points x (2*k_half+1)) with
/// P(i, k + k_half) = exp(sign * j * 2*pi * k * (i + offset) / n_points).
inline CMatrix point_phase_matrix(int n_points, int k_half, double sign, double offset) {
    CMatrix p(n_points, 2 * k_half + 1);
    for (int i = 0; i < n_points; ++i) {
        const double r = (static_cast<double>(i) + offset) / n_points;
        for (int k = -k_half; k <= k_half; ++k) {
            const double phase = sign * two_pi * k * r;
            p(i, k + k_half) = Complex(std::cos(phase), std::sin(phase));
        }
    }
    return p;
}

/// Coefficients as a (ny x nx) matrix with C(l + l1, k + k1) = coeffs[(l+l1)*(2k1+1)+(k+k1)].
inline CMatrix coeff_matrix(const FilterCoefficients& c) {
    CMatrix m(c.support.ny(), c.support.nx());
    for (int l = -c.support.l1; l <= c.support.l1; ++l)
        for (int k = -c.support.k1; k <= c.support.k1; ++k)
            m(l + c.support.l1, k + c.support.k1) = c.at(k, l);
    return m;
}

/// Evaluates the trigonometric polynomial sum_k c[k] exp(j 2 pi <k, r>) on an
/// (ny x nx) spatial grid with sample positions r = ((ix+offset)/nx, (iy+offset)/ny).
inline CMatrix eval_trig_poly(const FilterCoefficients& c, int nx, int ny, double offset = 0.0) {
    const CMatrix cm = coeff_matrix(c);
    const CMatrix py = point_phase_matrix(ny, c.support.l1, +1.0, offset);
    const CMatrix px = point_phase_matrix(nx, c.support.k1, +1.0, offset);
    return py * cm * px.transpose();
}

/// Fourier-series coefficients of a real image sampled at corners r = i/m:
/// values[k] = (1/(mx*my)) * sum_i img(iy, ix) exp(-j 2 pi <k, i/m>),
/// restricted to the centered window. Split into real GEMMs to avoid a
/// complex copy of the (large) image.
inline KSpaceGrid window_series_of_real(const RMatrix& img, int kx_half, int ky_half) {
    const Eigen::Index my = img.rows(), mx = img.cols();
    const CMatrix wx = point_phase_matrix(static_cast<int>(mx), kx_half, -1.0, 0.0);
    const CMatrix wy = point_phase_matrix(static_cast<int>(my), ky_half, -1.0, 0.0);
    const RMatrix t_re = img * wx.real(); // my x (2Kx+1)
    const RMatrix t_im = img * wx.imag();
    CMatrix t(my, wx.cols());
    t.real() = t_re;
    t.imag() = t_im;
    const CMatrix g = wy.transpose() * t; // (2Ky+1) x (2Kx+1)
    KSpaceGrid out(kx_half, ky_half);
    const double scale = 1.0 / (static_cast<double>(mx) * static_cast<double>(my));
    for (int ky = -ky_half; ky <= ky_half; ++ky)
        for (int kx = -kx_half; kx <= kx_half; ++kx)
            out.at(kx, ky) = scale * g(ky + ky_half, kx + kx_half);
    return out;
}

} // namespace fritv::detail

#endif // FRITV_DFT_HPP
