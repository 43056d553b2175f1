#ifndef FRITV_PHANTOM_HPP
#define FRITV_PHANTOM_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fritv/dft.hpp"
#include "fritv/types.hpp"

namespace fritv {

/// Amplitude-weighted ellipse region, FOV-normalized: the field of view is [0,1]^2.
struct Ellipse {
    double center_x = 0.5;
    double center_y = 0.5;
    double semi_a = 0.25; ///< semi-axis along the (pre-rotation) x direction, FOV fraction
    double semi_b = 0.25; ///< semi-axis along the (pre-rotation) y direction, FOV fraction
    double angle = 0.0;   ///< rotation of the axes, radians, counterclockwise
    double amplitude = 1.0;

    bool contains(double x, double y) const {
        const double dx = x - center_x, dy = y - center_y;
        const double c = std::cos(angle), s = std::sin(angle);
        const double u = c * dx + s * dy;
        const double v = -s * dx + c * dy;
        const double ua = u / semi_a, vb = v / semi_b;
        return ua * ua + vb * vb <= 1.0;
    }
};

struct PhantomSpec {
    std::string name;
    std::vector<Ellipse> ellipses;
};

/// Hard invariants throw; soft geometry issues come back as warnings.
inline std::vector<std::string> validate(const PhantomSpec& spec) {
    if (spec.ellipses.empty()) throw std::invalid_argument("PhantomSpec: empty ellipse list");
    std::vector<std::string> warnings;
    int idx = 0;
    for (const auto& e : spec.ellipses) {
        if (!(e.semi_a > 0.0) || !(e.semi_b > 0.0))
            throw std::invalid_argument("PhantomSpec: non-positive semi-axis in ellipse " +
                                        std::to_string(idx));
        if (!std::isfinite(e.amplitude))
            throw std::invalid_argument("PhantomSpec: non-finite amplitude in ellipse " +
                                        std::to_string(idx));
        const double c = std::cos(e.angle), s = std::sin(e.angle);
        const double hx = std::hypot(e.semi_a * c, e.semi_b * s);
        const double hy = std::hypot(e.semi_a * s, e.semi_b * c);
        if (e.center_x - hx < 0.0 || e.center_x + hx > 1.0 || e.center_y - hy < 0.0 ||
            e.center_y + hy > 1.0)
            warnings.push_back("ellipse " + std::to_string(idx) +
                               " extends beyond the [0,1]^2 field of view");
        ++idx;
    }
    return warnings;
}

/// Canonical 10-ellipse Shepp-Logan parameter set, mapped from the usual
/// [-1,1]^2 table onto the [0,1]^2 field of view. Intensities follow the
/// Toft variant in common use for MR simulation.
inline PhantomSpec shepp_logan_spec() {
    struct Row {
        double amp, a, b, x0, y0, phi_deg;
    };
    static constexpr Row rows[] = {
        {1.0, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
        {-0.8, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
        {-0.2, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
        {-0.2, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
        {0.1, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
        {0.1, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
        {0.1, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
        {0.1, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
        {0.1, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
        {0.1, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
    };
    PhantomSpec spec;
    spec.name = "shepp-logan";
    for (const Row& r : rows) {
        Ellipse e;
        e.center_x = 0.5 * (1.0 + r.x0);
        e.center_y = 0.5 * (1.0 + r.y0);
        e.semi_a = 0.5 * r.a;
        e.semi_b = 0.5 * r.b;
        e.angle = r.phi_deg * detail::two_pi / 360.0;
        e.amplitude = r.amp;
        spec.ellipses.push_back(e);
    }
    return spec;
}

namespace detail {

/// 2*pi*J1(x)/x, the radial profile of a unit-disk indicator transform.
inline double disk_profile(double x) {
    if (x < 1e-4) {
        const double x2 = x * x;
        return two_pi * (0.5 - x2 / 16.0 + x2 * x2 / 384.0);
    }
    return two_pi * std::cyl_bessel_j(1.0, x) / x;
}

} // namespace detail

/// Exact Fourier-series coefficients of the ellipse phantom on the centered
/// integer-frequency window, values[k] = sum_e amp_e * F[1_ellipse](2 pi k).
inline KSpaceGrid ellipse_kspace(const PhantomSpec& spec, int kx_half, int ky_half) {
    validate(spec);
    KSpaceGrid grid(kx_half, ky_half);
    for (const auto& e : spec.ellipses) {
        const double c = std::cos(e.angle), s = std::sin(e.angle);
        const double area_coef = e.amplitude * e.semi_a * e.semi_b;
        for (int ky = -ky_half; ky <= ky_half; ++ky) {
            for (int kx = -kx_half; kx <= kx_half; ++kx) {
                const double u = c * kx + s * ky;
                const double v = -s * kx + c * ky;
                const double rho =
                    detail::two_pi * std::hypot(e.semi_a * u, e.semi_b * v);
                const double phase = -detail::two_pi * (kx * e.center_x + ky * e.center_y);
                grid.at(kx, ky) += area_coef * detail::disk_profile(rho) *
                                   Complex(std::cos(phase), std::sin(phase));
            }
        }
    }
    return grid;
}

/// Supersampled rasterization on pixel centers ((i+0.5)/n per axis).
inline RMatrix rasterize(const PhantomSpec& spec, int nx, int ny, int supersample = 1) {
    validate(spec);
    if (nx < 8 || ny < 8) throw std::invalid_argument("rasterize: size must be >= 8 per axis");
    if (supersample < 1) throw std::invalid_argument("rasterize: supersample must be >= 1");
    RMatrix img = RMatrix::Zero(ny, nx);
    const double inv_ss = 1.0 / supersample;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double acc = 0.0;
            for (int sy = 0; sy < supersample; ++sy) {
                const double y = (iy + (sy + 0.5) * inv_ss) / ny;
                for (int sx = 0; sx < supersample; ++sx) {
                    const double x = (ix + (sx + 0.5) * inv_ss) / nx;
                    for (const auto& e : spec.ellipses)
                        if (e.contains(x, y)) acc += e.amplitude;
                }
            }
            img(iy, ix) = acc * inv_ss * inv_ss;
        }
    }
    return img;
}

/// Phantom whose region is {mu > 0} for a real-valued bandlimited trigonometric
/// polynomial mu; exact model for the edge-annihilation theory.
struct TrigRegionPhantom {
    FilterCoefficients mu_coeffs;
    double amplitude = 1.0;
};

namespace detail {

inline void require_conjugate_symmetric(const FilterCoefficients& c, double rel_tol = 1e-12) {
    const double scale = c.coeffs.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw std::invalid_argument("trig coefficients are all zero");
    for (int l = -c.support.l1; l <= c.support.l1; ++l)
        for (int k = -c.support.k1; k <= c.support.k1; ++k)
            if (std::abs(c.at(k, l) - std::conj(c.at(-k, -l))) > rel_tol * scale)
                throw std::invalid_argument(
                    "trig coefficients are not conjugate-symmetric (mu must be real)");
}

/// Rasterizes 1_{mu > 0} at corner samples i/m, row by row to keep memory flat.
inline RMatrix rasterize_indicator(const FilterCoefficients& mu, int m) {
    const CMatrix cm = coeff_matrix(mu);
    const CMatrix px = point_phase_matrix(m, mu.support.k1, +1.0, 0.0);
    const CMatrix sx = cm * px.transpose(); // (2*l1+1) x m, per-row x-profiles
    RMatrix img(m, m);
    Eigen::RowVectorXcd row(m);
    for (int iy = 0; iy < m; ++iy) {
        const double y = static_cast<double>(iy) / m;
        row.setZero();
        for (int l = -mu.support.l1; l <= mu.support.l1; ++l) {
            const double phase = two_pi * l * y;
            row += Complex(std::cos(phase), std::sin(phase)) * sx.row(l + mu.support.l1);
        }
        for (int ix = 0; ix < m; ++ix) img(iy, ix) = row[ix].real() > 0.0 ? 1.0 : 0.0;
    }
    return img;
}

} // namespace detail

/// Conjugate symmetry (mu real) is a hard invariant; the zero set must also
/// have measure zero, checked numerically on a fine grid.
inline void validate(const TrigRegionPhantom& ph, int grid_n = 512) {
    detail::require_conjugate_symmetric(ph.mu_coeffs);
    const CMatrix mu = detail::eval_trig_poly(ph.mu_coeffs, grid_n, grid_n);
    const double scale = mu.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw std::invalid_argument("TrigRegionPhantom: mu vanishes identically");
    const double near_zero =
        (mu.cwiseAbs().array() <= 1e-12 * scale).count() / static_cast<double>(mu.size());
    if (near_zero > 1e-3)
        throw std::invalid_argument("TrigRegionPhantom: zero set of mu has positive measure");
}

/// O(h)-accurate oracle for the Fourier-series coefficients of amplitude * 1_{mu>0}:
/// rasterize the indicator on an oversample^2 grid, take the DFT, extract the window.
/// The indicator discontinuity limits the order, so errors shrink linearly in 1/oversample.
inline KSpaceGrid trig_region_kspace(const TrigRegionPhantom& ph, int kx_half, int ky_half,
                                     int oversample) {
    validate(ph);
    const int bw = std::max(2 * kx_half + 1, 2 * ky_half + 1);
    if (oversample < 4 * bw)
        throw std::invalid_argument("trig_region_kspace: oversample must be >= 4x bandwidth");
    const RMatrix ind = detail::rasterize_indicator(ph.mu_coeffs, oversample);
    const double frac = ind.sum() / (static_cast<double>(oversample) * oversample);
    if (frac <= 0.0 || frac >= 1.0) {
        // Degenerate only when mu never changes sign; mu == const is still valid.
        KSpaceGrid out(kx_half, ky_half);
        out.at(0, 0) = frac * ph.amplitude;
        return out;
    }
    KSpaceGrid out = detail::window_series_of_real(ind, kx_half, ky_half);
    out.values *= ph.amplitude;
    return out;
}

/// Noisy acquisition: grid + the realized noise vector and the sigma used.
struct NoisyKSpace {
    KSpaceGrid grid;
    CVector noise;
    double sigma = 0.0;
};

/// Adds i.i.d. complex white Gaussian noise scaled so the expected measurement
/// SNR (20 log10(||b|| / ||n||)) equals snr_db. snr_db = +inf is the no-noise
/// sentinel. Deterministic in (seed, index); draws are counter-based.
inline NoisyKSpace add_noise(const KSpaceGrid& ksp, double snr_db, std::uint64_t seed) {
    if (ksp.size() == 0) throw std::invalid_argument("add_noise: empty grid");
    NoisyKSpace out;
    out.grid = ksp;
    out.noise = CVector::Zero(ksp.size());
    if (snr_db == std::numeric_limits<double>::infinity()) return out;
    if (!std::isfinite(snr_db)) throw std::invalid_argument("add_noise: snr_db must be finite");
    const double b_norm = ksp.values.norm();
    const double n = static_cast<double>(ksp.size());
    out.sigma = b_norm / (std::pow(10.0, snr_db / 20.0) * std::sqrt(2.0 * n));
    for (Eigen::Index i = 0; i < ksp.size(); ++i)
        out.noise[i] = out.sigma * detail::counter_gaussian(seed, static_cast<std::uint64_t>(i));
    out.grid.values += out.noise;
    return out;
}

} // namespace fritv

#endif // FRITV_PHANTOM_HPP
