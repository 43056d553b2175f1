#ifndef FRITV_MASK_HPP
#define FRITV_MASK_HPP

#include <string>
#include <vector>

#include <Eigen/SVD>

#include "fritv/annihilation.hpp"
#include "fritv/dft.hpp"
#include "fritv/types.hpp"

namespace fritv {

/// Orthonormal trailing right-singular vectors of an annihilation system.
/// Columns are ordered by ascending singular value (best annihilator first).
struct NullBasis {
    FilterSupport support;
    CMatrix vectors;         ///< |Lambda| x P, orthonormal columns
    RVector singular_values; ///< full descending spectrum (padded with zeros if rows < cols)
    double delta = 0.0;
    bool fallback = false;   ///< no singular value passed the threshold; kept the smallest

    int count() const { return static_cast<int>(vectors.cols()); }
};

struct MaskProvenance {
    std::string method;
    double delta = 0.0;
    FilterSupport support;
    int kx_half = 0;
    int ky_half = 0;
};

/// Nonnegative edge mask rasterized from filter coefficients, normalized to max 1.
/// Rendering samples the trigonometric polynomial at corner positions i/n per axis.
struct EdgeMask {
    RMatrix pixels; ///< ny x nx
    MaskProvenance provenance;

    int nx() const { return static_cast<int>(pixels.cols()); }
    int ny() const { return static_cast<int>(pixels.rows()); }
};

struct LsEstimate {
    FilterCoefficients coeffs;
    bool nonunique = false; ///< reduced system was rank-deficient; minimum-norm solution
};

/// Least-squares filter estimate: minimize ||T c|| subject to c[0,0] = 1,
/// by eliminating the DC coordinate and solving the reduced problem with an
/// orthogonal factorization (minimum-norm solution when rank-deficient).
inline LsEstimate estimate_ls(const AnnihilationSystem& sys) {
    const Eigen::Index cols = sys.support.size();
    if (sys.matrix.rows() < cols - 1)
        throw std::invalid_argument("estimate_ls: underdetermined system (rows < |Lambda|-1)");
    LsEstimate est;
    est.coeffs = FilterCoefficients::zero(sys.support);
    const Eigen::Index dc = sys.support.dc_index();
    est.coeffs.coeffs[dc] = Complex(1.0, 0.0);
    if (cols == 1) return est;

    CMatrix rest(sys.matrix.rows(), cols - 1);
    rest.leftCols(dc) = sys.matrix.leftCols(dc);
    rest.rightCols(cols - 1 - dc) = sys.matrix.rightCols(cols - 1 - dc);
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(rest);
    est.nonunique = cod.rank() < cols - 1;
    const CVector sol = cod.solve(-sys.matrix.col(dc));
    est.coeffs.coeffs.head(dc) = sol.head(dc);
    est.coeffs.coeffs.tail(cols - 1 - dc) = sol.tail(cols - 1 - dc);
    return est;
}

struct CadzowResult {
    std::vector<KSpaceGrid> grids;
    RVector objective_history; ///< Frobenius distance to the rank-r set, one entry per round
};

/// Cadzow denoising: alternate rank truncation of each block-Toeplitz matrix
/// with projection back to the structured set (averaging entries that share a
/// k-space sample).
inline CadzowResult cadzow_denoise(const std::vector<KSpaceGrid>& weighted,
                                   FilterSupport support, int rank, int iters) {
    if (weighted.empty()) throw std::invalid_argument("cadzow_denoise: no grids");
    if (iters < 1) throw std::invalid_argument("cadzow_denoise: iters must be >= 1");
    if (rank < 1 || rank >= support.size())
        throw std::invalid_argument("cadzow_denoise: rank must be in [1, |Lambda|)");

    CadzowResult res;
    res.grids = weighted;
    res.objective_history = RVector::Zero(iters);

    const int kxh = weighted.front().kx_half, kyh = weighted.front().ky_half;
    const int mx = kxh - support.k1, my = kyh - support.l1;
    auto axis_count = [](int t, int m_half, int s_half) {
        const int lo = std::max(-m_half, t - s_half);
        const int hi = std::min(m_half, t + s_half);
        return std::max(0, hi - lo + 1);
    };

    for (int it = 0; it < iters; ++it) {
        double obj_sq = 0.0;
        for (auto& g : res.grids) {
            AnnihilationSystem sys = build_system({g}, support);
            Eigen::BDCSVD<CMatrix> svd(sys.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const RVector& sv = svd.singularValues();
            for (Eigen::Index i = rank; i < sv.size(); ++i) obj_sq += sv[i] * sv[i];
            const CMatrix trunc = svd.matrixU().leftCols(rank) *
                                  sv.head(rank).asDiagonal() *
                                  svd.matrixV().leftCols(rank).adjoint();
            KSpaceGrid avg(kxh, kyh);
            Eigen::Index row = 0;
            for (int sy = -my; sy <= my; ++sy)
                for (int sx = -mx; sx <= mx; ++sx, ++row)
                    for (int l = -support.l1; l <= support.l1; ++l)
                        for (int k = -support.k1; k <= support.k1; ++k)
                            avg.at(sx - k, sy - l) += trunc(row, sys.support.index(k, l));
            for (int ky = -kyh; ky <= kyh; ++ky)
                for (int kx = -kxh; kx <= kxh; ++kx)
                    avg.at(kx, ky) /= static_cast<double>(axis_count(kx, mx, support.k1)) *
                                      axis_count(ky, my, support.l1);
            g = avg;
        }
        res.objective_history[it] = std::sqrt(obj_sq);
    }
    return res;
}

/// Right singular vectors with sigma_i <= delta * sigma_1. Falls back to the
/// single smallest-sigma vector (with a flag) when none qualify.
inline NullBasis null_basis(const AnnihilationSystem& sys, double delta) {
    if (sys.matrix.size() == 0) throw std::invalid_argument("null_basis: empty system");
    if (!(delta > 0.0) || delta > 1.0)
        throw std::invalid_argument("null_basis: delta must be in (0, 1]");
    const Eigen::Index rows = sys.matrix.rows(), cols = sys.matrix.cols();
    const unsigned options = rows < cols ? static_cast<unsigned>(Eigen::ComputeFullV)
                                         : static_cast<unsigned>(Eigen::ComputeThinV);
    Eigen::BDCSVD<CMatrix> svd(sys.matrix, options);

    NullBasis nb;
    nb.support = sys.support;
    nb.delta = delta;
    nb.singular_values = RVector::Zero(cols);
    nb.singular_values.head(svd.singularValues().size()) = svd.singularValues();

    const double sigma1 = nb.singular_values[0];
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < cols; ++i)
        if (nb.singular_values[i] <= delta * sigma1) ++p;
    if (p == 0) {
        p = 1;
        nb.fallback = true;
    }
    nb.vectors.resize(cols, p);
    for (Eigen::Index i = 0; i < p; ++i) nb.vectors.col(i) = svd.matrixV().col(cols - 1 - i);
    return nb;
}

namespace detail {

inline EdgeMask finalize_mask(RMatrix pixels, MaskProvenance prov) {
    const double maxv = pixels.maxCoeff();
    if (!(maxv > 0.0)) throw std::invalid_argument("mask rendering: all-zero coefficients");
    pixels /= maxv;
    return EdgeMask{std::move(pixels), std::move(prov)};
}

} // namespace detail

/// Sum-of-squares average of the masks rendered from each basis vector:
/// pixel = sqrt((1/P) sum_i |mu_i(r)|^2), normalized to max 1. Placing 1/P
/// inside the root leaves the zero set and the normalized mask unchanged.
inline EdgeMask render_mask(const NullBasis& basis, int nx, int ny) {
    if (basis.count() < 1) throw std::invalid_argument("render_mask: empty basis");
    RMatrix acc = RMatrix::Zero(ny, nx);
    for (int i = 0; i < basis.count(); ++i) {
        const FilterCoefficients c(basis.support, basis.vectors.col(i));
        acc += detail::eval_trig_poly(c, nx, ny).cwiseAbs2();
    }
    const RMatrix pixels = (acc / basis.count()).cwiseSqrt();
    return detail::finalize_mask(pixels,
                                 MaskProvenance{"nullavg", basis.delta, basis.support, 0, 0});
}

/// |F^{-1}[c]| on the rendering grid, normalized to max 1.
inline EdgeMask render_single_mask(const FilterCoefficients& c, int nx, int ny) {
    if (c.coeffs.size() == 0 || c.coeffs.isZero(0.0))
        throw std::invalid_argument("render_single_mask: zero coefficients");
    const RMatrix pixels = detail::eval_trig_poly(c, nx, ny).cwiseAbs();
    return detail::finalize_mask(pixels, MaskProvenance{"single", 0.0, c.support, 0, 0});
}

enum class MaskMethod { least_squares, cadzow, null_average };

inline std::string to_string(MaskMethod m) {
    switch (m) {
        case MaskMethod::least_squares: return "ls";
        case MaskMethod::cadzow: return "cadzow";
        case MaskMethod::null_average: return "nullavg";
    }
    return "?";
}

/// Half the data half-width per axis; guarantees a well-overdetermined valid region.
inline FilterSupport default_support(const KSpaceGrid& ksp) {
    return FilterSupport{ksp.kx_half / 2, ksp.ky_half / 2};
}

struct PipelineParams {
    FilterSupport support;
    double delta = 0.1;      ///< 1e-8 suits noiseless data, 0.1 noisy data
    int cadzow_rank = 0;     ///< 0: |Lambda| - expected_nullity, or |Lambda| - 1
    int cadzow_iters = 10;
    int expected_nullity = 0;
    int render_nx = 256;
    int render_ny = 256;
    bool normalize_rows = false;
    bool with_spectrum = false; ///< also compute singular values on ls/cadzow paths
};

struct PipelineResult {
    EdgeMask mask;
    FilterCoefficients coeffs;  ///< ls solution (least_squares / cadzow methods)
    NullBasis basis;            ///< null_average method
    RVector singular_values;
    double residual = 0.0;
    bool nonunique = false;
    int null_dim = 0;
};

/// Full first-stage pipeline: {dx, dy} derivative weighting, optional Cadzow
/// denoising, system assembly, filter estimation, mask rendering.
inline PipelineResult estimate_pipeline(const KSpaceGrid& ksp, MaskMethod method,
                                        const PipelineParams& params) {
    std::vector<KSpaceGrid> weighted{derivative_weight(ksp, DerivativeKind::dx),
                                     derivative_weight(ksp, DerivativeKind::dy)};
    const std::vector<DerivativeKind> kinds{DerivativeKind::dx, DerivativeKind::dy};
    const FilterSupport support = params.support;

    if (method == MaskMethod::cadzow) {
        int rank = params.cadzow_rank;
        if (rank <= 0)
            rank = static_cast<int>(support.size()) -
                   (params.expected_nullity > 0 ? params.expected_nullity : 1);
        weighted = cadzow_denoise(weighted, support, rank, params.cadzow_iters).grids;
    }
    AnnihilationSystem sys = build_system(weighted, support, kinds, params.normalize_rows);

    PipelineResult res;
    if (method == MaskMethod::null_average) {
        res.basis = null_basis(sys, params.delta);
        res.null_dim = res.basis.count();
        res.singular_values = res.basis.singular_values;
        res.residual = annihilation_residual(
            sys, FilterCoefficients(support, res.basis.vectors.col(0)));
        res.mask = render_mask(res.basis, params.render_nx, params.render_ny);
    } else {
        LsEstimate est = estimate_ls(sys);
        res.coeffs = est.coeffs;
        res.nonunique = est.nonunique;
        res.residual = annihilation_residual(sys, est.coeffs);
        res.mask = render_single_mask(est.coeffs, params.render_nx, params.render_ny);
        if (params.with_spectrum) {
            Eigen::BDCSVD<CMatrix> svd(sys.matrix);
            res.singular_values = RVector::Zero(sys.matrix.cols());
            res.singular_values.head(svd.singularValues().size()) = svd.singularValues();
        }
    }
    res.mask.provenance =
        MaskProvenance{to_string(method), params.delta, support, ksp.kx_half, ksp.ky_half};
    return res;
}

} // namespace fritv

#endif // FRITV_MASK_HPP
