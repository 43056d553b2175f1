#ifndef FRITV_RECON_HPP
#define FRITV_RECON_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fritv/dft.hpp"
#include "fritv/mask.hpp"
#include "fritv/types.hpp"

namespace fritv {

/// Complex image, row iy / column ix, pixel centers at ((ix+0.5)/nx, (iy+0.5)/ny).
using Image = CMatrix;

/// Partial Fourier sampling: a centered rectangular window of the unitary DFT
/// taken at pixel-center phases, so that A A* = I on the window.
class PartialFourierOp {
  public:
    PartialFourierOp(int nx, int ny, int kx_half, int ky_half)
        : nx_(nx), ny_(ny), kx_half_(kx_half), ky_half_(ky_half) {
        if (nx < 1 || ny < 1 || kx_half < 0 || ky_half < 0)
            throw std::invalid_argument("PartialFourierOp: bad dimensions");
        if (2 * kx_half + 1 > nx || 2 * ky_half + 1 > ny)
            throw geometry_error("PartialFourierOp: window exceeds image bandwidth");
        px_ = detail::point_phase_matrix(nx, kx_half, -1.0, 0.5) / std::sqrt(double(nx));
        py_ = detail::point_phase_matrix(ny, ky_half, -1.0, 0.5) / std::sqrt(double(ny));
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int kx_half() const { return kx_half_; }
    int ky_half() const { return ky_half_; }
    Eigen::Index n_samples() const {
        return static_cast<Eigen::Index>(2 * kx_half_ + 1) * (2 * ky_half_ + 1);
    }

    /// b[ky,kx] = (1/sqrt(nx*ny)) * sum_i x[i] exp(-j 2 pi <k, (i+0.5)/n>)
    KSpaceGrid forward(const Image& x) const {
        if (x.rows() != ny_ || x.cols() != nx_)
            throw std::invalid_argument("PartialFourierOp::forward: image size mismatch");
        const CMatrix b = py_.transpose() * x * px_;
        KSpaceGrid out(kx_half_, ky_half_);
        for (int ky = -ky_half_; ky <= ky_half_; ++ky)
            for (int kx = -kx_half_; kx <= kx_half_; ++kx)
                out.at(kx, ky) = b(ky + ky_half_, kx + kx_half_);
        return out;
    }

    Image adjoint(const KSpaceGrid& b) const {
        if (b.kx_half != kx_half_ || b.ky_half != ky_half_)
            throw std::invalid_argument("PartialFourierOp::adjoint: window mismatch");
        CMatrix bm(2 * ky_half_ + 1, 2 * kx_half_ + 1);
        for (int ky = -ky_half_; ky <= ky_half_; ++ky)
            for (int kx = -kx_half_; kx <= kx_half_; ++kx)
                bm(ky + ky_half_, kx + kx_half_) = b.at(kx, ky);
        return py_.conjugate() * bm * px_.adjoint();
    }

  private:
    int nx_, ny_, kx_half_, ky_half_;
    CMatrix px_; ///< nx x (2Kx+1), unitary column scaling folded in
    CMatrix py_; ///< ny x (2Ky+1)
};

inline PartialFourierOp forward_op(int nx, int ny, int kx_half, int ky_half) {
    return PartialFourierOp(nx, ny, kx_half, ky_half);
}

/// Per-pixel nonnegative weights for the total-variation term.
struct WeightMap {
    RMatrix weights; ///< ny x nx

    int nx() const { return static_cast<int>(weights.cols()); }
    int ny() const { return static_cast<int>(weights.rows()); }
};

inline WeightMap uniform_weights(int nx, int ny) {
    return WeightMap{RMatrix::Ones(ny, nx)};
}

/// w = max(mask^gamma, floor): small near detected edges so gradients are
/// cheap exactly where the mask predicts them.
inline WeightMap weights_from_mask(const EdgeMask& mask, double gamma = 1.0,
                                   double floor = 0.0) {
    if (!(gamma > 0.0)) throw std::invalid_argument("weights_from_mask: gamma must be > 0");
    if (!(floor >= 0.0) || floor > 1.0)
        throw std::invalid_argument("weights_from_mask: floor must be in [0, 1]");
    RMatrix w = mask.pixels.array().pow(gamma).max(floor).matrix();
    return WeightMap{std::move(w)};
}

namespace detail {

/// Forward differences with periodic boundary; gx(i,j) = x(i,j+1) - x(i,j).
inline void gradient(const Image& x, Image& gx, Image& gy) {
    const Eigen::Index ny = x.rows(), nx = x.cols();
    gx.resize(ny, nx);
    gy.resize(ny, nx);
    gx.leftCols(nx - 1) = x.rightCols(nx - 1) - x.leftCols(nx - 1);
    gx.col(nx - 1) = x.col(0) - x.col(nx - 1);
    gy.topRows(ny - 1) = x.bottomRows(ny - 1) - x.topRows(ny - 1);
    gy.row(ny - 1) = x.row(0) - x.row(ny - 1);
}

/// Negative adjoint of `gradient`: div(p,q)(i,j) = p(i,j)-p(i,j-1) + q(i,j)-q(i-1,j).
inline Image divergence(const Image& p, const Image& q) {
    const Eigen::Index ny = p.rows(), nx = p.cols();
    Image d(ny, nx);
    d.rightCols(nx - 1) = p.rightCols(nx - 1) - p.leftCols(nx - 1);
    d.col(0) = p.col(0) - p.col(nx - 1);
    d.bottomRows(ny - 1) += q.bottomRows(ny - 1) - q.topRows(ny - 1);
    d.row(0) += q.row(0) - q.row(ny - 1);
    return d;
}

inline RMatrix gradient_magnitude(const Image& gx, const Image& gy) {
    return (gx.cwiseAbs2() + gy.cwiseAbs2()).cwiseSqrt();
}

} // namespace detail

struct ReconConfig {
    double lambda = 0.0;   ///< 0 disables regularization: returns A* b directly
    int max_iters = 2000;
    double tol = 1e-6;     ///< relative objective change per check to declare convergence
    double tau = 0.0;      ///< 0: default 1/sqrt(8) (matches ||grad||^2 <= 8)
    double sigma = 0.0;
    int check_every = 10;
};

struct ReconResult {
    Image image;
    double objective = 0.0;
    int iters = 0;
    bool converged = false;
    RVector objective_history; ///< objective at each convergence check
};

/// lambda * sum_r w(r) * |grad x|(r) + ||A x - b||^2
inline double wtv_objective(const Image& x, const PartialFourierOp& op, const KSpaceGrid& b,
                            const WeightMap& w, double lambda) {
    Image gx, gy;
    detail::gradient(x, gx, gy);
    const double tv = (w.weights.array() * detail::gradient_magnitude(gx, gy).array()).sum();
    const double data = (op.forward(x).values - b.values).squaredNorm();
    return data + lambda * tv;
}

/// Weighted total-variation reconstruction
///   min_x ||A x - b||^2 + lambda * sum_r w(r) |grad x|(r)
/// by the Chambolle-Pock primal-dual method. The data prox is closed-form
/// because A A* = I:  (I + c A*A)^{-1} = I - c/(1+c) A*A.
/// Returns the best (lowest-objective) iterate seen, which is never worse
/// than the trivial candidates x = 0 and x = A* b.
inline ReconResult wtv_recon(const KSpaceGrid& b, const PartialFourierOp& op,
                             const WeightMap& w, const ReconConfig& cfg) {
    if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda))
        throw std::invalid_argument("wtv_recon: lambda must be finite and >= 0");
    if (cfg.max_iters < 1 || cfg.check_every < 1 || !(cfg.tol >= 0.0))
        throw std::invalid_argument("wtv_recon: bad iteration controls");
    if (w.nx() != op.nx() || w.ny() != op.ny())
        throw std::invalid_argument("wtv_recon: weight map size mismatch");
    if ((w.weights.array() < 0.0).any())
        throw std::invalid_argument("wtv_recon: negative weights");
    if (b.kx_half != op.kx_half() || b.ky_half != op.ky_half())
        throw std::invalid_argument("wtv_recon: data window mismatch");

    const Image x0 = op.adjoint(b);
    if (cfg.lambda == 0.0)
        return ReconResult{x0, wtv_objective(x0, op, b, w, 0.0), 0, true, RVector()};

    const double tau = cfg.tau > 0.0 ? cfg.tau : 1.0 / std::sqrt(8.0);
    const double sigma = cfg.sigma > 0.0 ? cfg.sigma : 1.0 / std::sqrt(8.0);
    const double c = 2.0 * tau;          // data term carries no 1/2
    const double shrink = c / (1.0 + c); // Woodbury coefficient for (I + c A*A)^{-1}
    const Image c_adj_b = c * x0;        // c A* b, constant across iterations

    Image x = x0, xbar = x0;
    Image px = Image::Zero(op.ny(), op.nx()), py = px;
    Image gx, gy;

    ReconResult res;
    res.image = Image::Zero(op.ny(), op.nx());
    const double zero_obj = wtv_objective(res.image, op, b, w, cfg.lambda);
    res.objective = zero_obj; // x = 0 candidate
    auto consider = [&](const Image& cand) {
        const double obj = wtv_objective(cand, op, b, w, cfg.lambda);
        if (obj < res.objective) {
            res.objective = obj;
            res.image = cand;
        }
        return obj;
    };
    const double obj0 = consider(x0);
    const double blow_up = 1e3 * (std::max(zero_obj, obj0) + 1.0);

    std::vector<double> history;
    double prev_obj = obj0;
    int it = 0;
    while (it < cfg.max_iters) {
        // dual ascent + projection onto per-pixel balls of radius lambda*w
        detail::gradient(xbar, gx, gy);
        px += sigma * gx;
        py += sigma * gy;
        const RMatrix mag = detail::gradient_magnitude(px, py);
        const RMatrix scale =
            (cfg.lambda * w.weights.array() / mag.array().max(1e-300)).min(1.0).matrix();
        px.array() *= scale.array();
        py.array() *= scale.array();

        // primal descent + closed-form data prox
        const Image x_prev = x;
        Image u = x + tau * detail::divergence(px, py);
        u += c_adj_b;
        x = u - shrink * op.adjoint(op.forward(u));
        xbar = 2.0 * x - x_prev;
        ++it;

        if (it % cfg.check_every == 0 || it == cfg.max_iters) {
            const double obj = consider(x);
            history.push_back(obj);
            if (!std::isfinite(obj) || obj > blow_up)
                throw divergence_error("wtv_recon: objective blew up; check tau/sigma");
            if (std::abs(obj - prev_obj) <= cfg.tol * std::max(1.0, std::abs(prev_obj))) {
                res.converged = true;
                break;
            }
            prev_obj = obj;
        }
    }
    res.iters = it;
    res.objective_history =
        Eigen::Map<const RVector>(history.data(), static_cast<Eigen::Index>(history.size()));
    return res;
}

/// Unweighted total variation: wtv_recon with w = 1 everywhere.
inline ReconResult tv_recon(const KSpaceGrid& b, const PartialFourierOp& op,
                            const ReconConfig& cfg) {
    return wtv_recon(b, op, uniform_weights(op.nx(), op.ny()), cfg);
}

/// 20 log10(||ref|| / ||ref - x||); +inf when the images coincide.
inline double snr_db(const Image& ref, const Image& x) {
    if (ref.rows() != x.rows() || ref.cols() != x.cols())
        throw std::invalid_argument("snr_db: size mismatch");
    const double nref = ref.norm();
    if (!(nref > 0.0)) throw std::invalid_argument("snr_db: zero reference");
    const double nerr = (ref - x).norm();
    if (nerr == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(nref / nerr);
}

struct SweepRow {
    double lambda = 0.0;
    double snr_db = 0.0;
    double objective = 0.0;
    int iters = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    int best_index = -1; ///< highest SNR; first such row on ties
    Image best_image;
};

/// Runs wtv_recon once per lambda (each run cold-started, so duplicated
/// lambdas give identical rows) and scores against the ground truth.
inline SweepResult lambda_sweep(const KSpaceGrid& b, const PartialFourierOp& op,
                                const WeightMap& w, const Image& ground_truth,
                                const std::vector<double>& lambdas, ReconConfig cfg) {
    if (lambdas.empty()) throw std::invalid_argument("lambda_sweep: no lambdas");
    SweepResult sweep;
    sweep.rows.reserve(lambdas.size());
    for (double lam : lambdas) {
        cfg.lambda = lam;
        ReconResult r = wtv_recon(b, op, w, cfg);
        const double s = snr_db(ground_truth, r.image);
        sweep.rows.push_back(SweepRow{lam, s, r.objective, r.iters});
        if (sweep.best_index < 0 || s > sweep.rows[sweep.best_index].snr_db) {
            sweep.best_index = static_cast<int>(sweep.rows.size()) - 1;
            sweep.best_image = r.image;
        }
    }
    return sweep;
}

} // namespace fritv

#endif // FRITV_RECON_HPP
