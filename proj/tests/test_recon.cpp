// Reconstruction stage: the partial-Fourier operator and its adjoint, the
// discrete gradient pair, weight maps, the primal-dual weighted-TV solver
// (checked against a dense ADMM oracle), and the lambda sweep.

#include <catch2/catch_amalgamated.hpp>

#include <fritv/mask.hpp>
#include <fritv/phantom.hpp>
#include <fritv/recon.hpp>

#include "oracles.hpp"

using fritv::Complex;
using fritv::CVector;
using fritv::Image;
using fritv::KSpaceGrid;
using fritv::PartialFourierOp;
using fritv::ReconConfig;
using fritv::ReconResult;
using fritv::RMatrix;
using fritv::WeightMap;

namespace {

Image random_image(int nx, int ny, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Image x(ny, nx);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = Complex(gauss(rng), gauss(rng));
    return x;
}

KSpaceGrid random_kspace(int kx_half, int ky_half, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    KSpaceGrid g(kx_half, ky_half);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.values[i] = Complex(gauss(rng), gauss(rng));
    return g;
}

Complex dot(const Image& a, const Image& b) { return (a.conjugate().array() * b.array()).sum(); }

// Column-major images flattened to the oracle's row-major pixel order.
CVector to_pixel_vector(const Image& x) {
    CVector v(x.size());
    for (Eigen::Index iy = 0; iy < x.rows(); ++iy)
        for (Eigen::Index ix = 0; ix < x.cols(); ++ix) v[iy * x.cols() + ix] = x(iy, ix);
    return v;
}

fritv::RVector to_pixel_vector(const RMatrix& x) {
    fritv::RVector v(x.size());
    for (Eigen::Index iy = 0; iy < x.rows(); ++iy)
        for (Eigen::Index ix = 0; ix < x.cols(); ++ix) v[iy * x.cols() + ix] = x(iy, ix);
    return v;
}

} // namespace

TEST_CASE("partial Fourier operator", "[recon]") {
    SECTION("constant images concentrate at DC") {
        const PartialFourierOp op(16, 16, 3, 3);
        const KSpaceGrid b = op.forward(Image::Constant(16, 16, Complex(2.0, 0.0)));
        CHECK(std::abs(b.at(0, 0) - Complex(2.0 * 16.0, 0.0)) < 1e-12);
        for (int ky = -3; ky <= 3; ++ky)
            for (int kx = -3; kx <= 3; ++kx)
                if (kx != 0 || ky != 0) CHECK(std::abs(b.at(kx, ky)) < 1e-12);
    }

    SECTION("adjoint identity") {
        const PartialFourierOp op(12, 10, 4, 3);
        const Image x = random_image(12, 10, 1);
        const KSpaceGrid y = random_kspace(4, 3, 2);
        const Complex lhs = (y.values.conjugate().array() * op.forward(x).values.array()).sum();
        const Complex rhs = dot(op.adjoint(y), x);
        CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
    }

    SECTION("the window rows are orthonormal: A A* = I") {
        const PartialFourierOp op(16, 12, 5, 4);
        const KSpaceGrid y = random_kspace(5, 4, 3);
        const KSpaceGrid rt = op.forward(op.adjoint(y));
        CHECK((rt.values - y.values).cwiseAbs().maxCoeff() < 1e-12);
    }

    SECTION("A*A is an orthogonal projector") {
        const PartialFourierOp op(16, 16, 4, 4);
        const Image x = random_image(16, 16, 4);
        const Image once = op.adjoint(op.forward(x));
        const Image twice = op.adjoint(op.forward(once));
        CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);
    }

    SECTION("forward samples scale to Fourier-series coefficients") {
        // Midpoint sampling of the separable region: A x / sqrt(nx*ny) is an
        // O(1/n) approximation of its exact series coefficients. This pins the
        // unitary scaling convention against independent closed-form values.
        const oracles::Checkerboard cb;
        const int n = 256;
        RMatrix raster(n, n);
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                raster(iy, ix) = cb.mu((ix + 0.5) / n, (iy + 0.5) / n) > 0.0 ? 1.0 : 0.0;
        const PartialFourierOp op(n, n, 4, 4);
        const KSpaceGrid b = op.forward(raster.cast<Complex>());
        const KSpaceGrid exact = cb.kspace(4, 4);
        const double scale = std::sqrt(static_cast<double>(n) * n);
        CHECK((b.values / scale - exact.values).cwiseAbs().maxCoeff() < 0.01);
    }

    SECTION("geometry and size validation") {
        CHECK_THROWS_AS(PartialFourierOp(16, 16, 8, 4), fritv::geometry_error);
        CHECK_THROWS_AS(PartialFourierOp(0, 16, 2, 2), std::invalid_argument);
        const PartialFourierOp op(8, 8, 2, 2);
        CHECK(op.n_samples() == 25);
        CHECK_THROWS_AS(op.forward(Image::Zero(8, 9)), std::invalid_argument);
        CHECK_THROWS_AS(op.adjoint(KSpaceGrid(3, 2)), std::invalid_argument);
    }
}

TEST_CASE("discrete gradient and divergence", "[recon]") {
    SECTION("adjointness: <grad x, p> = -<x, div p>") {
        const Image x = random_image(9, 7, 5);
        const Image p = random_image(9, 7, 6), q = random_image(9, 7, 7);
        Image gx, gy;
        fritv::detail::gradient(x, gx, gy);
        const Complex lhs = dot(p, gx) + dot(q, gy);
        const Complex rhs = -dot(fritv::detail::divergence(p, q), x);
        CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
    }

    SECTION("constants have zero gradient") {
        Image gx, gy;
        fritv::detail::gradient(Image::Constant(5, 5, Complex(3.0, -1.0)), gx, gy);
        CHECK(gx.cwiseAbs().maxCoeff() == 0.0);
        CHECK(gy.cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("periodic wrap on a ramp") {
        Image x(2, 4);
        x << Complex(0), Complex(1), Complex(2), Complex(3),
             Complex(0), Complex(1), Complex(2), Complex(3);
        Image gx, gy;
        fritv::detail::gradient(x, gx, gy);
        CHECK(gx(0, 0) == Complex(1.0, 0.0));
        CHECK(gx(0, 2) == Complex(1.0, 0.0));
        CHECK(gx(0, 3) == Complex(-3.0, 0.0)); // wraps to the first column
        CHECK(gy.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("weight maps", "[recon]") {
    fritv::EdgeMask mask;
    mask.pixels = RMatrix(2, 3);
    mask.pixels << 0.0, 0.25, 0.5, 0.75, 1.0, 0.1;

    CHECK(fritv::weights_from_mask(mask).weights == mask.pixels);
    CHECK(fritv::weights_from_mask(mask, 2.0).weights ==
          mask.pixels.cwiseProduct(mask.pixels));
    const RMatrix floored = fritv::weights_from_mask(mask, 1.0, 0.3).weights;
    CHECK(floored.minCoeff() == 0.3);
    CHECK(floored(0, 2) == 0.5);

    CHECK_THROWS_AS(fritv::weights_from_mask(mask, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fritv::weights_from_mask(mask, 1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(fritv::weights_from_mask(mask, 1.0, 1.5), std::invalid_argument);

    const WeightMap u = fritv::uniform_weights(4, 3);
    CHECK(u.weights.rows() == 3);
    CHECK(u.weights.cols() == 4);
    CHECK(u.weights.minCoeff() == 1.0);
}

TEST_CASE("weighted TV solver", "[recon]") {
    SECTION("lambda = 0 returns the zero-filled adjoint exactly") {
        const PartialFourierOp op(12, 12, 3, 3);
        const KSpaceGrid b = random_kspace(3, 3, 11);
        const ReconResult r = fritv::tv_recon(b, op, ReconConfig{});
        CHECK((r.image - op.adjoint(b)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(r.iters == 0);
        CHECK(r.converged);
    }

    SECTION("full sampling with tiny lambda recovers the image") {
        const int n = 15;
        const PartialFourierOp op(n, n, 7, 7); // the window covers everything
        const Image x_true = random_image(n, n, 12);
        const KSpaceGrid b = op.forward(x_true);
        ReconConfig cfg;
        cfg.lambda = 1e-8;
        cfg.max_iters = 5000;
        const ReconResult r = fritv::tv_recon(b, op, cfg);
        CHECK((r.image - x_true).norm() < 1e-3 * x_true.norm());
        CHECK(fritv::snr_db(x_true, r.image) > 40.0);
    }

    SECTION("all-zero weights reduce to the data projection") {
        const PartialFourierOp op(10, 10, 3, 3);
        const KSpaceGrid b = random_kspace(3, 3, 13);
        ReconConfig cfg;
        cfg.lambda = 0.5;
        cfg.max_iters = 500;
        const WeightMap none{RMatrix::Zero(10, 10)};
        const ReconResult r = fritv::wtv_recon(b, op, none, cfg);
        // A* b already achieves zero objective, so it is returned unchanged.
        CHECK((r.image - op.adjoint(b)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(r.objective < 1e-20);
    }

    SECTION("objective matches a dense ADMM oracle") {
        const int nx = 8, ny = 8, kxh = 2, kyh = 3;
        const PartialFourierOp op(nx, ny, kxh, kyh);
        const KSpaceGrid b = random_kspace(kxh, kyh, 21);
        std::mt19937_64 rng(22);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        RMatrix wpix(ny, nx);
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) wpix(iy, ix) = uni(rng);
        const WeightMap w{wpix};
        const double lambda = 0.1;

        ReconConfig cfg;
        cfg.lambda = lambda;
        cfg.max_iters = 20000;
        cfg.tol = 0.0; // run the full budget
        cfg.check_every = 100;
        const ReconResult r = fritv::wtv_recon(b, op, w, cfg);

        const oracles::DenseWtv oracle(nx, ny, kxh, kyh);
        const oracles::AdmmResult ref =
            oracle.solve(b.values, to_pixel_vector(wpix), lambda, 6000);

        CHECK(r.objective == Catch::Approx(ref.objective).epsilon(1e-4));
        // and the oracle agrees with the library's own objective functional
        const double lib_obj_of_oracle_x = [&] {
            Image xi(ny, nx);
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) xi(iy, ix) = ref.x[iy * nx + ix];
            return fritv::wtv_objective(xi, op, b, w, lambda);
        }();
        CHECK(lib_obj_of_oracle_x == Catch::Approx(ref.objective).epsilon(1e-10));
    }

    SECTION("never worse than the trivial candidates") {
        const PartialFourierOp op(12, 10, 3, 2);
        const KSpaceGrid b = random_kspace(3, 2, 31);
        const WeightMap w = fritv::uniform_weights(12, 10);
        ReconConfig cfg;
        cfg.lambda = 3.0; // large enough that A* b is far from optimal
        cfg.max_iters = 400;
        const ReconResult r = fritv::wtv_recon(b, op, w, cfg);
        const Image zero = Image::Zero(10, 12);
        CHECK(r.objective <= fritv::wtv_objective(zero, op, b, w, cfg.lambda) + 1e-12);
        CHECK(r.objective <=
              fritv::wtv_objective(op.adjoint(b), op, b, w, cfg.lambda) + 1e-12);
        CHECK(r.objective <= r.objective_history.minCoeff() + 1e-12);
    }

    SECTION("pointwise larger weights can only raise the optimum") {
        const PartialFourierOp op(8, 8, 2, 2);
        const KSpaceGrid b = random_kspace(2, 2, 41);
        ReconConfig cfg;
        cfg.lambda = 0.2;
        cfg.max_iters = 8000;
        cfg.tol = 1e-12;
        RMatrix w1 = RMatrix::Constant(8, 8, 0.4);
        RMatrix w2 = RMatrix::Constant(8, 8, 0.8);
        const double o1 = fritv::wtv_recon(b, op, WeightMap{w1}, cfg).objective;
        const double o2 = fritv::wtv_recon(b, op, WeightMap{w2}, cfg).objective;
        CHECK(o1 <= o2 + 1e-8);
    }

    SECTION("absurd step sizes are caught as divergence") {
        const PartialFourierOp op(8, 8, 2, 2);
        const KSpaceGrid b = random_kspace(2, 2, 51);
        ReconConfig cfg;
        cfg.lambda = 0.5;
        cfg.tau = 1e3;
        cfg.sigma = 1e3;
        cfg.check_every = 1;
        cfg.max_iters = 500;
        CHECK_THROWS_AS(fritv::tv_recon(b, op, cfg), fritv::divergence_error);
    }

    SECTION("input validation") {
        const PartialFourierOp op(8, 8, 2, 2);
        const KSpaceGrid b = random_kspace(2, 2, 61);
        ReconConfig cfg;
        cfg.lambda = -1.0;
        CHECK_THROWS_AS(fritv::tv_recon(b, op, cfg), std::invalid_argument);
        cfg.lambda = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(fritv::tv_recon(b, op, cfg), std::invalid_argument);
        cfg.lambda = 0.1;
        cfg.max_iters = 0;
        CHECK_THROWS_AS(fritv::tv_recon(b, op, cfg), std::invalid_argument);
        cfg.max_iters = 10;
        CHECK_THROWS_AS(fritv::wtv_recon(b, op, WeightMap{RMatrix::Ones(8, 7)}, cfg),
                        std::invalid_argument);
        CHECK_THROWS_AS(
            fritv::wtv_recon(b, op, WeightMap{RMatrix::Constant(8, 8, -1.0)}, cfg),
            std::invalid_argument);
        CHECK_THROWS_AS(fritv::tv_recon(random_kspace(3, 2, 62), op, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("unweighted TV is the uniform special case", "[recon]") {
    const PartialFourierOp op(10, 10, 3, 3);
    const KSpaceGrid b = random_kspace(3, 3, 71);
    ReconConfig cfg;
    cfg.lambda = 0.05;
    cfg.max_iters = 300;
    const ReconResult via_tv = fritv::tv_recon(b, op, cfg);
    const ReconResult via_wtv = fritv::wtv_recon(b, op, fritv::uniform_weights(10, 10), cfg);
    CHECK((via_tv.image - via_wtv.image).cwiseAbs().maxCoeff() == 0.0);
    CHECK(via_tv.objective == via_wtv.objective);
}

TEST_CASE("stronger regularization lowers the solution's TV", "[recon]") {
    const PartialFourierOp op(16, 16, 4, 4);
    const KSpaceGrid b = random_kspace(4, 4, 81);
    auto tv_of = [&](double lambda) {
        ReconConfig cfg;
        cfg.lambda = lambda;
        cfg.max_iters = 20000;
        cfg.tol = 1e-12;
        const Image x = fritv::tv_recon(b, op, cfg).image;
        Image gx, gy;
        fritv::detail::gradient(x, gx, gy);
        return fritv::detail::gradient_magnitude(gx, gy).sum();
    };
    const double t1 = tv_of(1e-3), t2 = tv_of(1e-2), t3 = tv_of(1e-1);
    CHECK(t2 <= t1 * 1.01);
    CHECK(t3 <= t2 * 1.01);
}

TEST_CASE("reconstruction quality metric", "[recon]") {
    const Image ref = random_image(6, 6, 91);
    CHECK(fritv::snr_db(ref, ref) == std::numeric_limits<double>::infinity());
    CHECK(fritv::snr_db(ref, 0.9 * ref) == Catch::Approx(20.0).margin(1e-12));
    CHECK(fritv::snr_db(ref, Image::Zero(6, 6)) == Catch::Approx(0.0).margin(1e-12));
    CHECK_THROWS_AS(fritv::snr_db(Image::Zero(6, 6), ref), std::invalid_argument);
    CHECK_THROWS_AS(fritv::snr_db(ref, Image::Zero(5, 6)), std::invalid_argument);
}

TEST_CASE("lambda sweep", "[recon]") {
    const PartialFourierOp op(12, 12, 3, 3);
    const Image truth = random_image(12, 12, 95);
    const KSpaceGrid b = op.forward(truth);
    const WeightMap w = fritv::uniform_weights(12, 12);
    ReconConfig cfg;
    cfg.max_iters = 500;

    SECTION("rows follow the input order; ties keep the first best") {
        const std::vector<double> lambdas = {1e-3, 1e-3, 1e-2};
        const fritv::SweepResult s = fritv::lambda_sweep(b, op, w, truth, lambdas, cfg);
        REQUIRE(s.rows.size() == 3);
        CHECK(s.rows[0].lambda == 1e-3);
        // cold starts: duplicated lambdas give bitwise-identical rows
        CHECK(s.rows[0].snr_db == s.rows[1].snr_db);
        CHECK(s.rows[0].objective == s.rows[1].objective);
        if (s.rows[0].snr_db >= s.rows[2].snr_db) CHECK(s.best_index == 0);
    }

    SECTION("best image matches an equivalent standalone run") {
        const std::vector<double> lambdas = {1e-2};
        const fritv::SweepResult s = fritv::lambda_sweep(b, op, w, truth, lambdas, cfg);
        REQUIRE(s.best_index == 0);
        ReconConfig one = cfg;
        one.lambda = 1e-2;
        const ReconResult r = fritv::wtv_recon(b, op, w, one);
        CHECK((s.best_image - r.image).cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.rows[0].objective == r.objective);
        CHECK(s.rows[0].iters == r.iters);
    }

    SECTION("empty grids are rejected") {
        CHECK_THROWS_AS(fritv::lambda_sweep(b, op, w, truth, {}, cfg),
                        std::invalid_argument);
    }
}
