#include "qab/admm.hpp"
#include "qab/noise.hpp"
#include "qab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace qab;

namespace {

Eigen::VectorXd random_vec(Eigen::Index n, std::uint64_t seed, double lo, double hi) {
    SplitMix64 rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.next_double();
    return v;
}

double augmented_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const BlurOperator& blur, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& u, double lambda) {
    return poisson_objective(x, y, blur) + 0.5 * lambda * (x - z + u).squaredNorm();
}

} // namespace

TEST_SUITE("admm") {

TEST_CASE("poisson objective closed forms under an identity operator") {
    const BlurOperator identity(gaussian_psf(1, 1.0), 4);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(16);
    // y = 0: objective reduces to sum(Hx) = 16.
    CHECK(poisson_objective(ones, Eigen::VectorXd::Zero(16), identity) ==
          doctest::Approx(16.0).epsilon(1e-14));
    // x = y = c: sum of c - c log c.
    const double c = 2.5;
    CHECK(poisson_objective(Eigen::VectorXd::Constant(16, c),
                            Eigen::VectorXd::Constant(16, c), identity) ==
          doctest::Approx(16.0 * (c - c * std::log(c))).epsilon(1e-14));
}

TEST_CASE("poisson objective matches a scalar loop on the blurred field") {
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    const Eigen::VectorXd x = random_vec(64, 401, 0.5, 1.5);
    const Eigen::VectorXd y = random_vec(64, 402, 0.0, 2.0);
    const Eigen::VectorXd hx = blur.apply(x);
    double expected = 0.0;
    for (Eigen::Index i = 0; i < 64; ++i) expected += hx[i] - y[i] * std::log(hx[i]);
    CHECK(poisson_objective(x, y, blur) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("objective and gradient refuse an infeasible point") {
    const BlurOperator identity(gaussian_psf(1, 1.0), 4);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(16);
    x[5] = 0.0;
    const Eigen::VectorXd y = Eigen::VectorXd::Ones(16);
    CHECK_THROWS_AS(poisson_objective(x, y, identity), std::domain_error);
    CHECK_THROWS_AS(augmented_gradient(x, y, identity, y, y, 1.0), std::domain_error);
}

TEST_CASE("gradient reduces to the penalty term when y equals Hx") {
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    const Eigen::VectorXd x = random_vec(64, 411, 0.5, 1.5);
    const Eigen::VectorXd y = blur.apply(x);
    const Eigen::VectorXd z = random_vec(64, 412, 0.0, 1.0);
    const Eigen::VectorXd u = random_vec(64, 413, -0.1, 0.1);
    const double lambda = 0.9;
    const Eigen::VectorXd g = augmented_gradient(x, y, blur, z, u, lambda);
    CHECK((g - lambda * (x - z + u)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient agrees with central finite differences") {
    SplitMix64 seeds(421);
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    const double lambda = 0.7;
    const double h = 1e-6;
    for (int trial = 0; trial < 3; ++trial) {
        const Eigen::VectorXd x = random_vec(64, seeds.next(), 0.5, 1.5);
        const Eigen::VectorXd y = random_vec(64, seeds.next(), 0.0, 2.0);
        const Eigen::VectorXd z = random_vec(64, seeds.next(), 0.4, 1.6);
        const Eigen::VectorXd u = random_vec(64, seeds.next(), -0.1, 0.1);
        const Eigen::VectorXd g = augmented_gradient(x, y, blur, z, u, lambda);
        for (Eigen::Index i = 0; i < 64; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (augmented_objective(xp, y, blur, z, u, lambda) -
                               augmented_objective(xm, y, blur, z, u, lambda)) /
                              (2.0 * h);
            CHECK(std::fabs(fd - g[i]) <= 1e-5 * std::max(1.0, std::fabs(g[i])));
        }
    }
}

TEST_CASE("x-update with a dominant penalty lands on z - u") {
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    const Eigen::VectorXd y = random_vec(64, 431, 5.0, 15.0);
    const Eigen::VectorXd z = y.array() + 0.2;
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(64, 0.05);
    InnerSolverConfig config;
    config.max_iters = 200;
    config.grad_tol = 1e-4;
    const XUpdateResult res = x_update(y, y, blur, z, u, 1e8, config, 1e-9);
    CHECK((res.x - (z - u)).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("x-update with a vanishing penalty solves the ml problem") {
    const BlurOperator identity(gaussian_psf(1, 1.0), 8);
    const Eigen::VectorXd y = random_vec(64, 441, 4.0, 12.0);
    const Eigen::VectorXd z = Eigen::VectorXd::Constant(64, 8.0);
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(64);
    InnerSolverConfig config;
    config.max_iters = 500;
    config.grad_tol = 1e-7;
    // With H = I the data term separates and the minimizer is x = y.
    const XUpdateResult res =
        x_update(Eigen::VectorXd::Constant(64, 8.0), y, identity, z, u, 1e-9, config,
                 1e-9);
    CHECK((res.x - y).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("x-update descends and random probes cannot beat the result") {
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    const Eigen::VectorXd y = random_vec(64, 451, 3.0, 9.0);
    const Eigen::VectorXd x0 = y;
    const Eigen::VectorXd z = random_vec(64, 452, 3.0, 9.0);
    const Eigen::VectorXd u = random_vec(64, 453, -0.2, 0.2);
    const double lambda = 1.5;
    InnerSolverConfig config;
    config.max_iters = 300;
    const XUpdateResult res = x_update(x0, y, blur, z, u, lambda, config, 1e-9);

    const double fstar = augmented_objective(res.x, y, blur, z, u, lambda);
    CHECK(fstar <= augmented_objective(x0, y, blur, z, u, lambda) + 1e-12);

    SplitMix64 seeds(454);
    for (int probe = 0; probe < 50; ++probe) {
        const Eigen::VectorXd d = random_vec(64, seeds.next(), -0.01, 0.01);
        CHECK(augmented_objective(res.x + d, y, blur, z, u, lambda) >= fstar - 1e-6);
    }
}

TEST_CASE("x-update projects every iterate onto the floor") {
    const BlurOperator identity(gaussian_psf(1, 1.0), 4);
    const Eigen::VectorXd y = Eigen::VectorXd::Ones(16);
    // A start below the floor is legal: it gets projected.
    const XUpdateResult res = x_update(Eigen::VectorXd::Zero(16), y, identity, y,
                                       Eigen::VectorXd::Zero(16), 1.0, {}, 0.5);
    CHECK(res.x.minCoeff() >= 0.5);
    CHECK_THROWS_AS(x_update(y, y, identity, y, Eigen::VectorXd::Zero(16), 1.0, {},
                             0.0),
                    std::invalid_argument);
}

TEST_CASE("the loop feeds the z-step x + u with the live iteration and penalty") {
    const Image y = sample_poisson(Image::constant(8, 30.0), 5);
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    LoopConfig config;
    config.lambda0 = 1.3;
    config.gamma = 1.07;
    config.outer_iters = 5;

    std::vector<int> iterations;
    std::vector<double> lambdas;
    const ZStep probe = [&](const Eigen::VectorXd& v, int k, double lambda) {
        iterations.push_back(k);
        lambdas.push_back(lambda);
        return v;
    };
    const auto [restored, trace] = run_admm(y, blur, config, probe);

    REQUIRE(trace.records.size() == 5);
    double expected = config.lambda0;
    for (int k = 0; k < 5; ++k) {
        CHECK(iterations[k] == k + 1);
        CHECK(lambdas[k] == expected);
        CHECK(trace.records[k].lambda == expected);
        CHECK(trace.records[k].iteration == k + 1);
        // Identity z-step keeps the dual at zero, so x == z exactly.
        CHECK(trace.records[k].primal_residual == 0.0);
        CHECK(trace.records[k].inner_iterations >= 0);
        CHECK(std::isfinite(trace.records[k].objective));
        CHECK(std::isnan(trace.records[k].rmse));
        expected *= config.gamma;
    }
    CHECK(restored.min_value() >= 0.0);
}

TEST_CASE("the loop validates its configuration and inputs") {
    const Image y = sample_poisson(Image::constant(8, 20.0), 6);
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    const ZStep id = [](const Eigen::VectorXd& v, int, double) { return v; };

    LoopConfig config;
    config.lambda0 = 0.0;
    CHECK_THROWS_AS(run_admm(y, blur, config, id), std::invalid_argument);
    config = {};
    config.gamma = 1.0;
    CHECK_THROWS_AS(run_admm(y, blur, config, id), std::invalid_argument);
    config = {};
    config.outer_iters = 0;
    CHECK_THROWS_AS(run_admm(y, blur, config, id), std::invalid_argument);
    config = {};
    CHECK_THROWS_AS(run_admm(Image::zero(8), blur, config, id), std::invalid_argument);
    CHECK_THROWS_AS(run_admm(sample_poisson(Image::constant(4, 20.0), 6),
                             blur, config, id),
                    std::invalid_argument);
    const Image ref = Image::constant(4, 1.0);
    CHECK_THROWS_AS(run_admm(y, blur, config, id, &ref), std::invalid_argument);

    const ZStep bad = [](const Eigen::VectorXd& v, int, double) {
        return Eigen::VectorXd(v.head(4));
    };
    CHECK_THROWS_AS(run_admm(y, blur, config, bad), std::runtime_error);
}

TEST_CASE("the adaptive-basis pipeline is deterministic") {
    const Image clean = Image::constant(12, 0.6);
    const BlurOperator blur(gaussian_psf(3, 1.5), 12);
    const Image y = sample_poisson(Image(12, 40.0 * blur.apply(clean.vec())), 9);

    AdmmConfig config;
    config.outer_iters = 3;
    config.inner.max_iters = 40;

    const auto [a, ta] = run_qab_pnp(y, blur, config, &y);
    const auto [b, tb] = run_qab_pnp(y, blur, config, &y);
    CHECK((a.vec() - b.vec()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ta.sparsity == tb.sparsity);
    CHECK(ta.sparsity > 0);
    REQUIRE(ta.records.size() == tb.records.size());
    for (std::size_t k = 0; k < ta.records.size(); ++k) {
        CHECK(ta.records[k].lambda == tb.records[k].lambda);
        CHECK(ta.records[k].rmse == tb.records[k].rmse);
        CHECK(ta.records[k].objective == tb.records[k].objective);
        CHECK(ta.records[k].primal_residual == tb.records[k].primal_residual);
        CHECK(ta.records[k].inner_iterations == tb.records[k].inner_iterations);
    }
}

TEST_CASE("an energy cutoff below the ground state is rejected") {
    const Image y = sample_poisson(Image::constant(8, 25.0), 10);
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    AdmmConfig config;
    config.energy_cutoff = 0.0;
    CHECK_THROWS_AS(run_qab_pnp(y, blur, config), std::invalid_argument);
}

TEST_CASE("trace csv carries one row per iteration") {
    const Image y = sample_poisson(Image::constant(8, 30.0), 11);
    const BlurOperator blur(gaussian_psf(3, 1.2), 8);
    LoopConfig config;
    config.outer_iters = 4;
    const ZStep id = [](const Eigen::VectorXd& v, int, double) { return v; };
    const auto [restored, trace] = run_admm(y, blur, config, id, &y);

    std::ostringstream out;
    write_trace_csv(out, trace);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "iter,lambda,rmse,objective,primal_residual,inner_iters,millis");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.rfind(std::to_string(rows) + ",", 0) == 0);
    }
    CHECK(rows == 4);
}

} // TEST_SUITE
