#include "core/spg.hpp"

#include <cmath>
#include <limits>

#include "core/rng.hpp"
#include "doctest.h"

using namespace cnhp;

namespace {

// f(x) = -0.5 (x-c)' Q (x-c), gradient -Q (x-c).
BoxObjective quadratic(const Eigen::MatrixXd& q, const Eigen::VectorXd& c) {
    return [q, c](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        const Eigen::VectorXd r = x - c;
        grad = -(q * r);
        return -0.5 * r.dot(q * r);
    };
}

Eigen::MatrixXd random_spd(int n, Rng& rng) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
    }
    return m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("interior quadratic optimum is recovered") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        const Eigen::MatrixXd q = random_spd(n, rng);
        Eigen::VectorXd c(n);
        for (int i = 0; i < n; ++i) c[i] = 2.0 * rng.normal();
        const Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, -50.0);
        const Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, 50.0);

        BoxMaximizeOptions opts;
        opts.max_iterations = 500;
        const auto res =
            box_maximize(quadratic(q, c), Eigen::VectorXd::Zero(n), lower, upper, opts);
        CHECK(res.converged);
        CHECK((res.x - c).lpNorm<Eigen::Infinity>() < 1e-6);
        CHECK(res.value == doctest::Approx(0.0).epsilon(1e-10));
    }
}

TEST_CASE("separable quadratic clamps to the box") {
    // With diagonal curvature the constrained maximizer is the clamped target.
    const Eigen::VectorXd c = (Eigen::VectorXd(4) << 3.0, -2.5, 0.2, 9.0).finished();
    const Eigen::VectorXd diag = (Eigen::VectorXd(4) << 1.0, 4.0, 0.5, 2.0).finished();
    const Eigen::MatrixXd q = diag.asDiagonal();
    const Eigen::VectorXd lower = (Eigen::VectorXd(4) << -1.0, -1.0, -1.0, -1.0).finished();
    const Eigen::VectorXd upper = (Eigen::VectorXd(4) << 1.0, 1.0, 1.0, 1.0).finished();

    const auto res = box_maximize(quadratic(q, c), Eigen::VectorXd::Zero(4), lower, upper);
    CHECK(res.converged);
    const Eigen::VectorXd expected = c.cwiseMax(lower).cwiseMin(upper);
    CHECK((res.x - expected).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("general quadratic satisfies box KKT conditions") {
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3;
        const Eigen::MatrixXd q = random_spd(n, rng);
        Eigen::VectorXd c(n);
        for (int i = 0; i < n; ++i) c[i] = 3.0 * rng.normal();
        const Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, -1.0);
        const Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, 1.0);

        BoxMaximizeOptions opts;
        opts.max_iterations = 2000;
        opts.gradient_tolerance = 1e-10;
        const auto res =
            box_maximize(quadratic(q, c), Eigen::VectorXd::Zero(n), lower, upper, opts);
        Eigen::VectorXd grad(n);
        quadratic(q, c)(res.x, grad);
        for (int i = 0; i < n; ++i) {
            CHECK(res.x[i] >= lower[i]);
            CHECK(res.x[i] <= upper[i]);
            if (res.x[i] > lower[i] + 1e-7 && res.x[i] < upper[i] - 1e-7) {
                CHECK(std::abs(grad[i]) < 1e-6);
            } else if (res.x[i] <= lower[i] + 1e-7) {
                CHECK(grad[i] < 1e-6);
            } else {
                CHECK(grad[i] > -1e-6);
            }
        }
    }
}

TEST_CASE("result value never falls below the starting value") {
    Rng rng(47);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 4;
        const Eigen::MatrixXd q = random_spd(n, rng);
        Eigen::VectorXd c(n), x0(n);
        for (int i = 0; i < n; ++i) {
            c[i] = 2.0 * rng.normal();
            x0[i] = rng.normal();
        }
        const Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, -2.0);
        const Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, 2.0);
        const auto f = quadratic(q, c);
        Eigen::VectorXd scratch(n);
        const Eigen::VectorXd start = x0.cwiseMax(lower).cwiseMin(upper);
        const double f0 = f(start, scratch);

        BoxMaximizeOptions opts;
        opts.max_iterations = 1 + static_cast<int>(rng.below(30));
        const auto res = box_maximize(f, x0, lower, upper, opts);
        CHECK(res.value >= f0 - 1e-14);
        CHECK(res.value == doctest::Approx(f(res.x, scratch)).epsilon(1e-13));
    }
}

TEST_CASE("start outside the box is projected in") {
    const Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
    const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(2, -1.0);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(2, 1.0);
    const Eigen::VectorXd x0 = (Eigen::VectorXd(2) << 100.0, -100.0).finished();
    const auto res = box_maximize(quadratic(q, c), x0, lower, upper);
    CHECK(res.converged);
    CHECK((res.x - c).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("stationary start converges immediately") {
    const Eigen::VectorXd c = (Eigen::VectorXd(3) << 0.3, -0.1, 0.5).finished();
    const Eigen::MatrixXd q = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(3, -1.0);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(3, 1.0);
    const auto res = box_maximize(quadratic(q, c), c, lower, upper);
    CHECK(res.converged);
    CHECK(res.iterations == 0);
    CHECK(res.x == c);
}

TEST_CASE("invalid inputs are rejected") {
    const auto f = quadratic(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, 1.0);
    CHECK_THROWS_AS((void)box_maximize(f, Eigen::VectorXd::Zero(3), lo, hi),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)box_maximize(f, Eigen::VectorXd::Zero(2), hi, lo),
                    std::invalid_argument);

    const BoxObjective bad = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
        g = Eigen::VectorXd::Zero(2);
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS((void)box_maximize(bad, Eigen::VectorXd::Zero(2), lo, hi),
                    std::runtime_error);
}

TEST_CASE("nonconvex smooth objective still improves monotonically") {
    // f(x, y) = sin(3x) + cos(2y) - 0.1 (x^2 + y^2)
    const BoxObjective f = [](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
        const double x = v[0], y = v[1];
        g.resize(2);
        g[0] = 3.0 * std::cos(3.0 * x) - 0.2 * x;
        g[1] = -2.0 * std::sin(2.0 * y) - 0.2 * y;
        return std::sin(3.0 * x) + std::cos(2.0 * y) - 0.1 * (x * x + y * y);
    };
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(2, -4.0);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(2, 4.0);
    const Eigen::VectorXd x0 = (Eigen::VectorXd(2) << 1.0, 1.0).finished();
    Eigen::VectorXd scratch(2);
    const double f0 = f(x0, scratch);

    BoxMaximizeOptions opts;
    opts.max_iterations = 400;
    const auto res = box_maximize(f, x0, lower, upper, opts);
    CHECK(res.value > f0);
    Eigen::VectorXd grad(2);
    f(res.x, grad);
    const Eigen::VectorXd proj =
        (res.x + grad).cwiseMax(lower).cwiseMin(upper) - res.x;
    CHECK(proj.lpNorm<Eigen::Infinity>() < 1e-6);
}
