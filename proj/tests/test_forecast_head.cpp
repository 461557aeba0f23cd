#include "core/forecast_head.hpp"

#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"
#include "doctest.h"

using namespace cnhp;

namespace {

CountPanel random_panel(int months, std::uint64_t seed) {
    CountPanel panel;
    panel.calendar = Calendar{YearMonth{2014, 1}, months};
    panel.components = component_registry();
    panel.counts.resize(months, static_cast<int>(panel.components.size()));
    Rng rng(seed);
    for (int m = 0; m < months; ++m) {
        for (int d = 0; d < panel.counts.cols(); ++d) {
            panel.counts(m, d) = static_cast<double>(rng.below(40));
        }
    }
    return panel;
}

}  // namespace

TEST_CASE("feature layout is response, context, then calendar") {
    CountPanel panel = random_panel(30, 5);
    panel.counts.setZero();
    HeadParams p;
    p.cfg = HeadConfig{};
    p.stack_mean = Eigen::VectorXd::Zero(16);
    p.stack_std = Eigen::VectorXd::Ones(16);
    p.context_pca = Eigen::MatrixXd::Identity(16, 3);

    const Eigen::VectorXd f = build_features(0.0, panel, 24, p);
    REQUIRE(f.size() == 6);
    CHECK(f[0] == 0.0);
    CHECK(f.segment(1, 3).isZero(0.0));
    CHECK(f[4] == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK(f[5] == doctest::Approx(1.0).epsilon(1e-15));

    const Eigen::VectorXd g = build_features(0.7, panel, 25, p);
    CHECK(g[0] == 0.7);
    CHECK(g[4] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g[5] == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("calendar features are exactly 12-periodic") {
    CountPanel panel = random_panel(40, 6);
    HeadParams p = fit_head(panel, Eigen::VectorXd::LinSpaced(40, 0.0, 1.0), 35, HeadConfig{});
    for (int m = 2; m + 12 < 35; ++m) {
        const Eigen::VectorXd a = build_features(0.2, panel, m, p);
        const Eigen::VectorXd b = build_features(0.2, panel, m + 12, p);
        CHECK(a[4] == b[4]);
        CHECK(a[5] == b[5]);
    }
}

TEST_CASE("context projection matches the dense eigen-oracle") {
    CountPanel panel = random_panel(60, 7);
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(60, -1.0, 1.0);
    const int train_end = 50;
    HeadParams p = fit_head(panel, y, train_end, HeadConfig{});

    const int stack_dim = 2 * panel.dim();
    const int n = train_end - 2 + 1;
    Eigen::MatrixXd stacks(n, stack_dim);
    for (int m = 2; m <= train_end; ++m) {
        stacks.row(m - 2) = head_lag_stack(panel, m, 2).transpose();
    }
    const Eigen::RowVectorXd mean = stacks.colwise().mean();
    Eigen::MatrixXd centered = stacks.rowwise() - mean;
    const Eigen::VectorXd std_dev =
        centered.array().square().colwise().mean().sqrt().matrix().transpose();
    CHECK((p.stack_mean - mean.transpose()).norm() < 1e-12);
    CHECK((p.stack_std - std_dev.cwiseMax(1e-9)).norm() < 1e-12);

    const Eigen::MatrixXd standardized =
        centered.array().rowwise() / p.stack_std.transpose().array();
    const Eigen::MatrixXd cov = standardized.transpose() * standardized / double(n);
    for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd v = p.context_pca.col(c);
        CHECK(std::abs(v.norm() - 1.0) < 1e-10);
        const Eigen::VectorXd image = cov * v;
        const double lambda = v.dot(image);
        CHECK((image - lambda * v).norm() < 1e-9);
        for (int c2 = c + 1; c2 < 3; ++c2) {
            CHECK(std::abs(v.dot(p.context_pca.col(c2))) < 1e-10);
        }
    }
}

TEST_CASE("planted linear relationship is recovered") {
    CountPanel panel = random_panel(72, 8);
    const int train_end = 60;
    Eigen::VectorXd w(6);
    w << 0.4, 0.8, -0.5, 0.3, 0.25, -0.15;
    const double intercept = 0.11;

    Eigen::VectorXd probe = Eigen::VectorXd::Zero(72);
    HeadParams stats = fit_head(panel, probe, train_end, HeadConfig{});

    Eigen::VectorXd y = Eigen::VectorXd::Zero(72);
    y[0] = 0.3;
    y[1] = -0.2;
    y[2] = 0.5;
    for (int m = 2; m < 71; ++m) {
        y[m + 1] = w.dot(build_features(y[m], panel, m, stats)) + intercept;
    }

    HeadParams p = fit_head(panel, y, train_end, HeadConfig{});
    CHECK((p.weights - w).norm() < 1e-4);
    CHECK(p.intercept == doctest::Approx(intercept).epsilon(1e-4));

    const int first = 2;
    const int n = train_end - 1 - first + 1;
    Eigen::MatrixXd x(n, 7);
    Eigen::VectorXd t(n);
    for (int m = first; m <= train_end - 1; ++m) {
        x.row(m - first).head(6) = build_features(y[m], panel, m, p).transpose();
        x(m - first, 6) = 1.0;
        t[m - first] = y[m + 1];
    }
    Eigen::MatrixXd gram = x.transpose() * x;
    for (int i = 0; i < 6; ++i) gram(i, i) += 1e-6;
    Eigen::VectorXd sol(7);
    sol << p.weights, p.intercept;
    CHECK((gram * sol - x.transpose() * t).norm() < 1e-8);

    for (int m = train_end; m < 71; ++m) {
        const double pred = predict_next(p, build_features(y[m], panel, m, p));
        CHECK(std::abs(pred - y[m + 1]) < 1e-3);
    }
}

TEST_CASE("extreme ridge shrinks to the target mean") {
    CountPanel panel = random_panel(48, 9);
    Rng rng(10);
    Eigen::VectorXd y(48);
    for (int m = 0; m < 48; ++m) y[m] = rng.normal();
    HeadConfig cfg;
    cfg.ridge_lambda = 1e12;
    const int train_end = 40;
    HeadParams p = fit_head(panel, y, train_end, cfg);
    CHECK(p.weights.cwiseAbs().maxCoeff() < 1e-6);
    const double target_mean = y.segment(3, train_end - 2).mean();
    CHECK(p.intercept == doctest::Approx(target_mean).scale(1.0).epsilon(1e-7));
}

TEST_CASE("head fitting is bit-identical across runs") {
    CountPanel panel = random_panel(60, 11);
    Rng rng(12);
    Eigen::VectorXd y(60);
    for (int m = 0; m < 60; ++m) y[m] = rng.normal();
    HeadParams a = fit_head(panel, y, 50, HeadConfig{});
    HeadParams b = fit_head(panel, y, 50, HeadConfig{});
    CHECK(a.weights == b.weights);
    CHECK(a.intercept == b.intercept);
    CHECK(a.context_pca == b.context_pca);
    CHECK(a.stack_mean == b.stack_mean);
    CHECK(a.stack_std == b.stack_std);
}

TEST_CASE("prediction is affine in the features") {
    HeadParams p;
    p.cfg = HeadConfig{};
    p.weights = Eigen::VectorXd::Zero(6);
    p.intercept = 0.3;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(6);
    CHECK(predict_next(p, f) == 0.3);
    p.weights[0] = 1.0;
    f[0] = 2.0;
    CHECK(predict_next(p, f) == doctest::Approx(2.3).epsilon(1e-15));
    CHECK_THROWS_AS(static_cast<void>(predict_next(p, Eigen::VectorXd::Zero(5))),
                    std::invalid_argument);
}

TEST_CASE("optional feature blocks follow the config flags") {
    CountPanel panel = random_panel(60, 13);
    Rng rng(14);
    Eigen::VectorXd y(60);
    for (int m = 0; m < 60; ++m) y[m] = rng.normal();

    HeadConfig no_cal;
    no_cal.calendar = false;
    HeadParams p1 = fit_head(panel, y, 50, no_cal);
    CHECK(p1.weights.size() == 4);

    HeadConfig no_ctx;
    no_ctx.use_context = false;
    HeadParams p2 = fit_head(panel, y, 50, no_ctx);
    CHECK(p2.weights.size() == 3);

    HeadConfig with_state;
    with_state.use_state = true;
    Eigen::MatrixXd state(60, 2);
    state.setRandom();
    HeadParams p3 = fit_head(panel, y, 50, with_state, state);
    CHECK(p3.weights.size() == 8);
    const Eigen::VectorXd f =
        build_features(y[10], panel, 10, p3, state.row(10).transpose());
    CHECK(f.size() == 8);
    CHECK(f[6] == state(10, 0));
    CHECK(f[7] == state(10, 1));
}

TEST_CASE("head rejects malformed requests") {
    CountPanel panel = random_panel(30, 15);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(30);
    HeadParams p = fit_head(panel, y, 25, HeadConfig{});
    CHECK_THROWS_AS(static_cast<void>(build_features(0.0, panel, 1, p)),
                    std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(fit_head(panel, y, 30, HeadConfig{})),
                    std::invalid_argument);
    HeadConfig bad;
    bad.blend_alpha = 1.5;
    CHECK_THROWS_AS(static_cast<void>(fit_head(panel, y, 25, bad)), std::invalid_argument);
    HeadConfig bad_ridge;
    bad_ridge.ridge_lambda = 0.0;
    CHECK_THROWS_AS(static_cast<void>(fit_head(panel, y, 25, bad_ridge)),
                    std::invalid_argument);
}
