#include "core/baselines.hpp"

#include <cmath>

#include "core/mathutil.hpp"
#include "core/rng.hpp"
#include "doctest.h"

using namespace cnhp;

namespace {

CountPanel deterministic_counts(int months, int d) {
    CountPanel panel;
    panel.calendar = Calendar{YearMonth{2015, 1}, months};
    for (int j = 0; j < d; ++j) panel.components.push_back("series " + std::to_string(j));
    panel.counts.resize(months, d);
    for (int m = 0; m < months; ++m) {
        for (int j = 0; j < d; ++j) {
            panel.counts(m, j) = 3.0 + ((m * (j + 2) + j) % 7) + 2.0 * (j == 0 ? m % 5 : 0);
        }
    }
    return panel;
}

PanelData panel_with_response(const CountPanel& counts, const Eigen::VectorXd& y) {
    PanelData data;
    data.counts = counts;
    data.stream = synthesize_events(counts);
    data.response.calendar = counts.calendar;
    data.response.values = y;
    data.validate();
    return data;
}

PanelData ar_panel(int months, double slope, double noise, std::uint64_t seed) {
    const CountPanel counts = deterministic_counts(months, 3);
    Rng rng(seed);
    Eigen::VectorXd y(months);
    y[0] = 0.1;
    for (int m = 1; m < months; ++m) y[m] = slope * y[m - 1] + noise * rng.normal();
    return panel_with_response(counts, y);
}

}  // namespace

TEST_CASE("baseline registry round-trips names") {
    const auto& kinds = baseline_registry();
    CHECK(kinds.size() == 7);
    for (const BaselineKind kind : kinds) {
        CHECK(baseline_from_name(baseline_name(kind)) == kind);
    }
    CHECK(baseline_name(BaselineKind::kSelfExcitingHawkes) == "self_exciting_hawkes");
    CHECK(baseline_name(BaselineKind::kCoupledV1) == "coupled_v1");
    CHECK_THROWS_AS((void)baseline_from_name("nope"), std::invalid_argument);

    CHECK(baseline_forecasts_counts(BaselineKind::kExoHawkes));
    CHECK_FALSE(baseline_forecasts_counts(BaselineKind::kAr1));
    CHECK(baseline_forecasts_response(BaselineKind::kVarx));
    CHECK_FALSE(baseline_forecasts_response(BaselineKind::kSelfExcitingHawkes));
    CHECK(baseline_forecasts_counts(BaselineKind::kCoupledV1));
    CHECK(baseline_forecasts_response(BaselineKind::kCoupledV1));
}

TEST_CASE("ar1 recovers a planted autoregression") {
    const PanelData data = ar_panel(120, 0.9, 0.01, 7001);
    const BaselineModel model = fit_baseline(BaselineKind::kAr1, data, FitConfig{});
    CHECK(model.ar1.slope == doctest::Approx(0.9).epsilon(0.06));
    CHECK(std::abs(model.ar1.intercept) < 0.02);

    BaselineModel walk;
    walk.kind = BaselineKind::kAr1;
    walk.train_months = data.months();
    walk.ar1.slope = 1.0;
    walk.ar1.intercept = 0.0;
    const BaselineForecast fc = forecast_baseline(walk, data, 1, data.months());
    for (int m = 1; m < data.months(); ++m) {
        CHECK(fc.response[m - 1] == data.response.values(m - 1, 0));
    }
}

TEST_CASE("factor arx is the forecast head with no blend") {
    const PanelData data = ar_panel(60, 0.7, 0.05, 7002);
    const BaselineModel model = fit_baseline(BaselineKind::kFactorArx, data, FitConfig{});

    HeadConfig cfg;
    const HeadParams direct =
        fit_head(data.counts, data.response.primary(), data.months() - 1, cfg);
    REQUIRE(model.head.weights.size() == direct.weights.size());
    CHECK((model.head.weights.array() == direct.weights.array()).all());
    CHECK(model.head.intercept == direct.intercept);
    CHECK((model.head.context_pca.array() == direct.context_pca.array()).all());

    const BaselineForecast fc = forecast_baseline(model, data, 1, data.months());
    for (int m = 1; m < data.months(); ++m) {
        const int fm = m - 1;
        if (fm < cfg.context_lags) {
            CHECK(std::isnan(fc.response[m - 1]));
            continue;
        }
        const double want = predict_next(
            direct, build_features(data.response.values(fm, 0), data.counts, fm, direct));
        CHECK(fc.response[m - 1] == want);
    }
}

TEST_CASE("exo hawkes with zero loading matches the self exciting likelihood") {
    const PanelData data = ar_panel(48, 0.8, 0.1, 7003);
    BaselineModel exo = fit_baseline(BaselineKind::kExoHawkes, data, FitConfig{});
    exo.hawkes.gamma.setZero();

    const Eigen::MatrixXd z_lag = lagged_response_path(data.response);
    const Eigen::MatrixXd z_zero = Eigen::MatrixXd::Zero(data.months(), 1);
    const double with_lag = hawkes_loglik(exo.hawkes, data.stream, z_lag, false).value;
    const double with_zero = hawkes_loglik(exo.hawkes, data.stream, z_zero, false).value;
    CHECK(with_lag == with_zero);

    const BaselineModel self = fit_baseline(BaselineKind::kSelfExcitingHawkes, data, FitConfig{});
    CHECK(self.hawkes.gamma.isZero(0.0));
    const double self_ll = hawkes_loglik(self.hawkes, data.stream, z_zero, false).value;
    Eigen::MatrixXd self_as_exo = self.hawkes.gamma;
    HawkesParams borrowed = self.hawkes;
    const double borrowed_ll = hawkes_loglik(borrowed, data.stream, z_lag, false).value;
    CHECK(self_ll == borrowed_ll);
    CHECK(self_as_exo.isZero(0.0));
}

TEST_CASE("varx recovers a planted linear rule") {
    const int months = 150;
    const CountPanel counts = deterministic_counts(months, 3);
    const Eigen::MatrixXd logc = counts.counts.array().log1p();
    const Eigen::VectorXd x_mean = logc.colwise().mean().transpose();
    const Eigen::MatrixXd centered = logc.rowwise() - x_mean.transpose();
    const Eigen::VectorXd x_std = centered.array()
                                      .square()
                                      .colwise()
                                      .mean()
                                      .sqrt()
                                      .matrix()
                                      .transpose()
                                      .cwiseMax(1e-9);
    const Eigen::MatrixXd x = transition_inputs(counts, x_mean, x_std);

    Eigen::VectorXd y(months);
    y[0] = 0.2;
    for (int m = 1; m < months; ++m) {
        y[m] = 0.3 + 0.5 * y[m - 1] + 0.8 * x(m - 1, 0) + 0.01 * std::sin(1.7 * m);
    }
    const PanelData data = panel_with_response(counts, y);
    const BaselineModel model = fit_baseline(BaselineKind::kVarx, data, FitConfig{});

    CHECK(model.varx.phi == doctest::Approx(0.5).epsilon(0.08));
    CHECK(model.varx.beta[0] == doctest::Approx(0.8).epsilon(0.08));
    CHECK(std::abs(model.varx.beta[1]) < 0.05);
    CHECK(std::abs(model.varx.beta[2]) < 0.05);
    CHECK(model.varx.intercept == doctest::Approx(0.3).epsilon(0.15));

    const BaselineForecast fc = forecast_baseline(model, data, 1, months);
    for (int m = 1; m < months; ++m) {
        const double want = model.varx.intercept + model.varx.phi * y[m - 1] +
                            model.varx.beta.dot(x.row(m - 1));
        CHECK(fc.response[m - 1] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("local level recovers planted variances and forecasts causally") {
    Rng rng(7004);
    const int months = 240;
    Eigen::VectorXd y(months);
    double level = 0.0;
    for (int m = 0; m < months; ++m) {
        level += 0.5 * rng.normal();
        y[m] = level + 0.2 * rng.normal();
    }
    const PanelData data = panel_with_response(deterministic_counts(months, 2), y);

    const BaselineModel model = fit_baseline(BaselineKind::kLocalLevel, data, FitConfig{});
    CHECK(model.level.q > 0.25 * 0.4);
    CHECK(model.level.q < 0.25 * 2.5);
    CHECK(model.level.r > 0.04 * 0.4);
    CHECK(model.level.r < 0.04 * 2.5);

    const BaselineModel again = fit_baseline(BaselineKind::kLocalLevel, data, FitConfig{});
    CHECK(model.level.q == again.level.q);
    CHECK(model.level.r == again.level.r);

    FilterInputs in;
    in.x = Eigen::MatrixXd::Zero(months, 0);
    in.c = Eigen::MatrixXd::Zero(months, 0);
    in.y = y;
    const FilteredStates fs =
        filter_smooth(model.level.state(), in, Eigen::MatrixXd::Zero(months, 1));
    const BaselineForecast fc = forecast_baseline(model, data, 1, months);
    for (int m = 1; m < months; ++m) {
        CHECK(fc.response[m - 1] == fs.predicted_mean(m, 0));
    }
}

TEST_CASE("near zero observation noise makes the filter track observations") {
    Rng rng(7005);
    const int months = 40;
    Eigen::VectorXd y(months);
    for (int m = 0; m < months; ++m) y[m] = std::sin(0.3 * m) + 0.1 * rng.normal();

    LocalLevelParams level;
    level.q = 0.3;
    level.r = 1e-12;
    FilterInputs in;
    in.x = Eigen::MatrixXd::Zero(months, 0);
    in.c = Eigen::MatrixXd::Zero(months, 0);
    in.y = y;
    const FilteredStates fs = filter_smooth(level.state(), in, Eigen::MatrixXd::Zero(months, 1));
    for (int m = 0; m < months; ++m) {
        CHECK(fs.filtered_mean(m, 0) == doctest::Approx(y[m]).epsilon(1e-6));
    }
}

TEST_CASE("flat hawkes forecast equals the constant rate") {
    const PanelData data = ar_panel(36, 0.5, 0.05, 7006);
    BaselineModel model;
    model.kind = BaselineKind::kSelfExcitingHawkes;
    model.train_months = data.months();
    model.hawkes = HawkesParams::zeros(3, 1);
    model.hawkes.mu << inverse_softplus(4.0), inverse_softplus(2.5), inverse_softplus(0.75);
    model.hawkes.alpha.setZero();
    model.hawkes.omega.setConstant(1.0);

    const BaselineForecast fc = forecast_baseline(model, data, 1, 36);
    REQUIRE(fc.count_components.rows() == 35);
    for (int i = 0; i < fc.count_components.rows(); ++i) {
        CHECK(fc.count_components(i, 0) == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(fc.count_components(i, 1) == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(fc.count_components(i, 2) == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(fc.count_total[i] ==
              doctest::Approx(fc.count_components.row(i).sum()).epsilon(1e-12));
    }
}

TEST_CASE("every baseline fits and forecasts on a small panel") {
    const PanelData data = ar_panel(48, 0.8, 0.1, 7007);
    FitConfig cfg;
    for (const BaselineKind kind : baseline_registry()) {
        CAPTURE(baseline_name(kind));
        const BaselineModel model = fit_baseline(kind, data, cfg);
        CHECK(model.kind == kind);
        CHECK(model.train_months == 48);
        const BaselineForecast fc = forecast_baseline(model, data, 40, 48);
        if (baseline_forecasts_counts(kind)) {
            REQUIRE(fc.count_total.size() == 8);
            for (int i = 0; i < 8; ++i) {
                CHECK(std::isfinite(fc.count_total[i]));
                CHECK(fc.count_total[i] >= 0.0);
            }
        } else {
            CHECK(fc.count_total.size() == 0);
        }
        if (baseline_forecasts_response(kind)) {
            REQUIRE(fc.response.size() == 8);
            for (int i = 0; i < 8; ++i) CHECK(std::isfinite(fc.response[i]));
        } else {
            CHECK(fc.response.size() == 0);
        }
    }

    const PanelData tiny = ar_panel(20, 0.8, 0.1, 7008);
    CHECK_THROWS_AS((void)fit_baseline(BaselineKind::kAr1, tiny, cfg), std::invalid_argument);
}

TEST_CASE("coupled v1 wraps the registry configuration") {
    const PanelData data = ar_panel(48, 0.8, 0.1, 7009);
    const BaselineModel model = fit_baseline(BaselineKind::kCoupledV1, data, FitConfig{});
    CHECK(model.coupled.config.em_iterations == 1);
    CHECK_FALSE(model.coupled.config.enable_head);
    CHECK(model.coupled.config.enable_ir);
    CHECK(model.coupled.config.enable_ri);
    CHECK(model.coupled.config.xi_init == 8.0);
    CHECK(model.coupled.objective_trace.size() == 2);

    const BaselineForecast fc = forecast_baseline(model, data, 30, 48);
    const ForecastSeries direct = forecast_coupled(model.coupled, data, 30, 48);
    for (int i = 0; i < fc.count_total.size(); ++i) {
        CHECK(fc.count_total[i] == direct.count_total[i]);
        CHECK(fc.response[i] == direct.response[i]);
    }
}

TEST_CASE("hawkes baseline fits are deterministic") {
    const PanelData data = ar_panel(40, 0.7, 0.08, 7010);
    const BaselineModel a = fit_baseline(BaselineKind::kExoHawkes, data, FitConfig{});
    const BaselineModel b = fit_baseline(BaselineKind::kExoHawkes, data, FitConfig{});
    CHECK((a.hawkes.mu.array() == b.hawkes.mu.array()).all());
    CHECK((a.hawkes.alpha.array() == b.hawkes.alpha.array()).all());
    CHECK((a.hawkes.omega.array() == b.hawkes.omega.array()).all());
    CHECK((a.hawkes.gamma.array() == b.hawkes.gamma.array()).all());
}
