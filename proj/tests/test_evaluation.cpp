#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/rng.hpp"
#include "doctest.h"

using namespace cnhp;

namespace {

ScoreStream stream_of(const std::string& label, Reduction reduction,
                      const Eigen::VectorXd& per_month, int first_month = 0) {
    ScoreStream s;
    s.label = label;
    s.reduction = reduction;
    s.per_month = per_month;
    for (int i = 0; i < per_month.size(); ++i) s.months.push_back(first_month + i);
    s.aggregate = reduce(reduction, per_month);
    return s;
}

}  // namespace

TEST_CASE("count pll matches a hand computed gaussian density") {
    Rng rng(61);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(12));
        Eigen::VectorXd forecast(n), realized(n);
        for (int i = 0; i < n; ++i) {
            forecast[i] = 50.0 + 10.0 * rng.normal();
            realized[i] = forecast[i] + 5.0 * rng.normal();
        }
        const double variance = 4.0 + 20.0 * rng.uniform01();
        const ScoreStream s = make_count_pll("m", forecast, realized, 7, variance);

        double want_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = realized[i] - forecast[i];
            const double want =
                -0.5 * std::log(2.0 * M_PI * variance) - 0.5 * r * r / variance;
            CHECK(s.per_month[i] == doctest::Approx(want).epsilon(1e-12));
            want_sum += want;
        }
        CHECK(s.aggregate == doctest::Approx(want_sum).epsilon(1e-12));
        CHECK(s.months.front() == 7);
        CHECK(s.months.back() == 7 + n - 1);
    }
}

TEST_CASE("perfect unit variance forecasts sit at the gaussian mode") {
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 42.0);
    const ScoreStream s = make_count_pll("m", y, y, 0, 1.0);
    for (int i = 0; i < 12; ++i) {
        CHECK(s.per_month[i] == doctest::Approx(-0.91893853320467274).epsilon(1e-12));
    }
    CHECK(s.aggregate == doctest::Approx(-11.027262398456073).epsilon(1e-12));
    CHECK_THROWS_AS((void)make_count_pll("m", y, y, 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)make_count_pll("m", y, y.head(6), 0, 1.0), std::invalid_argument);
}

TEST_CASE("rmse stream keeps squared errors per month") {
    Eigen::VectorXd forecast(4), realized(4);
    forecast << 1.0, 2.0, 3.0, 4.0;
    realized << 1.0, 2.0, 3.0, 4.0;
    const ScoreStream perfect = make_rmse("m", forecast, realized, 0);
    CHECK(perfect.aggregate == 0.0);

    realized.array() += 10.0;
    const ScoreStream off = make_rmse("m", forecast, realized, 0);
    for (int i = 0; i < 4; ++i) CHECK(off.per_month[i] == doctest::Approx(100.0));
    CHECK(off.aggregate == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("training residual variance is the mean squared error with a floor") {
    Eigen::VectorXd forecast(3), realized(3);
    forecast << 1.0, 2.0, 3.0;
    realized << 2.0, 4.0, 0.0;
    CHECK(forecast_residual_variance(forecast, realized) ==
          doctest::Approx((1.0 + 4.0 + 9.0) / 3.0).epsilon(1e-14));
    CHECK(forecast_residual_variance(forecast, forecast) == doctest::Approx(1e-8));
}

TEST_CASE("bootstrap is deterministic per label") {
    Rng rng(83);
    Eigen::VectorXd values(24);
    for (int i = 0; i < values.size(); ++i) values[i] = rng.normal();
    const ScoreStream s = stream_of("count_pll/primary", Reduction::kSum, values);

    const ConfidenceInterval a = block_bootstrap_ci(s);
    const ConfidenceInterval b = block_bootstrap_ci(s);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK(a.seed == b.seed);
    CHECK(a.lo <= a.hi);
    CHECK(a.point == s.aggregate);

    ScoreStream other = s;
    other.label = "count_pll/variant";
    const ConfidenceInterval c = block_bootstrap_ci(other);
    CHECK(c.seed != a.seed);
    CHECK((c.lo != a.lo || c.hi != a.hi));
}

TEST_CASE("constant streams give zero width intervals") {
    const ScoreStream sum_stream =
        stream_of("s", Reduction::kSum, Eigen::VectorXd::Constant(15, 2.5));
    const ConfidenceInterval a = block_bootstrap_ci(sum_stream);
    CHECK(a.lo == a.hi);
    CHECK(a.lo == doctest::Approx(sum_stream.aggregate).epsilon(1e-13));

    const ScoreStream rms_stream =
        stream_of("r", Reduction::kRootMean, Eigen::VectorXd::Constant(9, 4.0));
    const ConfidenceInterval b = block_bootstrap_ci(rms_stream);
    CHECK(b.lo == b.hi);
    CHECK(b.lo == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("three month stream with block three collapses to the point") {
    Eigen::VectorXd values(3);
    values << 1.0, -2.0, 5.0;
    const ScoreStream s = stream_of("tiny", Reduction::kSum, values);
    const ConfidenceInterval ci = block_bootstrap_ci(s, 3, 500);
    CHECK(ci.lo == s.aggregate);
    CHECK(ci.hi == s.aggregate);

    const ScoreStream two = stream_of("two", Reduction::kSum, values.head(2));
    CHECK_THROWS_AS((void)block_bootstrap_ci(two, 3), std::invalid_argument);
}

TEST_CASE("bootstrap endpoints lie inside the enumerated resample range") {
    Eigen::VectorXd values(4);
    values << 0.5, -1.0, 3.0, 2.0;
    const ScoreStream s = stream_of("enum", Reduction::kSum, values);

    // Two blocks of three, truncated to four entries, starts in {0, 1}.
    std::set<double> achievable;
    for (int s1 = 0; s1 <= 1; ++s1) {
        for (int s2 = 0; s2 <= 1; ++s2) {
            achievable.insert(values[s1] + values[s1 + 1] + values[s1 + 2] + values[s2]);
        }
    }
    const ConfidenceInterval ci = block_bootstrap_ci(s, 3, 2000);
    const double min_v = *achievable.begin();
    const double max_v = *achievable.rbegin();
    CHECK(ci.lo >= min_v - 1e-12);
    CHECK(ci.hi <= max_v + 1e-12);
    CHECK(ci.lo <= ci.hi);
}

TEST_CASE("paired delta of a stream with itself is exactly zero") {
    Rng rng(97);
    Eigen::VectorXd values(18);
    for (int i = 0; i < values.size(); ++i) values[i] = rng.normal();
    const ScoreStream a = stream_of("alpha", Reduction::kRootMean, values.cwiseAbs2());
    const ConfidenceInterval ci = paired_delta_ci(a, a);
    CHECK(ci.point == 0.0);
    CHECK(ci.lo == 0.0);
    CHECK(ci.hi == 0.0);
}

TEST_CASE("paired resamples share block indices") {
    Rng rng(101);
    Eigen::VectorXd values(20);
    for (int i = 0; i < values.size(); ++i) values[i] = rng.normal();
    const ScoreStream a = stream_of("lhs", Reduction::kSum, values);
    const ScoreStream b =
        stream_of("rhs", Reduction::kSum, (values.array() + 0.75).matrix());

    // With shared indices every resample differs by exactly n * 0.75.
    const ConfidenceInterval ci = paired_delta_ci(a, b);
    CHECK(ci.point == doctest::Approx(-15.0).epsilon(1e-12));
    CHECK(ci.lo == doctest::Approx(-15.0).epsilon(1e-10));
    CHECK(ci.hi == doctest::Approx(-15.0).epsilon(1e-10));

    ScoreStream shifted = b;
    shifted.months[3] = 99;
    CHECK_THROWS_AS((void)paired_delta_ci(a, shifted), std::invalid_argument);
    ScoreStream other = b;
    other.reduction = Reduction::kRootMean;
    CHECK_THROWS_AS((void)paired_delta_ci(a, other), std::invalid_argument);
}

TEST_CASE("paired delta point is the aggregate difference") {
    Rng rng(103);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd va(12), vb(12);
        for (int i = 0; i < 12; ++i) {
            va[i] = rng.normal();
            vb[i] = rng.normal();
        }
        const ScoreStream a = stream_of("a", Reduction::kSum, va);
        const ScoreStream b = stream_of("b", Reduction::kSum, vb);
        const ConfidenceInterval ci = paired_delta_ci(a, b, 3, 200);
        CHECK(ci.point == doctest::Approx(va.sum() - vb.sum()).epsilon(1e-12));
        CHECK(ci.lo <= ci.hi);
    }
}

TEST_CASE("regret table respects metric orientation") {
    const std::vector<std::pair<std::string, double>> pll = {{"m1", -30.0}, {"m2", -35.0}};
    const auto pll_rows = regret_table("count_pll", pll);
    CHECK(pll_rows[0].regret == 0.0);
    CHECK(pll_rows[1].regret == 5.0);

    const std::vector<std::pair<std::string, double>> rmse = {{"m1", 0.5}, {"m2", 0.3}};
    const auto rmse_rows = regret_table("resp_rmse", rmse);
    CHECK(rmse_rows[0].regret == doctest::Approx(0.2));
    CHECK(rmse_rows[1].regret == 0.0);

    const auto single = regret_table("count_rmse", {{"only", 12.0}});
    CHECK(single.size() == 1);
    CHECK(single[0].regret == 0.0);

    CHECK_THROWS_AS((void)regret_table("count_pll", {}), std::invalid_argument);

    Rng rng(107);
    std::vector<std::pair<std::string, double>> random_vals;
    for (int i = 0; i < 9; ++i) random_vals.push_back({"m" + std::to_string(i), rng.normal()});
    double best = random_vals[0].second;
    for (const auto& [l, v] : random_vals) best = std::min(best, v);
    for (const auto& row : regret_table("count_rmse", random_vals)) {
        CHECK(row.regret >= 0.0);
        const double direct =
            row.value - best;
        CHECK(row.regret == doctest::Approx(direct).epsilon(1e-14));
    }
}

TEST_CASE("score stream validation rejects malformed streams") {
    ScoreStream s = stream_of("ok", Reduction::kSum, Eigen::VectorXd::Ones(5));
    s.validate();
    ScoreStream bad = s;
    bad.months.pop_back();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.label.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.per_month[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.per_month.resize(0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
