#include "core/semisynthetic.hpp"

#include <cmath>

#include "doctest.h"

using namespace cnhp;

namespace {

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    return denom > 0.0 ? ca.dot(cb) / denom : 0.0;
}

}  // namespace

TEST_CASE("scenario names round trip") {
    for (const Scenario s : {Scenario::kOneWay, Scenario::kTwoWay, Scenario::kNull}) {
        CHECK(scenario_from_name(scenario_name(s)) == s);
    }
    CHECK_THROWS_AS((void)scenario_from_name("sideways"), std::invalid_argument);
}

TEST_CASE("planting is deterministic and respects the scenario") {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::kTwoWay;
    const GroundTruth a = plant_ground_truth(cfg, 20260408ull, 3);
    const GroundTruth b = plant_ground_truth(cfg, 20260408ull, 3);
    CHECK(a.seed == 20260408ull + 3);
    CHECK(same_matrix(a.state_star.B, b.state_star.B));
    CHECK(same_matrix(a.hawkes_star.gamma, b.hawkes_star.gamma));
    CHECK((a.forward_mask.array() == b.forward_mask.array()).all());
    CHECK((a.reverse_mask.array() == b.reverse_mask.array()).all());

    const GroundTruth c = plant_ground_truth(cfg, 20260408ull, 4);
    CHECK_FALSE(same_matrix(a.state_star.B, c.state_star.B));

    CHECK(a.forward_mask.sum() == cfg.forward_support);
    CHECK(a.reverse_mask.sum() == cfg.reverse_support);
    for (int j = 0; j < a.state_star.B.cols(); ++j) {
        const double v = std::abs(a.state_star.B(0, j));
        if (a.forward_mask(0, j)) {
            CHECK(v >= cfg.magnitude_lo);
            CHECK(v <= cfg.magnitude_hi);
        } else {
            CHECK(v == 0.0);
        }
    }

    ScenarioConfig one = cfg;
    one.scenario = Scenario::kOneWay;
    const GroundTruth g1 = plant_ground_truth(one, 7, 0);
    CHECK(g1.hawkes_star.gamma.isZero(0.0));
    CHECK(g1.reverse_mask.sum() == 0);
    CHECK(g1.forward_mask.sum() == one.forward_support);

    ScenarioConfig null_cfg = cfg;
    null_cfg.scenario = Scenario::kNull;
    const GroundTruth g0 = plant_ground_truth(null_cfg, 7, 0);
    CHECK(g0.state_star.B.isZero(0.0));
    CHECK(g0.hawkes_star.gamma.isZero(0.0));
    CHECK(g0.forward_mask.sum() == 0);
    CHECK(g0.reverse_mask.sum() == 0);
}

TEST_CASE("replication generation is deterministic and consistent") {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::kTwoWay;
    cfg.months = 48;
    const GroundTruth gt = plant_ground_truth(cfg, 31ull, 2);
    const PanelData a = generate_replication(gt);
    const PanelData b = generate_replication(gt);

    CHECK(a.months() == 48);
    CHECK(a.counts.dim() == 8);
    CHECK(a.response.channels() == 1);
    CHECK(same_matrix(a.counts.counts, b.counts.counts));
    CHECK(same_matrix(a.response.values, b.response.values));
    REQUIRE(a.stream.size() == b.stream.size());
    for (std::size_t i = 0; i < a.stream.size(); ++i) {
        CHECK(a.stream.times[i] == b.stream.times[i]);
        CHECK(a.stream.components[i] == b.stream.components[i]);
    }
    const Eigen::MatrixXd recounted = monthly_counts(a.stream);
    CHECK(same_matrix(a.counts.counts, recounted));
}

TEST_CASE("null planting decouples counts from the response") {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::kNull;
    cfg.months = 36;
    double corr_sum = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const GroundTruth gt = plant_ground_truth(cfg, 555ull, rep);
        const PanelData data = generate_replication(gt);
        corr_sum += pearson(data.counts.month_totals(), data.response.primary());
    }
    CHECK(std::abs(corr_sum / 50.0) < 0.1);
}

TEST_CASE("directional f1 covers the boundary conventions") {
    Eigen::MatrixXi a(2, 2), b(2, 2);
    a << 1, 0, 0, 1;
    b << 1, 0, 0, 1;
    CHECK(directional_f1(a, b) == 1.0);

    b << 0, 1, 1, 0;
    CHECK(directional_f1(a, b) == 0.0);

    CHECK(directional_f1(Eigen::MatrixXi::Zero(3, 2), Eigen::MatrixXi::Zero(3, 2)) == 1.0);
    CHECK(directional_f1(Eigen::MatrixXi::Ones(3, 2), Eigen::MatrixXi::Zero(3, 2)) == 0.0);
    CHECK(directional_f1(Eigen::MatrixXi::Zero(3, 2), Eigen::MatrixXi::Ones(3, 2)) == 0.0);

    Eigen::MatrixXi p(1, 4), t(1, 4);
    p << 1, 1, 0, 0;
    t << 1, 0, 1, 0;
    CHECK(directional_f1(p, t) == doctest::Approx(0.5));
    CHECK(directional_f1(p.transpose(), t.transpose()) == doctest::Approx(0.5));

    CHECK_THROWS_AS((void)directional_f1(p, t.transpose()), std::invalid_argument);
}

TEST_CASE("structure masks threshold coefficient magnitudes") {
    VarxParams varx;
    varx.beta = (Eigen::VectorXd(4) << 0.5, -0.029, 0.031, 0.0).finished();
    const Eigen::MatrixXi mask = varx_forward_mask(varx);
    CHECK(mask(0, 0) == 1);
    CHECK(mask(0, 1) == 0);
    CHECK(mask(0, 2) == 1);
    CHECK(mask(0, 3) == 0);

    HawkesParams exo = HawkesParams::zeros(3, 1);
    exo.gamma << 0.2, -0.01, -0.4;
    const Eigen::MatrixXi rmask = exo_reverse_mask(exo);
    CHECK(rmask(0, 0) == 1);
    CHECK(rmask(1, 0) == 0);
    CHECK(rmask(2, 0) == 1);
}

TEST_CASE("study produces deterministic labeled rows") {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::kTwoWay;
    cfg.months = 36;
    FitConfig fit;
    fit.em_iterations = 1;
    const auto rows = run_semisynth_study(cfg, 2, fit, 99ull);
    const auto again = run_semisynth_study(cfg, 2, fit, 99ull);

    REQUIRE(rows.size() == 8);  // coupled x2 directions + varx + exo, per replication
    REQUIRE(again.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].replication == again[i].replication);
        CHECK(rows[i].model == again[i].model);
        CHECK(rows[i].direction == again[i].direction);
        CHECK(rows[i].f1 == again[i].f1);
        CHECK(rows[i].f1 >= 0.0);
        CHECK(rows[i].f1 <= 1.0);
    }
    CHECK(study_mean_f1(rows, "coupled", "i_to_r") >= 0.0);
    CHECK(study_mean_f1(rows, "varx", "i_to_r") >= 0.0);
    CHECK(study_mean_f1(rows, "exo_hawkes", "r_to_i") >= 0.0);
    CHECK_THROWS_AS((void)study_mean_f1(rows, "varx", "r_to_i"), std::invalid_argument);

    ScenarioConfig one = cfg;
    one.scenario = Scenario::kOneWay;
    const auto one_rows = run_semisynth_study(one, 1, fit, 99ull);
    REQUIRE(one_rows.size() == 3);  // no coupled reverse row in one-way studies
    for (const auto& row : one_rows) CHECK(row.direction != (row.model == "coupled" ? "r_to_i" : ""));
}

TEST_CASE("scenario validation rejects broken settings") {
    ScenarioConfig cfg;
    cfg.months = 10;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ScenarioConfig{};
    cfg.forward_support = 9;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ScenarioConfig{};
    cfg.magnitude_lo = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ScenarioConfig{};
    cfg.self_excitation = 1.2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ScenarioConfig{};
    cfg.state_ar = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS((void)plant_ground_truth(ScenarioConfig{}, 1ull, -1),
                    std::invalid_argument);
}
