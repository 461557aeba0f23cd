#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace cnhp {

/// How per-month contributions fold into the headline number: log-likelihoods
/// sum, RMSE-style metrics keep squared errors per month and report the root
/// of their mean.
enum class Reduction {
    kSum,
    kRootMean,
};

struct ScoreStream {
    std::string label;
    Reduction reduction = Reduction::kSum;
    std::vector<int> months;
    Eigen::VectorXd per_month;
    double aggregate = 0.0;

    void validate() const;
};

double reduce(Reduction reduction, const Eigen::VectorXd& per_month);

/// Gaussian log density of each realized total under the forecast mean and a
/// shared variance; aggregate is the sum.
ScoreStream make_count_pll(const std::string& label, const Eigen::VectorXd& forecast,
                           const Eigen::VectorXd& realized, int first_month, double variance);

/// Squared forecast errors per month; aggregate is the root mean square.
ScoreStream make_rmse(const std::string& label, const Eigen::VectorXd& forecast,
                      const Eigen::VectorXd& realized, int first_month);

/// Mean squared training residual with a small floor, the variance plugged
/// into make_count_pll.
double forecast_residual_variance(const Eigen::VectorXd& forecast,
                                  const Eigen::VectorXd& realized);

struct ConfidenceInterval {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
    int resamples = 1000;
    int block = 3;
    std::uint64_t seed = 0;
};

/// Moving-block bootstrap over per-month contributions. Block starts are
/// drawn uniformly from [0, n-block] (no wrapping), ceil(n/block) blocks are
/// concatenated and truncated to n, and the aggregate is recomputed. Each
/// resample derives its generator from (label seed, draw index), so results
/// do not depend on evaluation order.
ConfidenceInterval block_bootstrap_ci(const ScoreStream& s, int block = 3, int resamples = 1000,
                                      std::uint64_t base_seed = 20260408ull);

/// Bootstrap of aggregate(a) - aggregate(b) with the same resample indices
/// applied to both streams; requires identical month lists.
ConfidenceInterval paired_delta_ci(const ScoreStream& a, const ScoreStream& b, int block = 3,
                                   int resamples = 1000,
                                   std::uint64_t base_seed = 20260408ull);

struct RegretRow {
    std::string label;
    double value = 0.0;
    double regret = 0.0;
};

/// Gap to the best model in the column; PLL-style metrics (name contains
/// "pll") treat larger as better, everything else smaller as better.
std::vector<RegretRow> regret_table(const std::string& metric,
                                    const std::vector<std::pair<std::string, double>>& values);

}  // namespace cnhp
