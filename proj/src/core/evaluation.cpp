#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace cnhp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kVarianceFloor = 1e-8;

void check_pair(const Eigen::VectorXd& forecast, const Eigen::VectorXd& realized) {
    if (forecast.size() != realized.size() || forecast.size() == 0) {
        throw std::invalid_argument("forecast and realized lengths must match and be non-empty");
    }
    if (!forecast.allFinite() || !realized.allFinite()) {
        throw std::invalid_argument("metric inputs must be finite");
    }
}

Eigen::VectorXd resample(const Eigen::VectorXd& values, const std::vector<int>& starts,
                         int block) {
    const int n = static_cast<int>(values.size());
    Eigen::VectorXd out(n);
    int pos = 0;
    for (const int start : starts) {
        for (int offset = 0; offset < block && pos < n; ++offset, ++pos) {
            out[pos] = values[start + offset];
        }
    }
    return out;
}

double percentile(std::vector<double> sorted_values, double q) {
    const double idx = q * (static_cast<double>(sorted_values.size()) - 1.0);
    const int lo = static_cast<int>(std::floor(idx));
    const int hi = static_cast<int>(std::ceil(idx));
    const double w = idx - lo;
    return (1.0 - w) * sorted_values[lo] + w * sorted_values[hi];
}

std::vector<int> draw_starts(Rng& rng, int n, int block) {
    const int block_count = (n + block - 1) / block;
    std::vector<int> starts(block_count);
    for (int i = 0; i < block_count; ++i) {
        starts[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - block + 1)));
    }
    return starts;
}

}  // namespace

void ScoreStream::validate() const {
    if (per_month.size() == 0) throw std::invalid_argument("empty score stream");
    if (static_cast<int>(months.size()) != per_month.size()) {
        throw std::invalid_argument("score stream month labels do not match values");
    }
    if (!per_month.allFinite()) throw std::invalid_argument("score stream has non-finite values");
    if (label.empty()) throw std::invalid_argument("score stream needs a label");
}

double reduce(Reduction reduction, const Eigen::VectorXd& per_month) {
    if (reduction == Reduction::kSum) return per_month.sum();
    return std::sqrt(per_month.mean());
}

ScoreStream make_count_pll(const std::string& label, const Eigen::VectorXd& forecast,
                           const Eigen::VectorXd& realized, int first_month, double variance) {
    check_pair(forecast, realized);
    if (!(variance > 0.0)) throw std::invalid_argument("count variance must be positive");
    ScoreStream s;
    s.label = label;
    s.reduction = Reduction::kSum;
    s.per_month.resize(forecast.size());
    for (int i = 0; i < forecast.size(); ++i) {
        const double resid = realized[i] - forecast[i];
        s.per_month[i] = -0.5 * (kLog2Pi + std::log(variance) + resid * resid / variance);
        s.months.push_back(first_month + i);
    }
    s.aggregate = reduce(s.reduction, s.per_month);
    return s;
}

ScoreStream make_rmse(const std::string& label, const Eigen::VectorXd& forecast,
                      const Eigen::VectorXd& realized, int first_month) {
    check_pair(forecast, realized);
    ScoreStream s;
    s.label = label;
    s.reduction = Reduction::kRootMean;
    s.per_month = (realized - forecast).cwiseAbs2();
    for (int i = 0; i < forecast.size(); ++i) s.months.push_back(first_month + i);
    s.aggregate = reduce(s.reduction, s.per_month);
    return s;
}

double forecast_residual_variance(const Eigen::VectorXd& forecast,
                                  const Eigen::VectorXd& realized) {
    check_pair(forecast, realized);
    return std::max((realized - forecast).squaredNorm() / forecast.size(), kVarianceFloor);
}

ConfidenceInterval block_bootstrap_ci(const ScoreStream& s, int block, int resamples,
                                      std::uint64_t base_seed) {
    s.validate();
    const int n = static_cast<int>(s.per_month.size());
    if (block < 1 || n < block) throw std::invalid_argument("stream shorter than the block");
    if (resamples < 2) throw std::invalid_argument("need at least two resamples");

    ConfidenceInterval ci;
    ci.point = s.aggregate;
    ci.resamples = resamples;
    ci.block = block;
    ci.seed = label_seed(s.label, base_seed);

    std::vector<double> draws(resamples);
    for (int b = 0; b < resamples; ++b) {
        Rng rng(substream_seed(ci.seed, static_cast<std::uint64_t>(b)));
        const std::vector<int> starts = draw_starts(rng, n, block);
        draws[b] = reduce(s.reduction, resample(s.per_month, starts, block));
    }
    std::sort(draws.begin(), draws.end());
    ci.lo = percentile(draws, 0.025);
    ci.hi = percentile(draws, 0.975);
    return ci;
}

ConfidenceInterval paired_delta_ci(const ScoreStream& a, const ScoreStream& b, int block,
                                   int resamples, std::uint64_t base_seed) {
    a.validate();
    b.validate();
    if (a.months != b.months) throw std::invalid_argument("paired streams cover different months");
    if (a.reduction != b.reduction) {
        throw std::invalid_argument("paired streams use different reductions");
    }
    const int n = static_cast<int>(a.per_month.size());
    if (block < 1 || n < block) throw std::invalid_argument("stream shorter than the block");

    ConfidenceInterval ci;
    ci.point = a.aggregate - b.aggregate;
    ci.resamples = resamples;
    ci.block = block;
    ci.seed = label_seed(a.label + "|" + b.label, base_seed);

    std::vector<double> draws(resamples);
    for (int d = 0; d < resamples; ++d) {
        Rng rng(substream_seed(ci.seed, static_cast<std::uint64_t>(d)));
        const std::vector<int> starts = draw_starts(rng, n, block);
        draws[d] = reduce(a.reduction, resample(a.per_month, starts, block)) -
                   reduce(b.reduction, resample(b.per_month, starts, block));
    }
    std::sort(draws.begin(), draws.end());
    ci.lo = percentile(draws, 0.025);
    ci.hi = percentile(draws, 0.975);
    return ci;
}

std::vector<RegretRow> regret_table(const std::string& metric,
                                    const std::vector<std::pair<std::string, double>>& values) {
    if (values.empty()) throw std::invalid_argument("regret table needs at least one value");
    const bool higher_better = metric.find("pll") != std::string::npos;
    double best = values.front().second;
    for (const auto& [label, value] : values) {
        best = higher_better ? std::max(best, value) : std::min(best, value);
    }
    std::vector<RegretRow> rows;
    rows.reserve(values.size());
    for (const auto& [label, value] : values) {
        rows.push_back({label, value, higher_better ? best - value : value - best});
    }
    return rows;
}

}  // namespace cnhp
