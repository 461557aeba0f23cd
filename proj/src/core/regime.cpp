#include "core/regime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace cnhp {

namespace {

double spread_or_one(const std::vector<double>& values) {
    if (values.size() < 2) return 1.0;
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return sd > 1e-12 ? sd : 1.0;
}

double group_mean(const std::vector<RegimeRow>& rows, CandidateKind kind) {
    double sum = 0.0;
    int count = 0;
    for (const RegimeRow& row : rows) {
        if (row.kind == kind) {
            sum += row.joint;
            ++count;
        }
    }
    return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string candidate_kind_name(CandidateKind kind) {
    switch (kind) {
        case CandidateKind::kMilestone: return "milestone";
        case CandidateKind::kPlacebo: return "placebo";
    }
    throw std::invalid_argument("unknown candidate kind");
}

CandidateKind candidate_kind_from_name(const std::string& name) {
    if (name == "milestone") return CandidateKind::kMilestone;
    if (name == "placebo") return CandidateKind::kPlacebo;
    throw std::invalid_argument("unknown candidate kind: " + name);
}

SplitGain split_gain(const SplitCandidate& candidate, const PanelData& data,
                     const FitConfig& cfg) {
    if (candidate.month < kSplitHalfMonths ||
        candidate.month + kSplitHalfMonths > data.months()) {
        throw std::out_of_range("split window is truncated by the panel");
    }
    const int lo = candidate.month - kSplitHalfMonths;
    const int hi = candidate.month + kSplitHalfMonths;
    const PanelData pooled_data = data.window(lo, hi);
    const PanelData pre_data = data.window(lo, candidate.month);
    const PanelData post_data = data.window(candidate.month, hi);

    FitConfig half_cfg = cfg;
    half_cfg.em_iterations = std::min(cfg.em_iterations, 3);

    const CoupledModel pooled = fit_coupled(cfg, pooled_data);
    const CoupledModel pre = fit_coupled(half_cfg, pre_data);
    const CoupledModel post = fit_coupled(half_cfg, post_data);

    SplitGain gain;
    gain.pooled_event_ll = joint_objective_parts(pooled, pooled_data).event_loglik;
    gain.pre_event_ll = joint_objective_parts(pre, pre_data).event_loglik;
    gain.post_event_ll = joint_objective_parts(post, post_data).event_loglik;
    gain.coupling_shift_norm =
        (post.effective_input_map() - pre.effective_input_map()).norm();

    const int warm = pooled.head.cfg.context_lags + 1;
    const ForecastSeries pooled_pre =
        forecast_coupled(pooled, pooled_data, warm, kSplitHalfMonths);
    const ForecastSeries pooled_post =
        forecast_coupled(pooled, pooled_data, kSplitHalfMonths + warm, 2 * kSplitHalfMonths);
    const ForecastSeries pre_fc = forecast_coupled(pre, pre_data, warm, kSplitHalfMonths);
    const ForecastSeries post_fc = forecast_coupled(post, post_data, warm, kSplitHalfMonths);

    const Eigen::VectorXd y_pre = pre_data.response.primary();
    const Eigen::VectorXd y_post = post_data.response.primary();
    double pooled_sq = 0.0;
    double split_sq = 0.0;
    int n = 0;
    for (int m = warm; m < kSplitHalfMonths; ++m) {
        const int i = m - warm;
        const double ep0 = pooled_pre.response[i] - y_pre[m];
        const double ep1 = pooled_post.response[i] - y_post[m];
        const double es0 = pre_fc.response[i] - y_pre[m];
        const double es1 = post_fc.response[i] - y_post[m];
        pooled_sq += ep0 * ep0 + ep1 * ep1;
        split_sq += es0 * es0 + es1 * es1;
        n += 2;
    }
    gain.pooled_rmse = std::sqrt(pooled_sq / n);
    gain.split_rmse = std::sqrt(split_sq / n);
    return gain;
}

std::vector<double> normalized_joint(const std::vector<SplitGain>& gains) {
    std::vector<double> ll(gains.size()), rmse(gains.size());
    for (std::size_t i = 0; i < gains.size(); ++i) {
        ll[i] = gains[i].count_ll_gain();
        rmse[i] = gains[i].resp_rmse_gain();
    }
    const double s_ll = spread_or_one(ll);
    const double s_rmse = spread_or_one(rmse);
    std::vector<double> joint(gains.size());
    for (std::size_t i = 0; i < gains.size(); ++i) {
        joint[i] = ll[i] / s_ll + rmse[i] / s_rmse;
    }
    return joint;
}

RegimeTable placebo_rank(const std::vector<SplitCandidate>& candidates,
                         const PanelData& data, const FitConfig& cfg) {
    if (candidates.empty()) throw std::invalid_argument("no split candidates");
    for (const SplitCandidate& c : candidates) {
        if (c.month < kSplitHalfMonths || c.month + kSplitHalfMonths > data.months()) {
            throw std::out_of_range("split window is truncated by the panel");
        }
    }

    std::vector<SplitGain> gains(candidates.size());
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(
        candidates.size(), std::max(1u, std::thread::hardware_concurrency())));
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = cursor.fetch_add(1); i < candidates.size();
                     i = cursor.fetch_add(1)) {
                    gains[i] = split_gain(candidates[i], data, cfg);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (std::thread& worker : pool) worker.join();
    for (const std::exception_ptr& err : errors) {
        if (err) std::rethrow_exception(err);
    }

    const std::vector<double> joint = normalized_joint(gains);

    RegimeTable table;
    table.rows.resize(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        RegimeRow& row = table.rows[i];
        row.month = candidates[i].month;
        row.kind = candidates[i].kind;
        row.label = candidates[i].label;
        row.count_ll_gain = gains[i].count_ll_gain();
        row.resp_rmse_gain = gains[i].resp_rmse_gain();
        row.joint = joint[i];
        row.coupling_shift_norm = gains[i].coupling_shift_norm;
    }
    std::sort(table.rows.begin(), table.rows.end(),
              [](const RegimeRow& a, const RegimeRow& b) {
                  if (a.joint != b.joint) return a.joint > b.joint;
                  return a.month < b.month;
              });
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        table.rows[i].rank = static_cast<int>(i) + 1;
    }
    table.milestone_mean = group_mean(table.rows, CandidateKind::kMilestone);
    table.placebo_mean = group_mean(table.rows, CandidateKind::kPlacebo);
    return table;
}

}  // namespace cnhp
