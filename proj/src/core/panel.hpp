#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "core/month.hpp"

namespace cnhp {

/// The eight technology components, in canonical order. Count CSV ingestion
/// enforces exactly this registry; programmatic panels may use other D.
const std::vector<std::string>& component_registry();

/// Dense per-month, per-component count matrix on a contiguous month grid.
struct CountPanel {
    Calendar calendar;
    std::vector<std::string> components;
    Eigen::MatrixXd counts;  // months x D, non-negative

    [[nodiscard]] int months() const { return static_cast<int>(counts.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(counts.cols()); }
    [[nodiscard]] Eigen::VectorXd month_totals() const { return counts.rowwise().sum(); }

    /// Sub-panel over [first, first+length); origin is re-anchored.
    [[nodiscard]] CountPanel slice(MonthIndex first, int length) const;

    void validate() const;
};

/// Raw search-interest panel: one column per term, values in [0, 100].
struct TrendsPanel {
    Calendar calendar;
    std::vector<std::string> terms;
    Eigen::MatrixXd values;  // months x terms, no gaps

    [[nodiscard]] int months() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int term_count() const { return static_cast<int>(values.cols()); }

    void validate() const;
};

/// Projected response channel(s) on a contiguous month grid. Column 0 is the
/// primary single-channel signal used throughout the model.
struct ResponseSeries {
    Calendar calendar;
    Eigen::MatrixXd values;  // months x channels

    [[nodiscard]] int months() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int channels() const { return static_cast<int>(values.cols()); }
    [[nodiscard]] Eigen::VectorXd primary() const { return values.col(0); }

    [[nodiscard]] ResponseSeries slice(MonthIndex first, int length) const;
};

/// Inclusive boundary months of the train/validation/test split.
struct SplitConfig {
    MonthIndex train_end{0};
    MonthIndex val_end{0};
    MonthIndex test_end{0};

    void validate(int panel_months) const;
};

/// Strict ingestion of `month,component,count` CSVs: every (month, component)
/// cell must be present exactly once and the month grid must be contiguous.
CountPanel load_counts(const std::string& path);

void save_counts(const CountPanel& panel, const std::string& path);

/// Ingestion of `month,<term...>` CSVs; gaps and out-of-range values are errors.
TrendsPanel load_trends(const std::string& path);

void save_trends(const TrendsPanel& panel, const std::string& path);

}  // namespace cnhp
