#pragma once

#include <string>

namespace cnhp {

/// Month indices are integers relative to a panel origin (the first calendar
/// month present in the data). The continuous event time axis is measured in
/// months, so month m covers [m, m+1).
using MonthIndex = int;

struct YearMonth {
    int year{0};
    int month{1};  // 1..12

    friend bool operator==(const YearMonth&, const YearMonth&) = default;
};

/// Parses a strict "YYYY-MM" label. Throws std::invalid_argument on anything else.
YearMonth parse_year_month(const std::string& label);

std::string format_year_month(const YearMonth& ym);

/// Signed number of months from `a` to `b`.
int months_between(const YearMonth& a, const YearMonth& b);

YearMonth add_months(const YearMonth& ym, int delta);

/// Maps panel-relative month indices to calendar labels and back.
struct Calendar {
    YearMonth origin{};
    int months{0};

    [[nodiscard]] std::string label(MonthIndex m) const;
    [[nodiscard]] MonthIndex index_of(const std::string& label) const;
    [[nodiscard]] bool contains(MonthIndex m) const { return m >= 0 && m < months; }
};

}  // namespace cnhp
