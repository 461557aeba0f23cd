#include "core/month.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace cnhp {

YearMonth parse_year_month(const std::string& label) {
    const auto fail = [&] {
        throw std::invalid_argument("malformed month label '" + label + "' (expected YYYY-MM)");
    };
    if (label.size() != 7 || label[4] != '-') fail();
    for (int i : {0, 1, 2, 3, 5, 6}) {
        if (!std::isdigit(static_cast<unsigned char>(label[i]))) fail();
    }
    YearMonth ym;
    ym.year = std::stoi(label.substr(0, 4));
    ym.month = std::stoi(label.substr(5, 2));
    if (ym.month < 1 || ym.month > 12) fail();
    return ym;
}

std::string format_year_month(const YearMonth& ym) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", ym.year, ym.month);
    return buf;
}

int months_between(const YearMonth& a, const YearMonth& b) {
    return (b.year - a.year) * 12 + (b.month - a.month);
}

YearMonth add_months(const YearMonth& ym, int delta) {
    int zero_based = ym.year * 12 + (ym.month - 1) + delta;
    YearMonth out;
    out.year = zero_based / 12;
    out.month = zero_based % 12 + 1;
    if (out.month < 1) {  // C++ integer division truncates toward zero
        out.month += 12;
        out.year -= 1;
    }
    return out;
}

std::string Calendar::label(MonthIndex m) const {
    if (!contains(m)) {
        throw std::out_of_range("month index " + std::to_string(m) + " outside panel range");
    }
    return format_year_month(add_months(origin, m));
}

MonthIndex Calendar::index_of(const std::string& lab) const {
    const MonthIndex m = months_between(origin, parse_year_month(lab));
    if (!contains(m)) {
        throw std::out_of_range("month label '" + lab + "' outside panel range");
    }
    return m;
}

}  // namespace cnhp
