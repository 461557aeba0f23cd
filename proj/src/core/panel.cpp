#include "core/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cnhp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return in;
}

}  // namespace

const std::vector<std::string>& component_registry() {
    static const std::vector<std::string> names = {
        "machine learning",     "evolutionary computing",
        "natural language processing", "speech",
        "vision",               "planning and control",
        "knowledge representation",    "hardware",
    };
    return names;
}

void CountPanel::validate() const {
    if (counts.rows() != calendar.months) {
        throw std::invalid_argument("count matrix rows do not match calendar length");
    }
    if (counts.cols() != static_cast<int>(components.size())) {
        throw std::invalid_argument("count matrix columns do not match component list");
    }
    if ((counts.array() < 0.0).any()) {
        throw std::invalid_argument("counts must be non-negative");
    }
}

CountPanel CountPanel::slice(MonthIndex first, int length) const {
    if (first < 0 || length < 0 || first + length > months()) {
        throw std::out_of_range("count panel slice out of range");
    }
    CountPanel out;
    out.calendar = Calendar{add_months(calendar.origin, first), length};
    out.components = components;
    out.counts = counts.middleRows(first, length);
    return out;
}

void TrendsPanel::validate() const {
    if (values.rows() != calendar.months) {
        throw std::invalid_argument("trends matrix rows do not match calendar length");
    }
    if (term_count() < 2) throw std::invalid_argument("trends panel needs at least 2 terms");
    if (!values.allFinite()) throw std::invalid_argument("trends panel has missing entries");
    if ((values.array() < 0.0).any() || (values.array() > 100.0).any()) {
        throw std::invalid_argument("trends values must lie in [0, 100]");
    }
}

ResponseSeries ResponseSeries::slice(MonthIndex first, int length) const {
    if (first < 0 || length < 0 || first + length > months()) {
        throw std::out_of_range("response series slice out of range");
    }
    ResponseSeries out;
    out.calendar = Calendar{add_months(calendar.origin, first), length};
    out.values = values.middleRows(first, length);
    return out;
}

void SplitConfig::validate(int panel_months) const {
    if (!(train_end < val_end && val_end < test_end)) {
        throw std::invalid_argument("split requires train_end < val_end < test_end");
    }
    if (train_end < 0 || test_end >= panel_months) {
        throw std::invalid_argument("split boundaries outside panel range");
    }
}

CountPanel load_counts(const std::string& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    if (split_csv_line(line) != std::vector<std::string>{"month", "component", "count"}) {
        throw std::runtime_error(path + ": expected header 'month,component,count'");
    }

    const auto& registry = component_registry();
    std::map<std::string, int> comp_index;
    for (size_t i = 0; i < registry.size(); ++i) comp_index[registry[i]] = static_cast<int>(i);

    // cell map keyed by (zero-based absolute month, component)
    std::map<std::pair<int, int>, double> cells;
    int min_month = 0, max_month = 0;
    bool first_row = true;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        }
        const YearMonth ym = parse_year_month(fields[0]);
        const int abs_month = ym.year * 12 + (ym.month - 1);
        const auto it = comp_index.find(fields[1]);
        if (it == comp_index.end()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unknown component '" + fields[1] + "'");
        }
        double value;
        try {
            size_t pos = 0;
            value = std::stod(fields[2], &pos);
            if (pos != fields[2].size()) throw std::invalid_argument("trailing chars");
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed count '" + fields[2] + "'");
        }
        if (value < 0.0 || !std::isfinite(value)) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": negative count");
        }
        const auto key = std::make_pair(abs_month, it->second);
        if (!cells.emplace(key, value).second) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate cell " +
                                     fields[0] + "/" + fields[1]);
        }
        if (first_row) {
            min_month = max_month = abs_month;
            first_row = false;
        } else {
            min_month = std::min(min_month, abs_month);
            max_month = std::max(max_month, abs_month);
        }
    }
    if (first_row) throw std::runtime_error(path + ": no data rows");

    const int n_months = max_month - min_month + 1;
    const int d = static_cast<int>(registry.size());
    CountPanel panel;
    panel.calendar = Calendar{YearMonth{min_month / 12, min_month % 12 + 1}, n_months};
    panel.components = registry;
    panel.counts.resize(n_months, d);
    for (int m = 0; m < n_months; ++m) {
        for (int c = 0; c < d; ++c) {
            const auto it = cells.find({min_month + m, c});
            if (it == cells.end()) {
                throw std::runtime_error(path + ": missing cell " + panel.calendar.label(m) + "/" +
                                         registry[c]);
            }
            panel.counts(m, c) = it->second;
        }
    }
    panel.validate();
    return panel;
}

void save_counts(const CountPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "month,component,count\n";
    for (int m = 0; m < panel.months(); ++m) {
        const std::string label = panel.calendar.label(m);
        for (int c = 0; c < panel.dim(); ++c) {
            out << label << ',' << panel.components[c] << ','
                << static_cast<long long>(std::llround(panel.counts(m, c))) << '\n';
        }
    }
}

TrendsPanel load_trends(const std::string& path) {
    auto in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "month") {
        throw std::runtime_error(path + ": expected header 'month,<term1>,...,<termN>'");
    }

    TrendsPanel panel;
    panel.terms.assign(header.begin() + 1, header.end());
    const int n_terms = static_cast<int>(panel.terms.size());

    std::vector<std::pair<int, Eigen::RowVectorXd>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != n_terms + 1) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": wrong field count (missing cell?)");
        }
        const YearMonth ym = parse_year_month(fields[0]);
        Eigen::RowVectorXd row(n_terms);
        for (int t = 0; t < n_terms; ++t) {
            if (fields[t + 1].empty()) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing cell");
            }
            row(t) = std::stod(fields[t + 1]);
        }
        rows.emplace_back(ym.year * 12 + (ym.month - 1), row);
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].first == rows[i - 1].first) {
            throw std::runtime_error(path + ": duplicate month row");
        }
        if (rows[i].first != rows[i - 1].first + 1) {
            throw std::runtime_error(path + ": gap in month sequence");
        }
    }

    const int first = rows.front().first;
    panel.calendar = Calendar{YearMonth{first / 12, first % 12 + 1}, static_cast<int>(rows.size())};
    panel.values.resize(static_cast<int>(rows.size()), n_terms);
    for (size_t i = 0; i < rows.size(); ++i) panel.values.row(static_cast<int>(i)) = rows[i].second;
    panel.validate();
    return panel;
}

void save_trends(const TrendsPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "month";
    for (const auto& t : panel.terms) out << ',' << t;
    out << '\n';
    out.precision(10);
    for (int m = 0; m < panel.months(); ++m) {
        out << panel.calendar.label(m);
        for (int t = 0; t < panel.term_count(); ++t) out << ',' << panel.values(m, t);
        out << '\n';
    }
}

}  // namespace cnhp
