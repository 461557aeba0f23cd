// Generates the bundled demonstration panel: two count thresholds plus an
// attention-trends panel with a planted counts-to-attention link and a late
// break month. Output is deterministic; the committed files under data/toy
// were produced by running this tool with no arguments.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/month.hpp"
#include "core/panel.hpp"
#include "core/rng.hpp"

namespace {

using namespace cnhp;

constexpr int kMonths = 120;
constexpr int kBreakMonth = 106;  // 2022-11
constexpr std::uint64_t kSeed = 41202601ull;

int poisson(Rng& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda > 30.0) {
        const double draw = lambda + std::sqrt(lambda) * rng.normal();
        return std::max(0, static_cast<int>(std::lround(draw)));
    }
    const double target = rng.uniform01();
    double p = std::exp(-lambda);
    double cum = p;
    int k = 0;
    while (cum < target && k < 400) {
        ++k;
        p *= lambda / k;
        cum += p;
    }
    return k;
}

struct ComponentShape {
    double base;
    double phase;
    double drift;     // gentle growth over the whole decade
    double ai_boost;  // extra growth in the last three years
    double break_mult;
};

const std::vector<ComponentShape> kShapes{
    {7.0, 0.3, 0.35, 0.55, 1.55},  // machine learning
    {3.0, 2.1, 0.05, 0.00, 1.00},  // evolutionary computing
    {8.0, 1.2, 0.30, 0.65, 1.60},  // natural language processing
    {4.0, 4.0, 0.15, 0.25, 1.35},  // speech
    {7.0, 0.8, 0.30, 0.40, 1.10},  // vision
    {4.0, 5.2, 0.20, 0.15, 1.05},  // planning and control
    {3.0, 3.3, 0.10, 0.05, 1.00},  // knowledge representation
    {4.0, 1.9, 0.25, 0.20, 1.15},  // hardware
};

double rate(int m, int j, double prev_count) {
    const ComponentShape& s = kShapes[static_cast<std::size_t>(j)];
    double lambda = s.base * (1.0 + 0.15 * std::sin(2.0 * M_PI * m / 12.0 + s.phase));
    lambda *= std::exp(s.drift * m / 120.0);
    if (m >= 84) lambda *= 1.0 + s.ai_boost * (m - 84) / 36.0;
    if (m >= kBreakMonth) lambda *= s.break_mult;
    return 0.75 * lambda + 0.25 * prev_count;
}

Eigen::MatrixXd simulate_counts(double scale, std::uint64_t stream) {
    const int d = static_cast<int>(kShapes.size());
    Eigen::MatrixXd counts(kMonths, d);
    std::vector<double> prev(static_cast<std::size_t>(d), 0.0);
    for (std::size_t j = 0; j < prev.size(); ++j) prev[j] = kShapes[j].base;
    for (int m = 0; m < kMonths; ++m) {
        for (int j = 0; j < d; ++j) {
            Rng rng(substream_seed(kSeed + stream, static_cast<std::uint64_t>(m) * 64 + j));
            const double lambda = scale * rate(m, j, prev[static_cast<std::size_t>(j)] / scale);
            counts(m, j) = poisson(rng, lambda);
            prev[static_cast<std::size_t>(j)] = counts(m, j);
        }
    }
    return counts;
}

void write_counts(const std::string& path, const Eigen::MatrixXd& counts) {
    std::ofstream out(path, std::ios::binary);
    out << "month,component,count\n";
    const auto& names = component_registry();
    for (int m = 0; m < counts.rows(); ++m) {
        const std::string label = format_year_month(add_months(YearMonth{2014, 1}, m));
        for (int j = 0; j < counts.cols(); ++j) {
            out << label << ',' << names[static_cast<std::size_t>(j)] << ','
                << static_cast<long long>(counts(m, j)) << '\n';
        }
    }
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", std::clamp(v, 0.0, 100.0));
    return buf;
}

void write_trends(const std::string& path, const Eigen::MatrixXd& counts) {
    // z-scored lagged log1p totals carry the planted counts-to-attention link
    Eigen::VectorXd totals = counts.rowwise().sum();
    Eigen::VectorXd lagged(kMonths);
    for (int m = 0; m < kMonths; ++m) {
        lagged[m] = std::log1p(totals[std::max(0, m - 1)]);
    }
    const double mean = lagged.mean();
    const double sd = std::sqrt((lagged.array() - mean).square().sum() / (kMonths - 1));
    Eigen::VectorXd z = (lagged.array() - mean) / (sd > 0 ? sd : 1.0);

    struct Term {
        std::string name;
        double coupling;  // weight on the lagged count signal
        double level;
        double season;
        double phase;
        double drift;
    };
    const std::vector<Term> terms{
        {"artificial intelligence", 9.0, 52.0, 2.0, 0.4, 6.0},
        {"machine learning", 8.0, 48.0, 2.5, 1.1, 8.0},
        {"deep learning", 7.0, 40.0, 1.5, 2.0, 10.0},
        {"neural networks", 6.0, 45.0, 2.0, 0.9, 5.0},
        {"natural language processing", 6.5, 35.0, 1.5, 1.7, 7.0},
        {"computer vision", 5.5, 38.0, 2.0, 2.6, 6.0},
        {"speech recognition", 4.5, 36.0, 2.5, 3.1, 3.0},
        {"data science", 5.0, 50.0, 3.0, 0.2, 4.0},
        {"chatgpt", 0.0, 0.0, 0.0, 0.0, 0.0},
        {"robotics", 2.0, 46.0, 3.0, 1.4, 2.0},
        {"weather", 0.0, 55.0, 14.0, 0.0, 0.0},
        {"recipes", 0.0, 48.0, 10.0, 2.4, 1.0},
        {"football", 0.0, 52.0, 16.0, 4.3, 0.0},
        {"travel", 0.0, 50.0, 12.0, 5.1, 0.5},
        {"music", 0.0, 60.0, 4.0, 2.9, 0.0},
        {"movies", 0.0, 56.0, 6.0, 1.8, -1.0},
        {"fitness", 0.0, 45.0, 9.0, 0.7, 1.5},
        {"gardening", 0.0, 40.0, 13.0, 3.6, 0.5},
        {"chess", 0.0, 35.0, 5.0, 4.8, 1.0},
        {"astronomy", 0.0, 38.0, 4.0, 5.6, 0.0},
    };

    std::ofstream out(path, std::ios::binary);
    out << "month";
    for (const Term& t : terms) out << ',' << t.name;
    out << '\n';
    for (int m = 0; m < kMonths; ++m) {
        out << format_year_month(add_months(YearMonth{2014, 1}, m));
        for (std::size_t t = 0; t < terms.size(); ++t) {
            Rng rng(substream_seed(kSeed + 7, static_cast<std::uint64_t>(m) * 64 + t));
            const Term& term = terms[t];
            double v;
            if (term.name == "chatgpt") {
                v = 0.5 + 0.3 * rng.uniform01();
                if (m >= kBreakMonth) {
                    v = 40.0 + 45.0 * (1.0 - std::exp(-(m - kBreakMonth + 1) / 3.0));
                }
            } else {
                v = term.level + term.drift * m / 120.0 * 10.0 +
                    term.season * std::sin(2.0 * M_PI * m / 12.0 + term.phase) +
                    term.coupling * z[m] + 1.2 * rng.normal();
                if (term.coupling > 0.0 && m >= kBreakMonth) v += 6.0;
            }
            out << ',' << fmt2(v);
        }
        out << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::string out_dir = argc > 1 ? argv[1] : "data/toy";
    std::filesystem::create_directories(out_dir);

    const Eigen::MatrixXd balanced = simulate_counts(1.0, 0);
    const Eigen::MatrixXd low = simulate_counts(2.5, 1);
    write_counts(out_dir + "/counts_balanced.csv", balanced);
    write_counts(out_dir + "/counts_low.csv", low);
    write_trends(out_dir + "/trends.csv", balanced);

    std::printf("wrote %s/{counts_balanced.csv,counts_low.csv,trends.csv}: %d months, "
                "balanced total %.0f events, low total %.0f events\n",
                out_dir.c_str(), kMonths, balanced.sum(), low.sum());
    return 0;
}
