#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "core/panel.hpp"
#include "doctest.h"

using namespace cnhp;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents)
        : path("/tmp/cnhp_test_" + name) {
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::string two_month_counts_csv() {
    std::string csv = "month,component,count\n";
    for (const char* month : {"2014-01", "2014-02"}) {
        for (const std::string& comp : component_registry()) {
            csv += std::string(month) + "," + comp + ",0\n";
        }
    }
    return csv;
}

}  // namespace

TEST_CASE("component registry is the canonical eight") {
    const auto& reg = component_registry();
    REQUIRE(reg.size() == 8);
    CHECK(reg[0] == "machine learning");
    CHECK(reg[2] == "natural language processing");
    CHECK(reg[7] == "hardware");
}

TEST_CASE("load_counts parses a zero panel") {
    TempFile f("zero_counts.csv", two_month_counts_csv());
    const CountPanel panel = load_counts(f.path);
    CHECK(panel.months() == 2);
    CHECK(panel.dim() == 8);
    CHECK(panel.counts.isZero());
    CHECK(panel.calendar.label(0) == "2014-01");
    panel.validate();
}

TEST_CASE("load_counts rejects malformed input") {
    SUBCASE("missing cell") {
        std::string csv = two_month_counts_csv();
        const auto pos = csv.find("2014-02,speech,0\n");
        REQUIRE(pos != std::string::npos);
        csv.erase(pos, std::string("2014-02,speech,0\n").size());
        TempFile f("missing_cell.csv", csv);
        CHECK_THROWS_WITH_AS(load_counts(f.path), doctest::Contains("missing cell"),
                             std::runtime_error);
    }
    SUBCASE("duplicate cell") {
        TempFile f("dup_cell.csv", two_month_counts_csv() + "2014-01,speech,3\n");
        CHECK_THROWS_WITH_AS(load_counts(f.path), doctest::Contains("duplicate"),
                             std::runtime_error);
    }
    SUBCASE("unknown component") {
        TempFile f("bad_comp.csv", two_month_counts_csv() + "2014-01,robotics,3\n");
        CHECK_THROWS_WITH_AS(load_counts(f.path), doctest::Contains("unknown component"),
                             std::runtime_error);
    }
    SUBCASE("gap in months") {
        std::string csv = "month,component,count\n";
        for (const char* month : {"2014-01", "2014-03"}) {
            for (const std::string& comp : component_registry()) {
                csv += std::string(month) + "," + comp + ",1\n";
            }
        }
        TempFile f("gap.csv", csv);
        CHECK_THROWS_AS(load_counts(f.path), std::runtime_error);
    }
    SUBCASE("negative count") {
        std::string csv = two_month_counts_csv();
        csv.replace(csv.find("2014-01,machine learning,0"),
                    std::string("2014-01,machine learning,0").size(),
                    "2014-01,machine learning,-4");
        TempFile f("neg.csv", csv);
        CHECK_THROWS_AS(load_counts(f.path), std::runtime_error);
    }
    SUBCASE("bad header") {
        TempFile f("hdr.csv", "month,name,count\n");
        CHECK_THROWS_AS(load_counts(f.path), std::runtime_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_counts("/tmp/cnhp_does_not_exist.csv"), std::runtime_error);
    }
}

TEST_CASE("counts round-trip through CSV") {
    CountPanel panel;
    panel.calendar = Calendar{YearMonth{2015, 7}, 5};
    panel.components = component_registry();
    panel.counts.resize(5, 8);
    for (int m = 0; m < 5; ++m) {
        for (int d = 0; d < 8; ++d) panel.counts(m, d) = m * 13 + d * 3 + 1;
    }
    panel.validate();

    save_counts(panel, "/tmp/cnhp_test_roundtrip.csv");
    const CountPanel back = load_counts("/tmp/cnhp_test_roundtrip.csv");
    std::remove("/tmp/cnhp_test_roundtrip.csv");

    CHECK(back.calendar.origin == panel.calendar.origin);
    CHECK(back.months() == panel.months());
    CHECK(back.counts == panel.counts);
}

TEST_CASE("month totals match a hand summation") {
    CountPanel panel;
    panel.calendar = Calendar{YearMonth{2014, 1}, 3};
    panel.components = component_registry();
    panel.counts.resize(3, 8);
    double v = 0.0;
    for (int m = 0; m < 3; ++m) {
        for (int d = 0; d < 8; ++d) panel.counts(m, d) = v += 1.0;
    }
    const Eigen::VectorXd totals = panel.month_totals();
    for (int m = 0; m < 3; ++m) {
        double expect = 0.0;
        for (int d = 0; d < 8; ++d) expect += panel.counts(m, d);
        CHECK(totals[m] == expect);
    }
}

TEST_CASE("slice re-anchors the calendar") {
    CountPanel panel;
    panel.calendar = Calendar{YearMonth{2014, 1}, 12};
    panel.components = component_registry();
    panel.counts = Eigen::MatrixXd::Constant(12, 8, 2.0);
    panel.counts(6, 0) = 99.0;

    const CountPanel sliced = panel.slice(6, 3);
    CHECK(sliced.months() == 3);
    CHECK(sliced.calendar.origin == YearMonth{2014, 7});
    CHECK(sliced.counts(0, 0) == 99.0);
    CHECK_THROWS_AS(static_cast<void>(panel.slice(10, 5)), std::out_of_range);
}

TEST_CASE("trends ingestion and validation") {
    TempFile f("trends.csv",
               "month,artificial intelligence,chatbot\n"
               "2014-01,10.5,3\n"
               "2014-02,11,4.25\n");
    const TrendsPanel trends = load_trends(f.path);
    CHECK(trends.months() == 2);
    CHECK(trends.term_count() == 2);
    CHECK(trends.terms[0] == "artificial intelligence");
    CHECK(trends.values(1, 1) == 4.25);
    trends.validate();

    save_trends(trends, "/tmp/cnhp_test_trends_rt.csv");
    const TrendsPanel back = load_trends("/tmp/cnhp_test_trends_rt.csv");
    std::remove("/tmp/cnhp_test_trends_rt.csv");
    CHECK(back.values == trends.values);
    CHECK(back.terms == trends.terms);

    TempFile gap("trends_gap.csv",
                 "month,artificial intelligence,chatbot\n"
                 "2014-01,10.5,3\n"
                 "2014-03,11,4\n");
    CHECK_THROWS_AS(load_trends(gap.path), std::runtime_error);

    TempFile range("trends_range.csv",
                   "month,artificial intelligence,chatbot\n"
                   "2014-01,10.5,101\n");
    CHECK_THROWS_AS(load_trends(range.path), std::invalid_argument);
}

TEST_CASE("split config validation") {
    SplitConfig split{95, 107, 119};
    split.validate(120);
    CHECK_THROWS_AS((SplitConfig{95, 95, 119}.validate(120)), std::invalid_argument);
    CHECK_THROWS_AS((SplitConfig{95, 107, 120}.validate(120)), std::invalid_argument);
    CHECK_THROWS_AS((SplitConfig{-1, 5, 10}.validate(120)), std::invalid_argument);
}
