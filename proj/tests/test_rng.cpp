#include <cmath>
#include <set>
#include <vector>

#include "core/rng.hpp"
#include "doctest.h"

using namespace cnhp;

TEST_CASE("fnv1a64 matches published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("label seeds are deterministic and label-sensitive") {
    CHECK(label_seed("x", 20260408) == (20260408ULL ^ fnv1a64("x")));
    CHECK(label_seed("coupled:count_pll", 20260408) ==
          label_seed("coupled:count_pll", 20260408));
    CHECK(label_seed("a", 20260408) != label_seed("b", 20260408));
}

TEST_CASE("rng streams are reproducible") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(42);
    Rng d(43);
    int differs = 0;
    for (int i = 0; i < 10; ++i) differs += c.next_u64() != d.next_u64();
    CHECK(differs == 10);
}

TEST_CASE("uniform01 stays in [0,1) and uniform_open01 in (0,1)") {
    Rng rng(7);
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform_open01();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("uniform01 mean and variance are close to 1/2 and 1/12") {
    Rng rng(11);
    const int n = 200000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        sum += u;
        sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal draws have unit moments") {
    Rng rng(13);
    const int n = 200000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("exponential draws match the requested rate") {
    Rng rng(17);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.exponential(2.5);
        CHECK(x >= 0.0);
        sum += x;
    }
    CHECK(sum / n == doctest::Approx(1.0 / 2.5).epsilon(0.02));
}

TEST_CASE("below produces the full range without bias") {
    Rng rng(19);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) hits[rng.below(7)] += 1;
    for (int k = 0; k < 7; ++k) CHECK(hits[k] == doctest::Approx(10000).epsilon(0.07));
}

TEST_CASE("substream seeds are order-independent and distinct") {
    const std::uint64_t seed = label_seed("stream", 20260408);
    std::vector<std::uint64_t> forward;
    forward.reserve(100);
    for (std::uint64_t i = 0; i < 100; ++i) forward.push_back(substream_seed(seed, i));

    for (std::uint64_t i = 100; i-- > 0;) CHECK(substream_seed(seed, i) == forward[i]);

    std::set<std::uint64_t> unique(forward.begin(), forward.end());
    CHECK(unique.size() == forward.size());
}
