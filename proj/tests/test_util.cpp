#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <stdexcept>

#include "opinion_audit/util.hpp"

using namespace opinion_audit;

TEST_CASE("rng is reproducible and stays in range") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.below(7);
        CHECK(x == b.below(7));
        CHECK(x < 7);
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("rng below is roughly uniform") {
    Rng rng(3);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) ++counts[rng.below(5)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);
}

TEST_CASE("shuffle is a permutation") {
    Rng rng(9);
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    rng.shuffle(w);
    CHECK(w != v);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
}

TEST_CASE("weighted draws never pick zero weights") {
    Rng rng(5);
    const std::vector<double> weights{0.0, 1.0, 0.0, 3.0};
    int ones = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto k = rng.weighted(weights);
        CHECK((k == 1 || k == 3));
        ones += k == 1;
    }
    CHECK(std::abs(ones - 1000) < 120);
}

TEST_CASE("derived seeds differ per stream and are stable") {
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("exact_sum is correctly rounded and order independent") {
    std::vector<double> v{1e100, 1.0, -1e100};
    CHECK(exact_sum(v) == 1.0);
    std::vector<double> tenths(10, 0.1);
    CHECK(exact_sum(tenths) == 1.0);
    Rng rng(11);
    std::vector<double> r;
    for (int i = 0; i < 500; ++i) r.push_back((rng.uniform() - 0.5) * std::pow(10.0, static_cast<int>(rng.below(20)) - 10));
    const double s = exact_sum(r);
    for (int t = 0; t < 5; ++t) {
        rng.shuffle(r);
        CHECK(exact_sum(r) == s);
    }
    CHECK(exact_mean(std::vector<double>{}) == 0.0);
    CHECK(exact_mean(std::vector<double>{0.25, 0.75}) == 0.5);
}

TEST_CASE("exact_mean is unchanged by duplicating every value") {
    Rng rng(12);
    std::vector<double> v;
    for (int i = 0; i < 37; ++i) v.push_back(rng.uniform());
    auto doubled = v;
    doubled.insert(doubled.end(), v.begin(), v.end());
    CHECK(exact_mean(doubled) == exact_mean(v));
}

TEST_CASE("apportion hands out exactly the total") {
    const std::vector<double> w{0.8, 0.2};
    CHECK(apportion(100, w) == std::vector<std::size_t>{80, 20});
    const std::vector<double> thirds{1, 1, 1};
    const auto c = apportion(10, thirds);
    CHECK(std::accumulate(c.begin(), c.end(), std::size_t{0}) == 10);
    CHECK(*std::max_element(c.begin(), c.end()) - *std::min_element(c.begin(), c.end()) <= 1);
    CHECK_THROWS_AS(apportion(3, std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("fixed never prints negative zero") {
    CHECK(fixed(-0.0001, 2) == "0.00");
    CHECK(fixed(0.125, 2) == "0.12");
    CHECK(fixed(-1.5, 1) == "-1.5");
}

TEST_CASE("parallel_for visits every index once and rethrows the lowest failure") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    try {
        parallel_for(50, [](std::size_t i) {
            if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "7");
    }
}
