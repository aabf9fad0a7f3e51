#include <doctest.h>

#include <cmath>
#include <set>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/featurize.hpp"

using namespace opinion_audit;

namespace {

double value_at(const FeatureVector& v, std::size_t index) {
    for (const auto& f : v.entries)
        if (f.index == index) return f.value;
    return 0.0;
}

FeatureSpec demo_spec() {
    FeatureSpec spec;
    spec.n_text_buckets = 1024;
    spec.demographic_vocab = {{"age", {"18-24", "25-34", "35-44", "45-54", "55+"}}, {"gender", {"f", "m"}}};
    spec.include_demographics = true;
    return spec;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
    CHECK(tokenize("What shit u talk") == std::vector<std::string>{"what", "shit", "u", "talk"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("re-frame!!") == std::vector<std::string>{"re", "frame"});
    CHECK(tokenize("  Tab\tand\nNEWLINE  ") == std::vector<std::string>{"tab", "and", "newline"});
    CHECK(tokenize("Ça_va? ÉCOLE") == std::vector<std::string>{"ça", "va", "école"});
    CHECK(tokenize("a1b2 3") == std::vector<std::string>{"a1b2", "3"});
    CHECK(tokenize("quote\xe2\x80\x9cinside\xe2\x80\x9d") == std::vector<std::string>{"quote", "inside"});
}

TEST_CASE("featurize_sample is L2-normalized bag of words") {
    FeatureSpec spec;
    const auto single = featurize_sample("hello", spec);
    REQUIRE(single.entries.size() == 1);
    CHECK(single.entries[0].value == 1.0);
    CHECK(single.entries[0].index == token_bucket("hello", spec));
    CHECK(featurize_sample("", spec).entries.empty());

    REQUIRE(token_bucket("a", spec) != token_bucket("b", spec));
    const auto aba = featurize_sample("a b a", spec);
    CHECK(value_at(aba, token_bucket("a", spec)) == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-15));
    CHECK(value_at(aba, token_bucket("b", spec)) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-15));
    CHECK(aba.width == spec.width());
}

TEST_CASE("feature vectors are deterministic and sorted") {
    FeatureSpec spec;
    const auto a = featurize_sample("the quick brown fox jumps over the lazy dog", spec);
    const auto b = featurize_sample("the quick brown fox jumps over the lazy dog", spec);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].index == b.entries[i].index);
        CHECK(a.entries[i].value == b.entries[i].value);
        if (i) CHECK(a.entries[i - 1].index < a.entries[i].index);
    }
}

TEST_CASE("bucket hash is pinned") {
    // Portable hash: these values must never change across platforms or releases.
    FeatureSpec spec;
    const auto h = token_bucket("toxic", spec);
    CHECK(h < spec.n_text_buckets);
    CHECK(token_bucket("toxic", spec) == h);
    FeatureSpec other = spec;
    other.hash_seed ^= 1;
    std::size_t moved = 0;
    for (const char* t : {"toxic", "nice", "hello", "world", "x", "y", "z", "w"})
        moved += token_bucket(t, spec) != token_bucket(t, other);
    CHECK(moved >= 6);
}

TEST_CASE("width and demographic one-hot blocks") {
    const auto spec = demo_spec();
    CHECK(spec.width() == 1024 + 6 + 3);
    const auto v = featurize_pair("hi", Demographics{{"age", "35-44"}, {"gender", "m"}}, spec);
    CHECK(value_at(v, 1024 + 2) == 1.0);
    CHECK(value_at(v, 1024 + 6 + 1) == 1.0);
    std::size_t demo = 0;
    for (const auto& f : v.entries) demo += f.index >= 1024;
    CHECK(demo == 2);

    const auto none = featurize_pair("hi", std::nullopt, spec);
    CHECK(value_at(none, 1024 + 5) == 1.0);
    CHECK(value_at(none, 1024 + 6 + 2) == 1.0);

    const auto partial = featurize_pair("hi", Demographics{{"gender", "f"}}, spec);
    CHECK(value_at(partial, 1024 + 5) == 1.0);
    CHECK(value_at(partial, 1024 + 6) == 1.0);
}

TEST_CASE("without demographics featurize_pair equals featurize_sample") {
    auto spec = demo_spec();
    spec.include_demographics = false;
    CHECK(spec.width() == 1024);
    const auto a = featurize_pair("some text here", Demographics{{"gender", "f"}}, spec);
    const auto b = featurize_sample("some text here", spec);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].index == b.entries[i].index);
        CHECK(a.entries[i].value == b.entries[i].value);
    }
}

TEST_CASE("spec validation and hash") {
    FeatureSpec spec;
    spec.n_text_buckets = 1000;
    CHECK_THROWS_AS(spec.validate(), UsageError);
    spec.n_text_buckets = 1024;
    spec.validate();
    FeatureSpec other = spec;
    CHECK(spec.hash() == other.hash());
    other.include_demographics = true;
    other.demographic_vocab = {{"g", {"f"}}};
    CHECK(spec.hash() != other.hash());
}

TEST_CASE("collision rate at 2^18 buckets stays under 1% on a synthetic vocabulary") {
    std::vector<std::string> vocab;
    for (int i = 0; i < 2000; ++i) vocab.push_back("w" + std::to_string(i));
    for (int l = 0; l < 4; ++l)
        for (int s = 0; s < 8; ++s) vocab.push_back("c" + std::to_string(l) + "s" + std::to_string(s));
    FeatureSpec spec;
    const double rate = collision_rate(vocab, spec);
    MESSAGE("collision rate " << rate);
    CHECK(rate < 0.01);
}
