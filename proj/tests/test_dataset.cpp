#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "opinion_audit/dataset.hpp"
#include "opinion_audit/errors.hpp"
#include "oracles.hpp"

using namespace opinion_audit;
using fixtures::Row;

namespace {

/// One sample with `t` T labels and `nt` NT labels.
AnnotatedDataset histogram_sample(std::size_t t, std::size_t nt) {
    std::vector<Row> rows;
    for (std::size_t i = 0; i < t + nt; ++i) rows.emplace_back("s", "a" + std::to_string(i), i < t ? "T" : "NT");
    return fixtures::table({"T", "NT"}, rows);
}

/// Same annotations inserted in a shuffled order.
AnnotatedDataset shuffled_copy(const AnnotatedDataset& d, std::uint64_t seed) {
    std::vector<std::size_t> order(d.annotations().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    AnnotatedDataset::Builder b(d.label_set(), d.demographic_vocab());
    for (const auto& s : d.samples()) b.add_sample(s.id, s.text);
    for (const auto& a : d.annotators()) b.add_annotator(a.id, a.demographics);
    for (std::size_t i : order) {
        const auto& a = d.annotations()[i];
        b.add_annotation(a.sample, a.annotator, a.label);
    }
    return std::move(b).build();
}

/// Every sample appears twice (the copy suffixed "#2") with identical annotations.
AnnotatedDataset duplicated(const AnnotatedDataset& d) {
    AnnotatedDataset::Builder b(d.label_set(), d.demographic_vocab());
    for (const auto& s : d.samples()) b.add_sample(s.id, s.text);
    for (const auto& s : d.samples()) b.add_sample(s.id + "#2", s.text);
    for (const auto& a : d.annotators()) b.add_annotator(a.id, a.demographics);
    const std::size_t n = d.samples().size();
    for (const auto& a : d.annotations()) {
        b.add_annotation(a.sample, a.annotator, a.label);
        b.add_annotation(a.sample + n, a.annotator, a.label);
    }
    return std::move(b).build();
}

}  // namespace

TEST_CASE("majority vote on the 20/80, 50/50 and unanimous samples") {
    const auto skewed = majority_vote(histogram_sample(2, 8));
    CHECK(skewed[0].majority_label == 1);
    CHECK_FALSE(skewed[0].is_tie);
    CHECK(skewed[0].ambiguity == doctest::Approx(0.4).epsilon(1e-15));

    const auto split = majority_vote(histogram_sample(5, 5));
    CHECK(split[0].is_tie);
    CHECK(split[0].majority_label == 0);
    CHECK(split[0].ambiguity == 1.0);

    const auto unanimous = majority_vote(histogram_sample(0, 10));
    CHECK(unanimous[0].majority_label == 1);
    CHECK(unanimous[0].ambiguity == 0.0);
}

TEST_CASE("popularity on the 20/80 sample") {
    const auto d = histogram_sample(2, 8);
    const auto mv = majority_vote(d);
    for (const auto& a : d.annotations()) CHECK(popularity(a, mv[0]) == (a.label == 1 ? 0.8 : 0.2));
    const auto u = histogram_sample(3, 0);
    CHECK(popularity(u.annotations()[0], majority_vote(u)[0]) == 1.0);
    Annotation foreign{1, 0, 0};
    CHECK_THROWS(popularity(foreign, mv[0]));
}

TEST_CASE("ADR examples") {
    std::vector<Row> rows;
    // a0 disagrees with the two-vote majority on 3 of 10 samples.
    for (int s = 0; s < 10; ++s) {
        const std::string sid = "s" + std::to_string(s);
        rows.emplace_back(sid, "b1", "NT");
        rows.emplace_back(sid, "b2", "NT");
        rows.emplace_back(sid, "a0", s < 3 ? "T" : "NT");
    }
    rows.emplace_back("solo", "lonely", "T");
    const auto d = fixtures::table({"T", "NT"}, rows);
    const auto profiles = compute_adr(d, majority_vote(d));
    auto find = [&](const std::string& id) {
        return *std::find_if(profiles.begin(), profiles.end(), [&](const auto& p) { return p.annotator_id == id; });
    };
    CHECK(find("a0").adr == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(find("a0").n_disagreements == 3);
    CHECK(find("b1").adr == 0.0);
    CHECK(find("lonely").adr == 0.0);
}

TEST_CASE("ADR at ties follows the label-order tie break") {
    const auto d = histogram_sample(1, 1);
    const auto profiles = compute_adr(d, majority_vote(d));
    CHECK(profiles[0].adr == 0.0);  // chose T, the tie-broken majority
    CHECK(profiles[1].adr == 1.0);
}

TEST_CASE("binary ambiguity is twice the non-majority share for every histogram up to 10") {
    for (std::size_t n = 1; n <= 10; ++n)
        for (std::size_t t = 0; t <= n; ++t) {
            const auto d = histogram_sample(t, n - t);
            const auto st = majority_vote(d)[0];
            std::size_t off = 0;
            for (const auto& a : d.annotations()) off += a.label != st.majority_label;
            CHECK(st.ambiguity == doctest::Approx(2.0 * static_cast<double>(off) / static_cast<double>(n)).epsilon(1e-14));
            CHECK((st.ambiguity == 0.0) == (t == 0 || t == n));
        }
}

TEST_CASE("statistics match brute force on random datasets") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto d = oracle::random_dataset(seed, 15, 7, 2 + seed % 3);
        const auto mv = majority_vote(d);
        for (std::size_t s = 0; s < d.samples().size(); ++s) {
            const auto h = oracle::histogram(d, s);
            CHECK(mv[s].histogram == h);
            CHECK(mv[s].majority_label == oracle::majority(h));
            CHECK(mv[s].is_tie == oracle::tie(h));
            CHECK(std::abs(mv[s].ambiguity - oracle::ambiguity(h)) <= 1e-12);
        }
        for (const auto& a : d.annotations())
            CHECK(popularity(a, mv[a.sample]) == oracle::popularity(oracle::histogram(d, a.sample), a.label));
        std::size_t non_majority = 0;
        for (const auto& a : d.annotations()) non_majority += a.label != mv[a.sample].majority_label;
        std::size_t weighted = 0;
        for (const auto& p : compute_adr(d, mv)) {
            const auto o = oracle::adr(d, p.annotator);
            CHECK(p.n_annotations == o.n);
            CHECK(p.n_disagreements == o.disagreements);
            CHECK(p.adr == o.adr);
            weighted += p.n_disagreements;
            CHECK(std::abs(p.adr * static_cast<double>(p.n_annotations) - static_cast<double>(p.n_disagreements)) < 1e-9);
        }
        CHECK(weighted == non_majority);
    }
}

TEST_CASE("statistics are invariant to annotation order") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto d = oracle::random_dataset(seed, 20, 8, 3);
        const auto p = shuffled_copy(d, seed + 100);
        const auto a = majority_vote(d);
        const auto b = majority_vote(p);
        for (std::size_t s = 0; s < a.size(); ++s) {
            CHECK(a[s].histogram == b[s].histogram);
            CHECK(a[s].majority_label == b[s].majority_label);
            CHECK(a[s].ambiguity == b[s].ambiguity);
        }
        const auto pa = compute_adr(d, a);
        const auto pb = compute_adr(p, b);
        REQUIRE(pa.size() == pb.size());
        for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].adr == pb[i].adr);
        CHECK(fingerprint(d) == fingerprint(p));
    }
}

TEST_CASE("duplicating every annotation leaves the statistics unchanged") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto d = oracle::random_dataset(seed, 20, 8, 2);
        const auto dd = duplicated(d);
        const auto a = majority_vote(d);
        const auto b = majority_vote(dd);
        const std::size_t n = d.samples().size();
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t copy : {s, s + n}) {
                CHECK(b[copy].majority_label == a[s].majority_label);
                CHECK(b[copy].ambiguity == a[s].ambiguity);
            }
        for (std::size_t i = 0; i < d.annotations().size(); ++i) {
            const auto& ann = d.annotations()[i];
            CHECK(popularity(ann, a[ann.sample]) == popularity(ann, b[ann.sample]));
        }
        const auto pa = compute_adr(d, a);
        const auto pb = compute_adr(dd, b);
        for (std::size_t i = 0; i < pa.size(); ++i) {
            CHECK(pb[i].adr == pa[i].adr);
            CHECK(pb[i].n_annotations == 2 * pa[i].n_annotations);
        }
    }
}

TEST_CASE("builder enforces dataset invariants") {
    AnnotatedDataset::Builder b({"T", "NT"}, {{"gender", {"f", "m"}}});
    b.add_sample("s1", "x");
    b.add_sample("s2", "y");
    b.add_annotator("a1", Demographics{{"gender", "f"}});
    CHECK_THROWS_AS(b.add_annotator("a2", Demographics{{"gender", "x"}}), SchemaError);
    CHECK_THROWS_AS(b.add_annotator("a3", Demographics{{"shoe", "42"}}), SchemaError);
    CHECK_THROWS_AS(b.add_sample("s1", "again"), SchemaError);
    CHECK_THROWS_AS(b.add_annotation("s1", "a1", "X"), SchemaError);
    CHECK_THROWS_AS(b.add_annotation("nope", "a1", "T"), SchemaError);
    b.add_annotation("s1", "a1", "T");
    CHECK_THROWS_AS(std::move(b).build(), SchemaError);  // s2 has no annotations
    CHECK_THROWS_AS(AnnotatedDataset::Builder({}), SchemaError);
}

TEST_CASE("subset keeps annotator indices stable") {
    const auto d = oracle::random_dataset(5, 20, 8, 2);
    REQUIRE(d.samples().size() >= 2);
    const std::vector<std::size_t> keep{d.samples().size() - 1, 0};
    const auto sub = d.subset_samples(keep);
    CHECK(sub.samples().size() == 2);
    CHECK(sub.samples()[0].id == d.samples().back().id);
    CHECK(sub.annotators().size() == d.annotators().size());
    for (const auto& a : sub.annotations()) {
        const auto& orig_sample = sub.samples()[a.sample].id;
        const auto s = *d.find_sample(orig_sample);
        const auto h = oracle::histogram(d, s);
        CHECK(h[a.label] > 0);
        CHECK(sub.annotators()[a.annotator].id == d.annotators()[a.annotator].id);
    }
}

TEST_CASE("tie summary counts annotations on tied samples") {
    const auto d = fixtures::table({"T", "NT"}, {{"s1", "a", "T"}, {"s1", "b", "NT"}, {"s2", "a", "T"}, {"s2", "b", "T"}});
    const auto t = summarize_ties(majority_vote(d));
    CHECK(t.tie_samples == 1);
    CHECK(t.tie_annotations == 2);
    CHECK(t.annotation_fraction == 0.5);
}

TEST_CASE("fingerprint changes with content") {
    const auto a = fixtures::table({"T", "NT"}, {{"s1", "a", "T"}});
    const auto b = fixtures::table({"T", "NT"}, {{"s1", "a", "NT"}});
    CHECK(fingerprint(a) != fingerprint(b));
    CHECK(fingerprint(a).rfind("fnv1a64:", 0) == 0);
}
