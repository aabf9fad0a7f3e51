#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "opinion_audit/errors.hpp"
#include "opinion_audit/quality.hpp"
#include "opinion_audit/synthgen.hpp"
#include "oracles.hpp"

using namespace opinion_audit;
using fixtures::Row;

namespace {

const QualityScore& score_of(const std::vector<QualityScore>& scores, const std::string& id) {
    return *std::find_if(scores.begin(), scores.end(), [&](const auto& q) { return q.annotator_id == id; });
}

}  // namespace

TEST_CASE("leave-one-out agreement on single samples") {
    std::vector<Row> rows;
    for (int i = 0; i < 9; ++i) rows.emplace_back("s1", "o" + std::to_string(i), "NT");
    rows.emplace_back("s1", "me", "NT");
    CHECK(score_of(annotator_quality(fixtures::table({"T", "NT"}, rows)), "me").score == 1.0);

    rows.clear();
    for (int i = 0; i < 9; ++i) rows.emplace_back("s1", "o" + std::to_string(i), i < 4 ? "T" : "NT");
    rows.emplace_back("s1", "me", "T");
    const auto q = score_of(annotator_quality(fixtures::table({"T", "NT"}, rows)), "me");
    CHECK(q.score == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
    CHECK(q.n_scored_samples == 1);
}

TEST_CASE("lone annotations are skipped and fully lone annotators omitted") {
    const auto d = fixtures::table({"T", "NT"}, {{"s1", "a", "T"}, {"s1", "b", "T"}, {"s2", "a", "NT"}, {"s3", "c", "T"}});
    const auto scores = annotator_quality(d);
    CHECK(scores.size() == 2);
    CHECK(score_of(scores, "a").n_scored_samples == 1);
    CHECK(score_of(scores, "a").score == 1.0);
}

TEST_CASE("uniform labeler on unanimous samples scores about 1/k") {
    for (std::size_t k : {2u, 3u, 4u}) {
        std::vector<std::string> labels;
        for (std::size_t l = 0; l < k; ++l) labels.push_back("L" + std::to_string(l));
        AnnotatedDataset::Builder b(labels);
        for (const char* id : {"x", "y", "z", "spam"}) b.add_annotator(id);
        Rng rng(k);
        for (std::size_t s = 0; s < 10000; ++s) {
            b.add_sample("s" + std::to_string(s), "t");
            for (std::size_t a = 0; a < 3; ++a) b.add_annotation(s, a, 0);
            b.add_annotation(s, 3, rng.below(k));
        }
        const auto scores = annotator_quality(std::move(b).build());
        CHECK(std::abs(score_of(scores, "spam").score - 1.0 / static_cast<double>(k)) <= 0.02);
    }
}

TEST_CASE("quality matches brute force") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto d = oracle::random_dataset(seed, 20, 8, 2 + seed % 3);
        const auto scores = annotator_quality(d);
        std::size_t expected = 0;
        for (std::size_t a = 0; a < d.annotators().size(); ++a) {
            const auto o = oracle::quality(d, a);
            if (!o.scored) continue;
            ++expected;
            const auto& q = score_of(scores, d.annotators()[a].id);
            CHECK(q.n_scored_samples == o.n_scored);
            CHECK(std::abs(q.score - o.score) <= 1e-12);
        }
        CHECK(scores.size() == expected);
    }
}

TEST_CASE("quality is unchanged when other annotators are cloned") {
    const auto d = oracle::random_dataset(77, 20, 6, 3);
    const auto base = annotator_quality(d);
    for (const auto& target : d.annotators()) {
        AnnotatedDataset::Builder b(d.label_set());
        for (const auto& s : d.samples()) b.add_sample(s.id, s.text);
        for (const auto& a : d.annotators()) b.add_annotator(a.id);
        for (const auto& a : d.annotators())
            if (a.id != target.id) b.add_annotator(a.id + "#clone");
        for (const auto& ann : d.annotations()) {
            const auto& who = d.annotators()[ann.annotator].id;
            b.add_annotation(d.samples()[ann.sample].id, who, d.label_set()[ann.label]);
            if (who != target.id) b.add_annotation(d.samples()[ann.sample].id, who + "#clone", d.label_set()[ann.label]);
        }
        const auto cloned = annotator_quality(std::move(b).build());
        auto before = std::find_if(base.begin(), base.end(), [&](const auto& q) { return q.annotator_id == target.id; });
        auto after = std::find_if(cloned.begin(), cloned.end(), [&](const auto& q) { return q.annotator_id == target.id; });
        if (before == base.end()) {
            CHECK(after == cloned.end());
            continue;
        }
        REQUIRE(after != cloned.end());
        CHECK(after->score == before->score);
    }
}

TEST_CASE("threshold 0 keeps everything, threshold 1 with disagreement fails") {
    const auto d = oracle::random_dataset(3, 20, 8, 2);
    const auto scores = annotator_quality(d);
    const auto kept = filter_annotators(d, scores, 0.0);
    CHECK(kept.removed.empty());
    CHECK(fingerprint(kept.dataset) == fingerprint(d));

    const auto split = fixtures::table({"T", "NT"}, {{"s1", "a", "T"}, {"s1", "b", "NT"}});
    CHECK_THROWS_AS(filter_annotators(split, annotator_quality(split), 1.0), DataError);
    CHECK_THROWS_AS(filter_annotators(split, annotator_quality(split), 1.5), UsageError);
}

TEST_CASE("filtering drops samples left empty and leaves the input untouched") {
    const auto d = fixtures::table({"T", "NT"}, {{"s1", "a", "T"}, {"s1", "b", "T"}, {"s1", "c", "NT"}, {"s2", "c", "NT"},
                                                 {"s2", "a", "T"}, {"s2", "b", "T"}, {"s3", "c", "T"}});
    const auto before = fingerprint(d);
    const auto result = filter_annotators(d, annotator_quality(d), 0.5);
    REQUIRE(result.removed.size() == 1);
    CHECK(result.removed[0].annotator_id == "c");
    CHECK(result.dataset.samples().size() == 2);
    CHECK_FALSE(result.dataset.find_sample("s3"));
    CHECK(fingerprint(d) == before);
}

TEST_CASE("raising the threshold never re-admits an annotator") {
    const auto d = oracle::random_dataset(21, 20, 8, 3);
    const auto scores = annotator_quality(d);
    std::vector<std::string> previous;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        std::vector<std::string> removed;
        try {
            for (const auto& r : filter_annotators(d, scores, t).removed) removed.push_back(r.annotator_id);
        } catch (const DataError&) {
            break;
        }
        for (const auto& id : previous) CHECK(std::find(removed.begin(), removed.end(), id) != removed.end());
        previous = removed;
    }
}

TEST_CASE("planted spammer is removed at 0.4, consistent annotators kept") {
    SynthConfig c;
    c.n_samples = 600;
    c.n_annotators = 15;
    c.labels = {"a", "b", "c", "d"};
    c.clusters = {{1.0, "a", 0.0, {}}};
    c.spammer_count = 1;
    c.seed = 4;
    const auto out = generate(c);
    const auto result = filter_annotators(out.dataset, annotator_quality(out.dataset), 0.4);
    std::vector<std::string> removed;
    for (const auto& r : result.removed) removed.push_back(r.annotator_id);
    CHECK(removed == out.truth.spammer_ids(out.dataset));
}

TEST_CASE("a noiseless minority cluster scores at least its co-annotation rate") {
    auto c = fixtures::two_cluster_config(8, 300, 20);
    for (auto& cl : c.clusters) cl.noise_rate = 0.0;
    c.fraction_ambiguous = 1.0;
    const auto out = generate(c);
    const auto& d = out.dataset;
    const auto scores = annotator_quality(d);
    for (const auto& q : scores) {
        const auto cluster = out.truth.annotator_cluster[q.annotator];
        std::vector<double> rates;
        for (std::size_t idx : d.annotations_of_annotator(q.annotator)) {
            const auto s = d.annotations()[idx].sample;
            std::size_t mates = 0, others = 0;
            for (std::size_t j : d.annotations_of_sample(s)) {
                const auto other = d.annotations()[j].annotator;
                if (other == q.annotator) continue;
                ++others;
                mates += out.truth.annotator_cluster[other] == cluster;
            }
            rates.push_back(static_cast<double>(mates) / static_cast<double>(others));
        }
        CHECK(q.score >= exact_mean(rates) - 1e-12);
        if (cluster == 1u) CHECK(q.score > 0.0);
    }
}
