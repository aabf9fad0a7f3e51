#include <doctest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "opinion_audit/errors.hpp"
#include "opinion_audit/quality.hpp"
#include "opinion_audit/synthgen.hpp"

using namespace opinion_audit;

namespace {

std::string group_name(const std::optional<std::size_t>& cluster) {
    return cluster ? "cluster" + std::to_string(*cluster) : "spammers";
}

/// Annotation-weighted mean ADR per planted group.
std::map<std::string, double> empirical_adr(const SynthOutput& out) {
    const auto& d = out.dataset;
    const auto profiles = compute_adr(d, majority_vote(d));
    std::map<std::string, std::pair<std::size_t, std::size_t>> acc;
    for (const auto& p : profiles) {
        auto& [dis, n] = acc[group_name(out.truth.annotator_cluster[p.annotator])];
        dis += p.n_disagreements;
        n += p.n_annotations;
    }
    std::map<std::string, double> res;
    for (const auto& [k, v] : acc) res[k] = static_cast<double>(v.first) / static_cast<double>(v.second);
    return res;
}

}  // namespace

TEST_CASE("a single noiseless cluster is unanimous") {
    SynthConfig c;
    c.clusters = {{1.0, "T", 0.0, {}}};
    c.seed = 2;
    const auto out = generate(c);
    for (const auto& s : majority_vote(out.dataset)) CHECK(s.ambiguity == 0.0);
    for (const auto& p : compute_adr(out.dataset, majority_vote(out.dataset))) CHECK(p.adr == 0.0);
}

TEST_CASE("an 80/20 split that always disagrees") {
    SynthConfig c;
    c.n_samples = 100;
    c.n_annotators = 20;
    c.fraction_ambiguous = 1.0;
    c.clusters = {{0.8, "NT", 0.0, {}}, {0.2, "T", 0.0, {}}};
    c.seed = 4;
    const auto out = generate(c);
    const auto adr = empirical_adr(out);
    CHECK(adr.at("cluster0") == 0.0);
    CHECK(adr.at("cluster1") == 1.0);
}

TEST_CASE("shape of the generated data") {
    auto c = fixtures::two_cluster_config(3, 300, 30);
    c.spammer_count = 3;
    c.fraction_ambiguous = 0.61;
    const auto out = generate(c);
    const auto& d = out.dataset;
    CHECK(d.samples().size() == 300);
    CHECK(d.annotators().size() == 30);
    CHECK(d.annotations().size() == 3000);
    for (std::size_t s = 0; s < d.samples().size(); ++s) CHECK(d.annotations_of_sample(s).size() == 10);
    std::size_t ambiguous = 0;
    for (const auto& l : out.truth.sample_latent) ambiguous += !l.has_value();
    CHECK(ambiguous == 183);
    CHECK(out.truth.spammer_ids(d).size() == 3);
    CHECK(out.truth.intended.size() == d.annotations().size());
    for (const auto& a : d.annotators()) CHECK(a.demographics.has_value());
}

TEST_CASE("generation is a pure function of the config") {
    const auto c = fixtures::two_cluster_config(11);
    const auto a = generate(c), b = generate(c);
    CHECK(fingerprint(a.dataset) == fingerprint(b.dataset));
    CHECK(truth_to_json(a.truth, a.dataset) == truth_to_json(b.truth, b.dataset));
    auto other = c;
    other.seed = 12;
    CHECK(fingerprint(generate(other).dataset) != fingerprint(a.dataset));
}

TEST_CASE("empirical statistics track the exact expectations") {
    auto c = fixtures::two_cluster_config(21, 2000, 100);
    c.spammer_count = 4;
    c.clusters[0].weight = 0.7;
    const auto out = generate(c);
    const auto expected = expected_stats(c);
    const auto adr = empirical_adr(out);
    const auto quality = annotator_quality(out.dataset);
    std::map<std::string, std::pair<double, std::size_t>> q;
    for (const auto& s : quality) {
        auto& [sum, n] = q[group_name(out.truth.annotator_cluster[s.annotator])];
        sum += s.score;
        ++n;
    }
    for (const auto& g : expected.groups) {
        CHECK(std::abs(adr.at(g.name) - g.adr) <= 0.03);
        CHECK(std::abs(q.at(g.name).first / static_cast<double>(q.at(g.name).second) - g.quality) <= 0.03);
    }
    double amb = 0.0;
    std::size_t unanimous = 0;
    const auto stats = majority_vote(out.dataset);
    for (const auto& s : stats) {
        amb += s.ambiguity;
        unanimous += s.ambiguity == 0.0;
    }
    CHECK(std::abs(amb / static_cast<double>(stats.size()) - expected.mean_ambiguity) <= 0.03);
    CHECK(std::abs(static_cast<double>(unanimous) / static_cast<double>(stats.size()) - expected.p_unanimous) <= 0.03);
    double total = 0.0;
    for (const auto& [v, p] : expected.ambiguity_distribution) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("config JSON round trip") {
    auto c = fixtures::two_cluster_config(5);
    c.spammer_count = 2;
    const auto text = synth_config_to_json(c);
    const auto back = synth_config_from_json(text);
    CHECK(synth_config_to_json(back) == text);
    CHECK(fingerprint(generate(back).dataset) == fingerprint(generate(c).dataset));
    CHECK_THROWS(synth_config_from_json(R"({"n_samples": 10, "mystery": 1})"));
}

TEST_CASE("infeasible configs are rejected") {
    auto weights = fixtures::two_cluster_config(1);
    weights.clusters[0].weight = 0.5;
    CHECK_THROWS_AS(weights.validate(), UsageError);

    auto crowded = fixtures::two_cluster_config(1);
    crowded.annotators_per_sample = 25;
    CHECK_THROWS_AS(crowded.validate(), UsageError);

    auto label = fixtures::two_cluster_config(1);
    label.clusters[0].ambiguous_label = "maybe";
    CHECK_THROWS_AS(label.validate(), UsageError);

    auto fraction = fixtures::two_cluster_config(1);
    fraction.fraction_ambiguous = 1.5;
    CHECK_THROWS_AS(fraction.validate(), UsageError);

    auto noise = fixtures::two_cluster_config(1);
    noise.clusters[1].noise_rate = -0.1;
    CHECK_THROWS_AS(noise.validate(), UsageError);
}
