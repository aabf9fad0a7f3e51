#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "opinion_audit/dataset.hpp"
#include "opinion_audit/synthgen.hpp"

namespace fixtures {

using Row = std::tuple<std::string, std::string, std::string>;  // sample, annotator, label

/// Dataset from (sample, annotator, label) rows; sample text is "text of <id>".
inline opinion_audit::AnnotatedDataset table(const std::vector<std::string>& labels, const std::vector<Row>& rows) {
    opinion_audit::AnnotatedDataset::Builder b(labels);
    for (const auto& [s, a, l] : rows) {
        if (!b.has_sample(s)) b.add_sample(s, "text of " + s);
        if (!b.has_annotator(a)) b.add_annotator(a);
        b.add_annotation(s, a, l);
    }
    return std::move(b).build();
}

/// Two opinion clusters on a binary task with an age attribute correlated with the minority.
inline opinion_audit::SynthConfig two_cluster_config(std::uint64_t seed, std::size_t n_samples = 200,
                                                     std::size_t n_annotators = 20) {
    opinion_audit::SynthConfig c;
    c.n_samples = n_samples;
    c.n_annotators = n_annotators;
    c.annotators_per_sample = 10;
    c.labels = {"T", "NT"};
    c.demographic_vocab = {{"age", {"young", "adult", "senior"}}};
    c.fraction_ambiguous = 0.5;
    c.clusters = {
        {0.7, "NT", 0.02, {{"age", {{"young", 0.1}, {"adult", 0.45}, {"senior", 0.45}}}}},
        {0.3, "T", 0.02, {{"age", {{"young", 0.6}, {"adult", 0.2}, {"senior", 0.2}}}}},
    };
    c.seed = seed;
    return c;
}

}  // namespace fixtures
