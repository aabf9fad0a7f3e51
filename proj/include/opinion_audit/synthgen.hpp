#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "opinion_audit/dataset.hpp"

namespace opinion_audit {

/// An opinion cluster. On clear samples every member intends the sample's latent label; on
/// ambiguous samples every member intends `ambiguous_label`.
struct SynthCluster {
    double weight = 1.0;
    std::string ambiguous_label;
    double noise_rate = 0.0;
    /// attribute -> (value, share) pairs. Attributes not listed are spread evenly over their values.
    std::map<std::string, std::vector<std::pair<std::string, double>>> demographics;
};

struct SynthConfig {
    std::size_t n_samples = 200;
    std::size_t n_annotators = 20;
    std::size_t annotators_per_sample = 10;
    std::vector<std::string> labels{"T", "NT"};
    std::vector<DemographicAttribute> demographic_vocab;
    std::vector<SynthCluster> clusters;
    std::size_t spammer_count = 0;
    double fraction_ambiguous = 0.61;
    std::size_t cue_tokens = 3;
    std::size_t filler_tokens = 6;
    std::size_t synonyms = 4;
    std::size_t filler_vocabulary = 2000;
    std::uint64_t seed = 0;

    /// Throws UsageError on an infeasible or inconsistent config.
    void validate() const;
};

SynthConfig synth_config_from_json(std::string_view json_text);
std::string synth_config_to_json(const SynthConfig& config);

struct SynthTruth {
    /// Per annotator (dataset order): cluster index, or nullopt for a spammer.
    std::vector<std::optional<std::size_t>> annotator_cluster;
    /// Per sample (dataset order): latent label index for clear samples, nullopt when ambiguous.
    std::vector<std::optional<std::size_t>> sample_latent;
    /// Per annotation (dataset order): the label the annotator meant before noise; nullopt for spammers.
    std::vector<std::optional<std::size_t>> intended;

    std::vector<std::string> spammer_ids(const AnnotatedDataset& dataset) const;
};

struct SynthOutput {
    AnnotatedDataset dataset;
    SynthTruth truth;
};

SynthOutput generate(const SynthConfig& config);

std::string truth_to_json(const SynthTruth& truth, const AnnotatedDataset& dataset);

/// Per group of annotators: cluster0, cluster1, ..., then "spammers" when any are configured.
struct GroupExpectation {
    std::string name;
    double adr = 0.0;
    double quality = 0.0;
    double popularity_ambiguous = 0.0;  // mean popularity of the group's annotations on ambiguous samples
};

struct ExpectedStats {
    std::vector<GroupExpectation> groups;
    double mean_ambiguity = 0.0;
    double p_unanimous = 0.0;
    std::vector<std::pair<double, double>> ambiguity_distribution;  // (value, probability), ascending
};

/// Exact expectations over the label noise for the generator's deterministic sample composition.
ExpectedStats expected_stats(const SynthConfig& config);

}  // namespace opinion_audit
