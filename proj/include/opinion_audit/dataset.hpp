#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace opinion_audit {

struct Sample {
    std::string id;
    std::string text;
};

/// A declared categorical attribute and its ordered vocabulary.
struct DemographicAttribute {
    std::string name;
    std::vector<std::string> values;
    bool operator==(const DemographicAttribute&) const = default;
};

using Demographics = std::map<std::string, std::string>;

struct Annotator {
    std::string id;
    std::optional<Demographics> demographics;
};

/// One label given by one annotator to one sample. Fields index into the owning dataset.
struct Annotation {
    std::size_t sample;
    std::size_t annotator;
    std::size_t label;
};

/// Samples, annotators, and the full unaggregated annotation multiset.
///
/// Immutable once built; every instance satisfies:
///  - label set non-empty, labels unique
///  - sample and annotator ids unique, sample text non-empty
///  - at most one annotation per (sample, annotator), every sample has at least one annotation
///  - demographic values belong to the declared vocabulary of their attribute
/// Annotators may have zero annotations (e.g. in a split); they keep their index.
class AnnotatedDataset {
public:
    class Builder;

    AnnotatedDataset() = default;

    const std::vector<std::string>& label_set() const noexcept { return labels_; }
    const std::vector<DemographicAttribute>& demographic_vocab() const noexcept { return vocab_; }
    const std::vector<Sample>& samples() const noexcept { return samples_; }
    const std::vector<Annotator>& annotators() const noexcept { return annotators_; }
    const std::vector<Annotation>& annotations() const noexcept { return annotations_; }

    std::optional<std::size_t> find_sample(std::string_view id) const;
    std::optional<std::size_t> find_annotator(std::string_view id) const;
    std::optional<std::size_t> find_label(std::string_view label) const;

    /// Indices into annotations() for one sample / one annotator, in insertion order.
    std::span<const std::size_t> annotations_of_sample(std::size_t sample) const;
    std::span<const std::size_t> annotations_of_annotator(std::size_t annotator) const;

    /// Value of `attribute` for an annotator; nullopt when no record or attribute missing.
    std::optional<std::string> demographic_value(std::size_t annotator, std::string_view attribute) const;

    /// Dataset restricted to the given samples. The annotator table and label set are kept whole,
    /// so annotator indices are stable across splits.
    AnnotatedDataset subset_samples(std::span<const std::size_t> sample_indices) const;

private:
    void index();

    std::vector<std::string> labels_;
    std::vector<DemographicAttribute> vocab_;
    std::vector<Sample> samples_;
    std::vector<Annotator> annotators_;
    std::vector<Annotation> annotations_;

    std::unordered_map<std::string, std::size_t> sample_ids_;
    std::unordered_map<std::string, std::size_t> annotator_ids_;
    std::vector<std::size_t> by_sample_;
    std::vector<std::size_t> sample_offsets_;
    std::vector<std::size_t> by_annotator_;
    std::vector<std::size_t> annotator_offsets_;
};

/// Accumulates a dataset and validates it on build(). Reports violations as SchemaError.
class AnnotatedDataset::Builder {
public:
    explicit Builder(std::vector<std::string> label_set, std::vector<DemographicAttribute> vocab = {});

    std::size_t add_sample(std::string id, std::string text);
    std::size_t add_annotator(std::string id, std::optional<Demographics> demographics = std::nullopt);
    void add_annotation(std::string_view sample_id, std::string_view annotator_id, std::string_view label);
    void add_annotation(std::size_t sample, std::size_t annotator, std::size_t label);

    bool has_sample(std::string_view id) const { return sample_ids_.contains(std::string(id)); }
    bool has_annotator(std::string_view id) const { return annotator_ids_.contains(std::string(id)); }

    AnnotatedDataset build() &&;

private:
    AnnotatedDataset data_;
    std::unordered_map<std::string, std::size_t> sample_ids_;
    std::unordered_map<std::string, std::size_t> annotator_ids_;
    std::unordered_map<std::string, std::size_t> label_ids_;
};

/// Per-sample label histogram and majority vote.
struct SampleStats {
    std::size_t sample = 0;
    std::vector<std::size_t> histogram;  // indexed by label
    std::size_t total = 0;
    std::size_t majority_label = 0;
    bool is_tie = false;
    double ambiguity = 0.0;
};

/// Histogram and majority label per sample, aligned with dataset.samples().
/// Ties go to the earliest label in label_set order and set is_tie.
std::vector<SampleStats> majority_vote(const AnnotatedDataset& dataset);

/// 1 - share of the majority label, rescaled by k/(k-1) so the flat histogram maps to 1.
double ambiguity(const SampleStats& stats);

/// Share of the sample's annotations that carry `annotation.label`.
double popularity(const Annotation& annotation, const SampleStats& stats);

struct AnnotatorProfile {
    std::size_t annotator = 0;
    std::string annotator_id;
    std::size_t n_annotations = 0;
    std::size_t n_disagreements = 0;
    double adr = 0.0;
};

/// Average disagreement rate with the majority vote, for annotators with >= 1 annotation.
/// Ordered by annotator index.
std::vector<AnnotatorProfile> compute_adr(const AnnotatedDataset& dataset, std::span<const SampleStats> mv);

struct TieSummary {
    std::size_t tie_samples = 0;
    std::size_t tie_annotations = 0;
    double annotation_fraction = 0.0;
};

TieSummary summarize_ties(std::span<const SampleStats> mv);

/// Content hash over canonically sorted annotations, sample texts, labels and demographics.
std::string fingerprint(const AnnotatedDataset& dataset);

}  // namespace opinion_audit
