#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opinion_audit/dataset.hpp"
#include "opinion_audit/featurize.hpp"
#include "opinion_audit/learn.hpp"

namespace opinion_audit {

/// mv_model: text only, trained on majority votes.
/// annotator_model: text + demographics, trained on every raw annotation.
/// oracle_model: returns each annotator's recorded label.
enum class ModelKind { mv_model, annotator_model, oracle_model };

std::string_view model_kind_name(ModelKind kind);  // "mv", "annotator", "oracle"
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
    ModelKind kind = ModelKind::mv_model;
    FeatureSpec feature_spec;
    TrainConfig train_config;

    /// Copies `base` and sets include_demographics to match the kind.
    static ModelConfig make(ModelKind kind, FeatureSpec base, TrainConfig train);
    void validate() const;
};

struct TrainingSet {
    std::vector<Example> examples;
    std::vector<std::size_t> sample_of_example;  // fold grouping key
};

/// mv_model: one example per sample labeled with its majority vote.
/// annotator_model: one example per annotation, features from featurize_pair.
/// oracle_model: empty.
TrainingSet build_training_set(const AnnotatedDataset& dataset, std::span<const SampleStats> mv,
                               const ModelConfig& config);

class TrainedAuditModel {
public:
    static TrainedAuditModel learned(ModelConfig config, LRModel model);
    /// Oracle over the annotations of `table` (the evaluation set).
    static TrainedAuditModel oracle(const AnnotatedDataset& table);

    const ModelConfig& config() const noexcept { return config_; }
    const std::optional<LRModel>& lr_model() const noexcept { return model_; }

    /// Label index predicted for `annotator` on `sample`. The oracle throws DataError when the
    /// pair has no recorded annotation.
    std::size_t predict_for_user(const Sample& sample, const Annotator& annotator) const;

private:
    ModelConfig config_;
    std::optional<LRModel> model_;
    std::unordered_map<std::string, std::size_t> oracle_table_;
};

struct BalancedSelection {
    std::vector<std::size_t> kept;  // annotation indices, ascending
    std::vector<std::size_t> kept_per_label;
    std::vector<std::size_t> discarded_per_label;
    std::uint64_t seed = 0;
};

/// Seeded downsampling of every label to the count of the rarest label present.
/// Labels that do not occur are ignored.
BalancedSelection balance_classes(const AnnotatedDataset& dataset, std::uint64_t seed);

}  // namespace opinion_audit
