#include "opinion_audit/audit_models.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

namespace {

std::string pair_key(std::string_view sample_id, std::string_view annotator_id) {
    std::string key(sample_id);
    key += '\x1f';
    key += annotator_id;
    return key;
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::mv_model: return "mv";
        case ModelKind::annotator_model: return "annotator";
        case ModelKind::oracle_model: return "oracle";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    for (ModelKind k : {ModelKind::mv_model, ModelKind::annotator_model, ModelKind::oracle_model})
        if (model_kind_name(k) == name) return k;
    throw UsageError(fmt::format("unknown model \"{}\" (expected mv|annotator|oracle)", name));
}

ModelConfig ModelConfig::make(ModelKind kind, FeatureSpec base, TrainConfig train) {
    base.include_demographics = kind == ModelKind::annotator_model;
    return {kind, std::move(base), train};
}

void ModelConfig::validate() const {
    if (kind == ModelKind::mv_model && feature_spec.include_demographics)
        throw UsageError("the mv model must not see demographics");
    if (kind == ModelKind::annotator_model && !feature_spec.include_demographics)
        throw UsageError("the annotator model requires demographic features");
    if (kind != ModelKind::oracle_model) {
        feature_spec.validate();
        train_config.validate();
    }
}

TrainingSet build_training_set(const AnnotatedDataset& dataset, std::span<const SampleStats> mv,
                               const ModelConfig& config) {
    config.validate();
    TrainingSet out;
    switch (config.kind) {
        case ModelKind::mv_model:
            if (mv.size() != dataset.samples().size())
                throw std::invalid_argument("build_training_set: majority votes from another dataset");
            for (std::size_t s = 0; s < dataset.samples().size(); ++s) {
                out.examples.push_back({featurize_sample(dataset.samples()[s].text, config.feature_spec),
                                        mv[s].majority_label});
                out.sample_of_example.push_back(s);
            }
            break;
        case ModelKind::annotator_model:
            for (const auto& a : dataset.annotations()) {
                out.examples.push_back({featurize_pair(dataset.samples()[a.sample].text,
                                                       dataset.annotators()[a.annotator].demographics,
                                                       config.feature_spec),
                                        a.label});
                out.sample_of_example.push_back(a.sample);
            }
            break;
        case ModelKind::oracle_model:
            break;
    }
    return out;
}

TrainedAuditModel TrainedAuditModel::learned(ModelConfig config, LRModel model) {
    config.validate();
    if (config.kind == ModelKind::oracle_model) throw UsageError("the oracle has no learned parameters");
    if (model.width != config.feature_spec.width())
        throw std::invalid_argument("model width does not match the feature spec");
    TrainedAuditModel m;
    m.config_ = std::move(config);
    m.model_ = std::move(model);
    return m;
}

TrainedAuditModel TrainedAuditModel::oracle(const AnnotatedDataset& table) {
    TrainedAuditModel m;
    m.config_.kind = ModelKind::oracle_model;
    for (const auto& a : table.annotations())
        m.oracle_table_.emplace(pair_key(table.samples()[a.sample].id, table.annotators()[a.annotator].id), a.label);
    return m;
}

std::size_t TrainedAuditModel::predict_for_user(const Sample& sample, const Annotator& annotator) const {
    switch (config_.kind) {
        case ModelKind::oracle_model: {
            auto it = oracle_table_.find(pair_key(sample.id, annotator.id));
            if (it == oracle_table_.end())
                throw DataError(fmt::format("oracle has no annotation for (sample \"{}\", annotator \"{}\")", sample.id,
                                            annotator.id));
            return it->second;
        }
        case ModelKind::mv_model:
            return predict(*model_, featurize_sample(sample.text, config_.feature_spec)).label;
        case ModelKind::annotator_model:
            return predict(*model_, featurize_pair(sample.text, annotator.demographics, config_.feature_spec)).label;
    }
    throw std::logic_error("unreachable");
}

BalancedSelection balance_classes(const AnnotatedDataset& dataset, std::uint64_t seed) {
    const std::size_t k = dataset.label_set().size();
    std::vector<std::vector<std::size_t>> by_label(k);
    for (std::size_t i = 0; i < dataset.annotations().size(); ++i) by_label[dataset.annotations()[i].label].push_back(i);

    std::size_t target = std::numeric_limits<std::size_t>::max();
    for (const auto& v : by_label)
        if (!v.empty()) target = std::min(target, v.size());

    BalancedSelection out;
    out.seed = seed;
    out.kept_per_label.assign(k, 0);
    out.discarded_per_label.assign(k, 0);
    Rng rng(derive_seed(seed, "balance"));
    for (std::size_t l = 0; l < k; ++l) {
        auto& v = by_label[l];
        if (v.empty()) continue;
        if (v.size() > target) {
            rng.shuffle(v);
            out.discarded_per_label[l] = v.size() - target;
            v.resize(target);
        }
        out.kept_per_label[l] = v.size();
        out.kept.insert(out.kept.end(), v.begin(), v.end());
    }
    std::sort(out.kept.begin(), out.kept.end());
    return out;
}

}  // namespace opinion_audit
