#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "opinion_audit/audit_models.hpp"
#include "opinion_audit/dataset.hpp"
#include "opinion_audit/fairness.hpp"
#include "opinion_audit/learn.hpp"
#include "opinion_audit/metrics.hpp"
#include "opinion_audit/report.hpp"

namespace opinion_audit {

struct AuditOptions {
    std::vector<ModelKind> models{ModelKind::mv_model, ModelKind::annotator_model};
    GroupingStrategy grouping = GroupingStrategy::bins(GroupingKind::adr_bins);
    std::vector<Metric> metrics{Metric::accuracy};
    double quality_threshold = 0.0;
    std::size_t min_support = 3;
    std::uint64_t seed = 0;
    std::size_t n_text_buckets = std::size_t{1} << 18;
    TrainConfig train;
    std::vector<double> lambda_grid{1e-2, 1e-3, 1e-4};
    std::size_t cv_folds = 5;
    std::size_t split_folds = 5;  // fold 0 of a by-sample split is held out for evaluation

    void validate() const;
};

/// Filter, split by sample, profile users on the training split, train and tune each model,
/// predict the balanced held-out annotations and score per-user performance by group.
AuditReport run_audit(const AnnotatedDataset& dataset, const AuditOptions& options);

}  // namespace opinion_audit
