#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opinion_audit/dataset.hpp"
#include "opinion_audit/metrics.hpp"

namespace opinion_audit {

enum class GroupingKind { adr_bins, popularity_bins, ambiguity_bins, demographic_partition };

std::string_view grouping_kind_name(GroupingKind kind);

struct GroupingStrategy {
    GroupingKind kind = GroupingKind::adr_bins;
    std::vector<double> bin_edges;  // bin kinds only; strictly increasing from 0 to 1
    std::string attribute;          // demographic_partition only

    static GroupingStrategy bins(GroupingKind kind, std::vector<double> edges = {});
    static GroupingStrategy demographic(std::string attribute);
    /// "adr", "popularity", "ambiguity" or "demographic:<attr>".
    static GroupingStrategy parse(std::string_view text, std::vector<double> edges = {});

    void validate() const;
    std::string describe() const;
};

/// {0, 0.2, 0.4, 0.6, 0.8, 1}
std::vector<double> default_bin_edges();

/// Bin holding `value`: bins are right-open except the last, which is closed.
std::size_t bin_of(double value, std::span<const double> edges);

/// "[0.20, 0.40)" style label.
std::string bin_label(std::span<const double> edges, std::size_t bin);

/// One held-out annotation with the model's prediction for that (sample, annotator).
struct EvalRecord {
    std::size_t sample = 0;     // index in the evaluation dataset
    std::size_t annotator = 0;  // index in the evaluation dataset
    std::size_t truth = 0;
    std::size_t predicted = 0;
};

struct PerUserPerformance {
    std::size_t annotator = 0;
    std::string annotator_id;
    std::vector<double> values;  // aligned with PerUserResult::metrics
    std::size_t n_eval_annotations = 0;
};

struct PerUserResult {
    std::vector<Metric> metrics;
    std::vector<PerUserPerformance> users;  // sorted by annotator id
    std::vector<std::string> excluded;      // below minimum support, sorted
};

/// Each user's metrics over their own evaluation annotations (prediction vs the user's label).
PerUserResult per_user_performance(std::span<const EvalRecord> records, const AnnotatedDataset& eval,
                                   std::span<const Metric> metrics, std::size_t min_support);

struct Group {
    std::string id;
    std::string label;
    std::vector<std::string> members;  // sorted
    double value = 0.0;
    bool empty = false;
};

struct GroupedEvaluation {
    GroupingStrategy strategy;
    Metric metric = Metric::accuracy;
    std::vector<Group> groups;
    std::vector<std::string> ungrouped;  // evaluated users the strategy could not place
};

/// Assigns users to groups (values left at 0). adr_bins places every profiled user in the bin of
/// their ADR; demographic_partition makes one group per vocabulary value plus "unknown".
/// Only ids in `users` are placed; users without a profile are reported as ungrouped.
GroupedEvaluation group_users(std::span<const AnnotatorProfile> profiles, const GroupingStrategy& strategy,
                              const AnnotatedDataset& dataset, std::span<const std::string> users);

/// Fills group values with the mean of members' per-user values for `metric`; marks empty groups.
GroupedEvaluation evaluate_groups(GroupedEvaluation skeleton, const PerUserResult& per_user, Metric metric);

struct AuditScore {
    std::string metric;
    double unfairness = 0.0;          // population std of non-empty group values
    double general_performance = 0.0; // mean of non-empty group values
    std::size_t groups_used = 0;
    std::vector<std::string> dropped_groups;
};

/// Throws DataError when fewer than two groups are non-empty.
AuditScore unfairness_score(const GroupedEvaluation& grouped);

struct CombinedScore {
    double unfairness = 0.0;
    double general_performance = 0.0;
    std::vector<AuditScore> per_metric;
};

/// Averages unfairness and performance across metrics. Every evaluation must share the same
/// groups and members (std::invalid_argument otherwise).
CombinedScore multi_metric_score(std::span<const GroupedEvaluation> per_metric);

/// Groups evaluation annotations by popularity of their label within the sample's evaluation
/// histogram; each bin's value is `metric` pooled over its annotations.
GroupedEvaluation annotation_level_breakdown(std::span<const EvalRecord> records, const AnnotatedDataset& eval,
                                             std::span<const SampleStats> eval_stats, std::span<const double> edges,
                                             Metric metric);

/// Groups evaluation samples by ambiguity of their evaluation histogram; each bin's value is
/// `metric` pooled over the annotations of its samples.
GroupedEvaluation sample_level_breakdown(std::span<const EvalRecord> records, const AnnotatedDataset& eval,
                                         std::span<const SampleStats> eval_stats, std::span<const double> edges,
                                         Metric metric);

}  // namespace opinion_audit
