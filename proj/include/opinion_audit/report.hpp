#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "opinion_audit/dataset.hpp"
#include "opinion_audit/fairness.hpp"

namespace opinion_audit {

inline constexpr int report_schema_version = 1;
inline constexpr std::string_view tool_name = "opinion-audit";
inline constexpr std::string_view tool_version = "1.0.0";

struct ReportGroup {
    std::string id;
    std::string label;
    std::vector<std::string> members;
    double value = 0.0;
    bool empty = false;
    bool operator==(const ReportGroup&) const = default;
};

struct ReportTable {
    std::string grouping;  // GroupingStrategy::describe()
    std::string metric;
    std::vector<ReportGroup> groups;
    bool operator==(const ReportTable&) const = default;
};

struct ReportScore {
    std::string metric;
    double unfairness = 0.0;
    double general_performance = 0.0;
    std::size_t groups_used = 0;
    std::vector<std::string> dropped_groups;
    bool operator==(const ReportScore&) const = default;
};

struct ReportCvPoint {
    double l2_lambda = 0.0;
    std::vector<double> fold_scores;
    double mean = 0.0;
    bool operator==(const ReportCvPoint&) const = default;
};

struct ReportModel {
    std::string kind;
    std::optional<double> selected_lambda;
    std::vector<ReportCvPoint> cv;
    std::size_t training_examples = 0;
    std::size_t epochs_run = 0;
    bool converged = false;
    double unfairness = 0.0;
    double general_performance = 0.0;
    std::vector<ReportScore> scores;       // one per metric
    std::vector<ReportTable> tables;       // the audited grouping, one per metric
    std::vector<ReportTable> breakdowns;   // popularity and ambiguity bins
    std::vector<std::string> excluded_users;
    std::size_t evaluated_users = 0;
    bool operator==(const ReportModel&) const = default;
};

struct ReportFiltered {
    std::string annotator_id;
    double score = 0.0;
    bool operator==(const ReportFiltered&) const = default;
};

struct ReportWarning {
    std::string code;  // mv_ties, dropped_bins, excluded_users, filtered_annotators, ungrouped_users
    std::string message;
    bool operator==(const ReportWarning&) const = default;
};

struct AuditReport {
    int schema_version = report_schema_version;
    std::string tool = std::string(tool_name);
    std::string version = std::string(tool_version);

    struct Dataset {
        std::string fingerprint;
        std::size_t samples = 0;
        std::size_t annotators = 0;
        std::size_t annotations = 0;
        std::vector<std::string> labels;
        std::vector<DemographicAttribute> demographics;
        bool operator==(const Dataset&) const = default;
    } dataset;

    struct Config {
        std::size_t n_text_buckets = 0;
        std::uint64_t hash_seed = 0;
        std::string feature_spec_hash;
        double learning_rate = 0.0;
        std::size_t max_epochs = 0;
        double tolerance = 0.0;
        std::size_t batch_size = 0;
        std::vector<double> lambda_grid;
        std::size_t cv_folds = 0;
        std::string grouping;
        std::vector<double> bin_edges;
        std::vector<std::string> metrics;
        double quality_threshold = 0.0;
        std::size_t min_support = 0;
        std::uint64_t seed = 0;
        std::size_t eval_fold = 0;
        std::size_t split_folds = 0;
        std::size_t train_samples = 0;
        std::size_t eval_samples = 0;
        std::size_t eval_annotations = 0;
        std::uint64_t balance_seed = 0;
        std::vector<std::size_t> balance_kept;       // per label
        std::vector<std::size_t> balance_discarded;  // per label
        bool operator==(const Config&) const = default;
    } config;

    struct Quality {
        double threshold = 0.0;
        std::size_t scored_annotators = 0;
        double min_score = 0.0;
        double mean_score = 0.0;
        double max_score = 0.0;
        std::vector<ReportFiltered> filtered;
        bool operator==(const Quality&) const = default;
    } quality;

    std::vector<ReportModel> models;
    std::vector<ReportWarning> warnings;

    bool operator==(const AuditReport&) const = default;
};

ReportTable report_table(const GroupedEvaluation& grouped);
ReportScore report_score(const AuditScore& score);

enum class ReportFormat { json, csv, text };
ReportFormat parse_report_format(std::string_view name);

std::string report_to_json(const AuditReport& report);
/// Throws DataError on malformed input or an unsupported schema version.
AuditReport report_from_json(std::string_view json_text);

std::string render_report(const AuditReport& report, ReportFormat format);

/// Two saved reports side by side.
std::string render_comparison(const AuditReport& left, const AuditReport& right);

struct HeatmapColumn {
    std::string name;
    ReportTable table;
};

/// Rows are groups, columns are models. Every column must carry the same groups (ids, labels and
/// members); std::invalid_argument otherwise or when there are fewer than two rows.
std::string render_heatmap(const std::vector<HeatmapColumn>& columns);

/// Columns for every model of a report, using each model's first metric table.
std::vector<HeatmapColumn> heatmap_columns(const AuditReport& report);

}  // namespace opinion_audit
