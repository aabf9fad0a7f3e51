#include "opinion_audit/pipeline.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/featurize.hpp"
#include "opinion_audit/quality.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

void AuditOptions::validate() const {
    if (models.empty()) throw UsageError("at least one --model is required");
    if (metrics.empty()) throw UsageError("at least one --metric is required");
    for (std::size_t i = 0; i < models.size(); ++i)
        for (std::size_t j = i + 1; j < models.size(); ++j)
            if (models[i] == models[j])
                throw UsageError(fmt::format("model \"{}\" requested twice", model_kind_name(models[i])));
    if (!(quality_threshold >= 0.0 && quality_threshold <= 1.0))
        throw UsageError("--quality-threshold must lie in [0, 1]");
    if (lambda_grid.empty()) throw UsageError("lambda grid is empty");
    if (cv_folds < 2 || split_folds < 2) throw UsageError("fold counts must be at least 2");
    grouping.validate();
    train.validate();
}

namespace {

std::vector<double> breakdown_edges(const GroupingStrategy& g) {
    return g.kind == GroupingKind::demographic_partition ? default_bin_edges() : g.bin_edges;
}

std::string preview(const std::vector<std::string>& ids) {
    constexpr std::size_t shown = 5;
    std::string out;
    for (std::size_t i = 0; i < std::min(ids.size(), shown); ++i) out += (i ? ", " : "") + ids[i];
    if (ids.size() > shown) out += fmt::format(", ... ({} more)", ids.size() - shown);
    return out;
}

}  // namespace

AuditReport run_audit(const AnnotatedDataset& input, const AuditOptions& options) {
    options.validate();
    AuditReport report;
    const auto& labels = input.label_set();

    // Quality scoring and optional filtering.
    const auto scores = annotator_quality(input);
    report.quality.threshold = options.quality_threshold;
    report.quality.scored_annotators = scores.size();
    if (!scores.empty()) {
        std::vector<double> values;
        for (const auto& s : scores) values.push_back(s.score);
        report.quality.min_score = *std::min_element(values.begin(), values.end());
        report.quality.max_score = *std::max_element(values.begin(), values.end());
        report.quality.mean_score = exact_mean(values);
    }
    std::optional<FilterResult> filtered;
    if (options.quality_threshold > 0.0) {
        filtered = filter_annotators(input, scores, options.quality_threshold);
        for (const auto& r : filtered->removed) report.quality.filtered.push_back({r.annotator_id, r.score});
    }
    const AnnotatedDataset& dataset = filtered ? filtered->dataset : input;
    if (!report.quality.filtered.empty()) {
        std::vector<std::string> ids;
        for (const auto& f : report.quality.filtered) ids.push_back(f.annotator_id);
        report.warnings.push_back({"filtered_annotators",
                                   fmt::format("{} annotator(s) scored below quality threshold {}: {}", ids.size(),
                                               fixed(options.quality_threshold, 2), preview(ids))});
    }

    report.dataset.fingerprint = fingerprint(dataset);
    report.dataset.samples = dataset.samples().size();
    report.dataset.annotators = dataset.annotators().size();
    report.dataset.annotations = dataset.annotations().size();
    report.dataset.labels = labels;
    report.dataset.demographics = dataset.demographic_vocab();

    const auto ties = summarize_ties(majority_vote(dataset));
    if (ties.annotation_fraction > 0.01)
        report.warnings.push_back(
            {"mv_ties", fmt::format("{} sample(s) holding {:.1f}% of annotations have tied majority votes, broken by "
                                    "label order",
                                    ties.tie_samples, 100.0 * ties.annotation_fraction)});

    // By-sample split.
    if (dataset.samples().size() < options.split_folds)
        throw DataError(fmt::format("{} sample(s) cannot be split into {} folds", dataset.samples().size(),
                                    options.split_folds));
    const auto plan = make_folds(dataset.samples().size(), options.split_folds, derive_seed(options.seed, "split"));
    std::vector<std::size_t> eval_idx = plan.folds[0];
    std::vector<std::size_t> train_idx;
    for (std::size_t f = 1; f < plan.folds.size(); ++f)
        train_idx.insert(train_idx.end(), plan.folds[f].begin(), plan.folds[f].end());
    std::sort(eval_idx.begin(), eval_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    const auto train_ds = dataset.subset_samples(train_idx);
    const auto eval_ds = dataset.subset_samples(eval_idx);

    const auto train_mv = majority_vote(train_ds);
    const auto profiles = compute_adr(train_ds, train_mv);
    const auto eval_stats = majority_vote(eval_ds);
    const auto balance = balance_classes(eval_ds, options.seed);

    FeatureSpec base;
    base.n_text_buckets = options.n_text_buckets;
    base.demographic_vocab = dataset.demographic_vocab();
    base.validate();

    auto& rc = report.config;
    rc.n_text_buckets = base.n_text_buckets;
    rc.hash_seed = base.hash_seed;
    rc.feature_spec_hash = base.hash();
    rc.learning_rate = options.train.learning_rate;
    rc.max_epochs = options.train.max_epochs;
    rc.tolerance = options.train.tolerance;
    rc.batch_size = options.train.batch_size;
    rc.lambda_grid = options.lambda_grid;
    rc.cv_folds = options.cv_folds;
    rc.grouping = options.grouping.describe();
    rc.bin_edges = options.grouping.bin_edges;
    for (Metric m : options.metrics) rc.metrics.emplace_back(metric_name(m));
    rc.quality_threshold = options.quality_threshold;
    rc.min_support = options.min_support;
    rc.seed = options.seed;
    rc.eval_fold = 0;
    rc.split_folds = options.split_folds;
    rc.train_samples = train_idx.size();
    rc.eval_samples = eval_idx.size();
    rc.eval_annotations = balance.kept.size();
    rc.balance_seed = balance.seed;
    rc.balance_kept = balance.kept_per_label;
    rc.balance_discarded = balance.discarded_per_label;

    std::vector<std::string> dropped_warnings, excluded_warning, ungrouped_warning;
    for (ModelKind kind : options.models) {
        ReportModel rm;
        rm.kind = std::string(model_kind_name(kind));

        std::optional<TrainedAuditModel> model;
        if (kind == ModelKind::oracle_model) {
            model = TrainedAuditModel::oracle(eval_ds);
        } else {
            const auto cfg = ModelConfig::make(kind, base, options.train);
            const auto ts = build_training_set(train_ds, train_mv, cfg);
            const std::size_t width = cfg.feature_spec.width();
            auto train_cfg = cfg.train_config;
            train_cfg.seed = derive_seed(options.seed, fmt::format("train/{}", rm.kind));
            const auto tuning = tune_l2(ts.examples, labels, width, train_cfg, options.lambda_grid, options.cv_folds,
                                        options.metrics.front(), ts.sample_of_example);
            for (const auto& p : tuning.grid) rm.cv.push_back({p.l2_lambda, p.fold_scores, p.mean});
            rm.selected_lambda = tuning.best_lambda;
            train_cfg.l2_lambda = tuning.best_lambda;
            TrainTrace trace;
            auto lr = train(ts.examples, labels, width, train_cfg, &trace);
            rm.training_examples = ts.examples.size();
            rm.epochs_run = trace.epochs_run;
            rm.converged = trace.converged;
            auto model_cfg = cfg;
            model_cfg.train_config = train_cfg;
            model = TrainedAuditModel::learned(std::move(model_cfg), std::move(lr));
        }

        std::vector<EvalRecord> records;
        records.reserve(balance.kept.size());
        std::unordered_map<std::size_t, std::size_t> per_sample;  // mv predictions ignore the annotator
        for (std::size_t idx : balance.kept) {
            const auto& a = eval_ds.annotations()[idx];
            std::size_t predicted;
            if (kind == ModelKind::mv_model) {
                auto it = per_sample.find(a.sample);
                if (it == per_sample.end())
                    it = per_sample
                             .emplace(a.sample, model->predict_for_user(eval_ds.samples()[a.sample],
                                                                        eval_ds.annotators()[a.annotator]))
                             .first;
                predicted = it->second;
            } else {
                predicted = model->predict_for_user(eval_ds.samples()[a.sample], eval_ds.annotators()[a.annotator]);
            }
            records.push_back({a.sample, a.annotator, a.label, predicted});
        }

        const auto per_user = per_user_performance(records, eval_ds, options.metrics, options.min_support);
        rm.excluded_users = per_user.excluded;
        rm.evaluated_users = per_user.users.size();

        std::vector<GroupedEvaluation> evaluations;
        const auto edges = breakdown_edges(options.grouping);
        switch (options.grouping.kind) {
            case GroupingKind::popularity_bins:
                for (Metric m : options.metrics)
                    evaluations.push_back(annotation_level_breakdown(records, eval_ds, eval_stats, edges, m));
                break;
            case GroupingKind::ambiguity_bins:
                for (Metric m : options.metrics)
                    evaluations.push_back(sample_level_breakdown(records, eval_ds, eval_stats, edges, m));
                break;
            default: {
                std::vector<std::string> users;
                for (const auto& u : per_user.users) users.push_back(u.annotator_id);
                const auto skeleton = group_users(profiles, options.grouping, dataset, users);
                if (!skeleton.ungrouped.empty() && ungrouped_warning.empty()) ungrouped_warning = skeleton.ungrouped;
                for (Metric m : options.metrics) evaluations.push_back(evaluate_groups(skeleton, per_user, m));
            }
        }
        const auto combined = multi_metric_score(evaluations);
        rm.unfairness = combined.unfairness;
        rm.general_performance = combined.general_performance;
        for (const auto& s : combined.per_metric) rm.scores.push_back(report_score(s));
        for (const auto& e : evaluations) rm.tables.push_back(report_table(e));
        rm.breakdowns.push_back(report_table(
            annotation_level_breakdown(records, eval_ds, eval_stats, edges, options.metrics.front())));
        rm.breakdowns.push_back(
            report_table(sample_level_breakdown(records, eval_ds, eval_stats, edges, options.metrics.front())));

        const auto& dropped = combined.per_metric.front().dropped_groups;
        if (!dropped.empty())
            dropped_warnings.push_back(fmt::format("{}: {}", rm.kind, fmt::join(dropped, ", ")));
        if (!rm.excluded_users.empty() && excluded_warning.empty()) excluded_warning = rm.excluded_users;
        report.models.push_back(std::move(rm));
    }

    if (!dropped_warnings.empty())
        report.warnings.push_back(
            {"dropped_bins", fmt::format("empty groups dropped from scoring ({})", fmt::join(dropped_warnings, "; "))});
    if (!excluded_warning.empty())
        report.warnings.push_back(
            {"excluded_users", fmt::format("{} user(s) have fewer than {} evaluation annotations: {}",
                                           excluded_warning.size(), options.min_support, preview(excluded_warning))});
    if (!ungrouped_warning.empty())
        report.warnings.push_back({"ungrouped_users", fmt::format("{} user(s) have no training-split profile: {}",
                                                                  ungrouped_warning.size(), preview(ungrouped_warning))});
    return report;
}

}  // namespace opinion_audit
