#include "opinion_audit/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>

#include <fmt/format.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

std::string_view grouping_kind_name(GroupingKind kind) {
    switch (kind) {
        case GroupingKind::adr_bins: return "adr";
        case GroupingKind::popularity_bins: return "popularity";
        case GroupingKind::ambiguity_bins: return "ambiguity";
        case GroupingKind::demographic_partition: return "demographic";
    }
    return "unknown";
}

std::vector<double> default_bin_edges() {
    return {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
}

GroupingStrategy GroupingStrategy::bins(GroupingKind kind, std::vector<double> edges) {
    GroupingStrategy s;
    s.kind = kind;
    s.bin_edges = edges.empty() ? default_bin_edges() : std::move(edges);
    s.validate();
    return s;
}

GroupingStrategy GroupingStrategy::demographic(std::string attribute) {
    GroupingStrategy s;
    s.kind = GroupingKind::demographic_partition;
    s.attribute = std::move(attribute);
    s.validate();
    return s;
}

GroupingStrategy GroupingStrategy::parse(std::string_view text, std::vector<double> edges) {
    if (text == "adr") return bins(GroupingKind::adr_bins, std::move(edges));
    if (text == "popularity") return bins(GroupingKind::popularity_bins, std::move(edges));
    if (text == "ambiguity") return bins(GroupingKind::ambiguity_bins, std::move(edges));
    if (text.starts_with("demographic:")) return demographic(std::string(text.substr(12)));
    throw UsageError(fmt::format("unknown grouping \"{}\" (expected adr|popularity|ambiguity|demographic:<attr>)", text));
}

void GroupingStrategy::validate() const {
    if (kind == GroupingKind::demographic_partition) {
        if (attribute.empty()) throw UsageError("demographic grouping needs an attribute name");
        return;
    }
    if (bin_edges.size() < 2) throw UsageError("bin edges need at least two values");
    if (bin_edges.front() != 0.0 || bin_edges.back() != 1.0) throw UsageError("bin edges must span [0, 1]");
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1])) throw UsageError("bin edges must be strictly increasing");
}

std::string GroupingStrategy::describe() const {
    if (kind == GroupingKind::demographic_partition) return "demographic:" + attribute;
    return std::string(grouping_kind_name(kind));
}

std::size_t bin_of(double value, std::span<const double> edges) {
    const std::size_t n_bins = edges.size() - 1;
    if (value >= edges.back()) return n_bins - 1;
    auto it = std::upper_bound(edges.begin(), edges.end(), value);
    if (it == edges.begin()) return 0;
    return std::min(static_cast<std::size_t>(it - edges.begin()) - 1, n_bins - 1);
}

std::string bin_label(std::span<const double> edges, std::size_t bin) {
    const bool last = bin + 2 == edges.size();
    return fmt::format("[{}, {}{}", fixed(edges[bin], 2), fixed(edges[bin + 1], 2), last ? "]" : ")");
}

PerUserResult per_user_performance(std::span<const EvalRecord> records, const AnnotatedDataset& eval,
                                   std::span<const Metric> metrics, std::size_t min_support) {
    const std::size_t k = eval.label_set().size();
    std::map<std::string, std::pair<std::size_t, Confusion>> per_user;  // ordered by id
    for (const auto& r : records) {
        const auto& id = eval.annotators().at(r.annotator).id;
        auto it = per_user.try_emplace(id, r.annotator, Confusion(k)).first;
        it->second.second.add(r.truth, r.predicted);
    }
    PerUserResult out;
    out.metrics.assign(metrics.begin(), metrics.end());
    for (const auto& [id, entry] : per_user) {
        const auto& [annotator, confusion] = entry;
        if (confusion.total() < min_support) {
            out.excluded.push_back(id);
            continue;
        }
        PerUserPerformance p{annotator, id, {}, confusion.total()};
        for (Metric m : metrics) p.values.push_back(score(confusion, m));
        out.users.push_back(std::move(p));
    }
    return out;
}

GroupedEvaluation group_users(std::span<const AnnotatorProfile> profiles, const GroupingStrategy& strategy,
                              const AnnotatedDataset& dataset, std::span<const std::string> users) {
    strategy.validate();
    GroupedEvaluation g;
    g.strategy = strategy;
    switch (strategy.kind) {
        case GroupingKind::adr_bins: {
            std::unordered_map<std::string, double> adr;
            for (const auto& p : profiles) adr.emplace(p.annotator_id, p.adr);
            for (std::size_t b = 0; b + 1 < strategy.bin_edges.size(); ++b)
                g.groups.push_back({fmt::format("bin{}", b), bin_label(strategy.bin_edges, b), {}, 0.0, false});
            for (const auto& u : users) {
                auto it = adr.find(u);
                if (it == adr.end()) {
                    g.ungrouped.push_back(u);
                    continue;
                }
                g.groups[bin_of(it->second, strategy.bin_edges)].members.push_back(u);
            }
            break;
        }
        case GroupingKind::demographic_partition: {
            const auto& vocab = dataset.demographic_vocab();
            auto attr = std::find_if(vocab.begin(), vocab.end(),
                                     [&](const DemographicAttribute& d) { return d.name == strategy.attribute; });
            if (attr == vocab.end())
                throw UsageError(fmt::format("demographic attribute \"{}\" is not declared", strategy.attribute));
            for (const auto& v : attr->values) g.groups.push_back({v, strategy.attribute + "=" + v, {}, 0.0, false});
            g.groups.push_back({"unknown", strategy.attribute + "=unknown", {}, 0.0, false});
            for (const auto& u : users) {
                const auto idx = dataset.find_annotator(u);
                if (!idx) {
                    g.ungrouped.push_back(u);
                    continue;
                }
                const auto value = dataset.demographic_value(*idx, strategy.attribute);
                std::size_t slot = attr->values.size();
                if (value) {
                    auto pos = std::find(attr->values.begin(), attr->values.end(), *value);
                    if (pos != attr->values.end()) slot = static_cast<std::size_t>(pos - attr->values.begin());
                }
                g.groups[slot].members.push_back(u);
            }
            break;
        }
        default:
            throw UsageError(fmt::format("{} grouping applies to annotations or samples, not users",
                                         grouping_kind_name(strategy.kind)));
    }
    for (auto& grp : g.groups) std::sort(grp.members.begin(), grp.members.end());
    std::sort(g.ungrouped.begin(), g.ungrouped.end());
    return g;
}

GroupedEvaluation evaluate_groups(GroupedEvaluation skeleton, const PerUserResult& per_user, Metric metric) {
    auto m = std::find(per_user.metrics.begin(), per_user.metrics.end(), metric);
    if (m == per_user.metrics.end()) throw std::invalid_argument("evaluate_groups: metric was not computed");
    const auto mi = static_cast<std::size_t>(m - per_user.metrics.begin());
    std::unordered_map<std::string, double> value;
    for (const auto& u : per_user.users) value.emplace(u.annotator_id, u.values[mi]);

    skeleton.metric = metric;
    for (auto& grp : skeleton.groups) {
        std::vector<std::string> kept;
        std::vector<double> values;
        for (const auto& member : grp.members) {
            auto it = value.find(member);
            if (it == value.end()) continue;
            kept.push_back(member);
            values.push_back(it->second);
        }
        grp.members = std::move(kept);
        grp.empty = values.empty();
        grp.value = exact_mean(values);
    }
    return skeleton;
}

AuditScore unfairness_score(const GroupedEvaluation& grouped) {
    AuditScore s;
    s.metric = std::string(metric_name(grouped.metric));
    std::vector<double> values;
    for (const auto& g : grouped.groups) {
        if (g.empty)
            s.dropped_groups.push_back(g.id);
        else
            values.push_back(g.value);
    }
    if (values.size() < 2)
        throw DataError(fmt::format("unfairness is undefined with {} non-empty group(s); at least 2 are needed",
                                    values.size()));
    s.groups_used = values.size();
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
        s.general_performance = values.front();
        s.unfairness = 0.0;
        return s;
    }
    const double mean = exact_mean(values);
    std::vector<double> sq;
    for (double v : values) sq.push_back((v - mean) * (v - mean));
    s.general_performance = mean;
    s.unfairness = std::sqrt(exact_mean(sq));
    return s;
}

CombinedScore multi_metric_score(std::span<const GroupedEvaluation> per_metric) {
    if (per_metric.empty()) throw std::invalid_argument("multi_metric_score: no evaluations");
    const auto& ref = per_metric.front();
    for (const auto& e : per_metric) {
        bool same = e.groups.size() == ref.groups.size() && e.strategy.describe() == ref.strategy.describe();
        for (std::size_t i = 0; same && i < e.groups.size(); ++i)
            same = e.groups[i].id == ref.groups[i].id && e.groups[i].members == ref.groups[i].members;
        if (!same) throw std::invalid_argument("multi_metric_score: evaluations use different groupings");
    }
    CombinedScore c;
    std::vector<double> unfairness, performance;
    for (const auto& e : per_metric) {
        c.per_metric.push_back(unfairness_score(e));
        unfairness.push_back(c.per_metric.back().unfairness);
        performance.push_back(c.per_metric.back().general_performance);
    }
    c.unfairness = exact_mean(unfairness);
    c.general_performance = exact_mean(performance);
    return c;
}

namespace {

GroupedEvaluation pooled_bins(std::span<const EvalRecord> records, const AnnotatedDataset& eval,
                              std::span<const double> edges, Metric metric, GroupingKind kind,
                              const std::function<double(const EvalRecord&)>& bin_value,
                              const std::function<std::string(const EvalRecord&)>& member_of) {
    GroupedEvaluation g;
    g.strategy = GroupingStrategy::bins(kind, std::vector<double>(edges.begin(), edges.end()));
    g.metric = metric;
    const std::size_t n_bins = edges.size() - 1;
    std::vector<Confusion> confusion(n_bins, Confusion(eval.label_set().size()));
    std::vector<std::vector<std::string>> members(n_bins);
    for (const auto& r : records) {
        const std::size_t b = bin_of(bin_value(r), edges);
        confusion[b].add(r.truth, r.predicted);
        members[b].push_back(member_of(r));
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
        auto& m = members[b];
        std::sort(m.begin(), m.end());
        m.erase(std::unique(m.begin(), m.end()), m.end());
        const bool empty = confusion[b].total() == 0;
        g.groups.push_back({fmt::format("bin{}", b), bin_label(edges, b), std::move(m),
                            empty ? 0.0 : score(confusion[b], metric), empty});
    }
    return g;
}

}  // namespace

GroupedEvaluation annotation_level_breakdown(std::span<const EvalRecord> records, const AnnotatedDataset& eval,
                                             std::span<const SampleStats> eval_stats, std::span<const double> edges,
                                             Metric metric) {
    return pooled_bins(
        records, eval, edges, metric, GroupingKind::popularity_bins,
        [&](const EvalRecord& r) { return popularity(Annotation{r.sample, r.annotator, r.truth}, eval_stats[r.sample]); },
        [&](const EvalRecord& r) { return eval.samples()[r.sample].id + "|" + eval.annotators()[r.annotator].id; });
}

GroupedEvaluation sample_level_breakdown(std::span<const EvalRecord> records, const AnnotatedDataset& eval,
                                         std::span<const SampleStats> eval_stats, std::span<const double> edges,
                                         Metric metric) {
    return pooled_bins(
        records, eval, edges, metric, GroupingKind::ambiguity_bins,
        [&](const EvalRecord& r) { return eval_stats[r.sample].ambiguity; },
        [&](const EvalRecord& r) { return eval.samples()[r.sample].id; });
}

}  // namespace opinion_audit
