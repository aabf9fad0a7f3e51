#include "opinion_audit/metrics.hpp"

#include <fmt/format.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

std::string_view metric_name(Metric metric) {
    switch (metric) {
        case Metric::accuracy: return "accuracy";
        case Metric::precision: return "precision";
        case Metric::recall: return "recall";
        case Metric::f1: return "f1";
    }
    return "unknown";
}

Metric parse_metric(std::string_view name) {
    for (Metric m : {Metric::accuracy, Metric::precision, Metric::recall, Metric::f1})
        if (metric_name(m) == name) return m;
    throw UsageError(fmt::format("unknown metric \"{}\" (expected accuracy|precision|recall|f1)", name));
}

std::size_t Confusion::total() const {
    std::size_t t = 0;
    for (std::size_t c : counts_) t += c;
    return t;
}

std::size_t Confusion::correct() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < k_; ++i) t += count(i, i);
    return t;
}

double score(const Confusion& confusion, Metric metric) {
    const std::size_t total = confusion.total();
    if (total == 0) return 0.0;
    if (metric == Metric::accuracy)
        return static_cast<double>(confusion.correct()) / static_cast<double>(total);

    const std::size_t k = confusion.n_labels();
    std::vector<double> per_label;
    for (std::size_t l = 0; l < k; ++l) {
        std::size_t support = 0, predicted = 0;
        for (std::size_t j = 0; j < k; ++j) {
            support += confusion.count(l, j);
            predicted += confusion.count(j, l);
        }
        if (support == 0) continue;
        const auto tp = static_cast<double>(confusion.count(l, l));
        const double precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
        const double recall = tp / static_cast<double>(support);
        switch (metric) {
            case Metric::precision: per_label.push_back(precision); break;
            case Metric::recall: per_label.push_back(recall); break;
            default:
                per_label.push_back(precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0);
        }
    }
    return exact_mean(per_label);
}

}  // namespace opinion_audit
