#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace opinion_audit {

enum class Metric { accuracy, precision, recall, f1 };

std::string_view metric_name(Metric metric);
/// Throws UsageError for an unknown name.
Metric parse_metric(std::string_view name);

/// k x k counts, rows = true label, columns = predicted label.
class Confusion {
public:
    explicit Confusion(std::size_t n_labels) : k_(n_labels), counts_(n_labels * n_labels, 0) {}

    void add(std::size_t truth, std::size_t predicted) { ++counts_.at(truth * k_ + predicted); }
    std::size_t count(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
    std::size_t n_labels() const noexcept { return k_; }
    std::size_t total() const;
    std::size_t correct() const;

private:
    std::size_t k_;
    std::vector<std::size_t> counts_;
};

/// Accuracy, or the macro average of per-label precision / recall / F1 over the labels that
/// occur among the true labels. A label never predicted has precision 0. Empty confusion -> 0.
double score(const Confusion& confusion, Metric metric);

}  // namespace opinion_audit
