#include "opinion_audit/quality.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

std::vector<QualityScore> annotator_quality(const AnnotatedDataset& dataset) {
    const auto mv = majority_vote(dataset);
    std::vector<QualityScore> out;
    std::vector<double> agreements;
    for (std::size_t u = 0; u < dataset.annotators().size(); ++u) {
        agreements.clear();
        for (std::size_t idx : dataset.annotations_of_annotator(u)) {
            const Annotation& a = dataset.annotations()[idx];
            const SampleStats& st = mv[a.sample];
            if (st.total < 2) continue;
            const std::size_t same_others = st.histogram[a.label] - 1;
            agreements.push_back(static_cast<double>(same_others) / static_cast<double>(st.total - 1));
        }
        if (agreements.empty()) continue;
        out.push_back({u, dataset.annotators()[u].id, exact_mean(agreements), agreements.size()});
    }
    return out;
}

FilterResult filter_annotators(const AnnotatedDataset& dataset, std::span<const QualityScore> scores,
                               double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw UsageError(fmt::format("quality threshold must lie in [0, 1], got {}", threshold));

    std::vector<bool> drop(dataset.annotators().size(), false);
    FilterResult result;
    for (const auto& q : scores) {
        if (q.annotator >= drop.size() || dataset.annotators()[q.annotator].id != q.annotator_id)
            throw std::invalid_argument("filter_annotators: scores were computed on another dataset");
        if (q.score < threshold) {
            drop[q.annotator] = true;
            result.removed.push_back(q);
        }
    }
    std::sort(result.removed.begin(), result.removed.end(),
              [](const QualityScore& a, const QualityScore& b) { return a.annotator_id < b.annotator_id; });

    std::vector<bool> sample_kept(dataset.samples().size(), false);
    for (const auto& a : dataset.annotations())
        if (!drop[a.annotator]) sample_kept[a.sample] = true;

    AnnotatedDataset::Builder b(dataset.label_set(), dataset.demographic_vocab());
    std::vector<std::size_t> sample_map(dataset.samples().size());
    std::vector<std::size_t> annotator_map(dataset.annotators().size());
    for (std::size_t s = 0; s < dataset.samples().size(); ++s)
        if (sample_kept[s]) sample_map[s] = b.add_sample(dataset.samples()[s].id, dataset.samples()[s].text);
    std::size_t kept_annotators = 0;
    for (std::size_t u = 0; u < dataset.annotators().size(); ++u) {
        if (drop[u]) continue;
        annotator_map[u] = b.add_annotator(dataset.annotators()[u].id, dataset.annotators()[u].demographics);
        if (!dataset.annotations_of_annotator(u).empty()) ++kept_annotators;
    }
    if (kept_annotators == 0) throw DataError("quality filtering removed every annotator");
    for (const auto& a : dataset.annotations())
        if (!drop[a.annotator]) b.add_annotation(sample_map[a.sample], annotator_map[a.annotator], a.label);
    result.dataset = std::move(b).build();
    return result;
}

}  // namespace opinion_audit
