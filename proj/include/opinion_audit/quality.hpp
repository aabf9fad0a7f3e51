#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "opinion_audit/dataset.hpp"

namespace opinion_audit {

struct QualityScore {
    std::size_t annotator = 0;
    std::string annotator_id;
    double score = 0.0;
    std::size_t n_scored_samples = 0;
};

/// Leave-one-out label agreement: for each annotation, the share of the *other* annotators of
/// that sample who chose the same label; the score is the mean over the annotator's samples.
/// Samples the annotator labeled alone are skipped; annotators with nothing scorable are omitted.
/// Ordered by annotator index.
std::vector<QualityScore> annotator_quality(const AnnotatedDataset& dataset);

struct FilterResult {
    AnnotatedDataset dataset;
    std::vector<QualityScore> removed;  // annotators dropped, ordered by id
};

/// Removes every annotator scoring strictly below `threshold` together with their annotations,
/// then drops samples left without annotations. Unscored annotators are kept.
/// Throws UsageError for a threshold outside [0, 1] and DataError if nothing would remain.
FilterResult filter_annotators(const AnnotatedDataset& dataset, std::span<const QualityScore> scores,
                               double threshold);

}  // namespace opinion_audit
