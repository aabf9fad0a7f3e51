#include "opinion_audit/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

#include <fmt/format.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

namespace {

std::uint64_t pair_key(std::size_t sample, std::size_t annotator) {
    return (static_cast<std::uint64_t>(sample) << 32) | static_cast<std::uint64_t>(annotator);
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// AnnotatedDataset

std::optional<std::size_t> AnnotatedDataset::find_sample(std::string_view id) const {
    auto it = sample_ids_.find(std::string(id));
    if (it == sample_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> AnnotatedDataset::find_annotator(std::string_view id) const {
    auto it = annotator_ids_.find(std::string(id));
    if (it == annotator_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> AnnotatedDataset::find_label(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

std::span<const std::size_t> AnnotatedDataset::annotations_of_sample(std::size_t sample) const {
    return {by_sample_.data() + sample_offsets_.at(sample), by_sample_.data() + sample_offsets_.at(sample + 1)};
}

std::span<const std::size_t> AnnotatedDataset::annotations_of_annotator(std::size_t annotator) const {
    return {by_annotator_.data() + annotator_offsets_.at(annotator),
            by_annotator_.data() + annotator_offsets_.at(annotator + 1)};
}

std::optional<std::string> AnnotatedDataset::demographic_value(std::size_t annotator,
                                                               std::string_view attribute) const {
    const auto& record = annotators_.at(annotator).demographics;
    if (!record) return std::nullopt;
    auto it = record->find(std::string(attribute));
    if (it == record->end()) return std::nullopt;
    return it->second;
}

void AnnotatedDataset::index() {
    sample_ids_.clear();
    annotator_ids_.clear();
    for (std::size_t i = 0; i < samples_.size(); ++i) sample_ids_.emplace(samples_[i].id, i);
    for (std::size_t i = 0; i < annotators_.size(); ++i) annotator_ids_.emplace(annotators_[i].id, i);

    // Counting sort keeps insertion order within each bucket.
    auto bucket = [this](auto key_of, std::size_t n_keys, std::vector<std::size_t>& order,
                         std::vector<std::size_t>& offsets) {
        offsets.assign(n_keys + 1, 0);
        for (const auto& a : annotations_) ++offsets[key_of(a) + 1];
        std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
        order.assign(annotations_.size(), 0);
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t i = 0; i < annotations_.size(); ++i) order[cursor[key_of(annotations_[i])]++] = i;
    };
    bucket([](const Annotation& a) { return a.sample; }, samples_.size(), by_sample_, sample_offsets_);
    bucket([](const Annotation& a) { return a.annotator; }, annotators_.size(), by_annotator_,
           annotator_offsets_);
}

AnnotatedDataset AnnotatedDataset::subset_samples(std::span<const std::size_t> sample_indices) const {
    AnnotatedDataset out;
    out.labels_ = labels_;
    out.vocab_ = vocab_;
    out.annotators_ = annotators_;
    std::vector<std::size_t> remap(samples_.size(), samples_.size());
    for (std::size_t idx : sample_indices) {
        if (idx >= samples_.size()) throw std::out_of_range("subset_samples: sample index out of range");
        if (remap[idx] != samples_.size()) throw std::invalid_argument("subset_samples: repeated sample index");
        remap[idx] = out.samples_.size();
        out.samples_.push_back(samples_[idx]);
    }
    for (const auto& a : annotations_)
        if (remap[a.sample] != samples_.size()) out.annotations_.push_back({remap[a.sample], a.annotator, a.label});
    out.index();
    return out;
}

// ---------------------------------------------------------------------------------------------
// Builder

AnnotatedDataset::Builder::Builder(std::vector<std::string> label_set, std::vector<DemographicAttribute> vocab) {
    if (label_set.empty()) throw SchemaError("empty label set");
    for (std::size_t i = 0; i < label_set.size(); ++i) {
        if (!label_ids_.emplace(label_set[i], i).second)
            throw SchemaError(fmt::format("duplicate label \"{}\" in label set", label_set[i]));
    }
    std::unordered_set<std::string> names;
    for (const auto& attr : vocab) {
        if (!names.insert(attr.name).second)
            throw SchemaError(fmt::format("duplicate demographic attribute \"{}\"", attr.name));
        std::unordered_set<std::string> values(attr.values.begin(), attr.values.end());
        if (values.size() != attr.values.size())
            throw SchemaError(fmt::format("duplicate value in vocabulary of \"{}\"", attr.name));
        if (attr.values.empty())
            throw SchemaError(fmt::format("empty vocabulary for demographic attribute \"{}\"", attr.name));
    }
    data_.labels_ = std::move(label_set);
    data_.vocab_ = std::move(vocab);
}

std::size_t AnnotatedDataset::Builder::add_sample(std::string id, std::string text) {
    if (text.empty()) throw SchemaError(fmt::format("sample \"{}\" has empty text", id));
    const std::size_t idx = data_.samples_.size();
    if (!sample_ids_.emplace(id, idx).second) throw SchemaError(fmt::format("duplicate sample id \"{}\"", id));
    data_.samples_.push_back({std::move(id), std::move(text)});
    return idx;
}

std::size_t AnnotatedDataset::Builder::add_annotator(std::string id, std::optional<Demographics> demographics) {
    if (demographics) {
        for (const auto& [attr, value] : *demographics) {
            auto it = std::find_if(data_.vocab_.begin(), data_.vocab_.end(),
                                   [&](const DemographicAttribute& d) { return d.name == attr; });
            if (it == data_.vocab_.end())
                throw SchemaError(fmt::format("annotator \"{}\": undeclared demographic attribute \"{}\"", id, attr));
            if (std::find(it->values.begin(), it->values.end(), value) == it->values.end())
                throw SchemaError(fmt::format("annotator \"{}\": value \"{}\" not in vocabulary of \"{}\"", id,
                                              value, attr));
        }
    }
    const std::size_t idx = data_.annotators_.size();
    if (!annotator_ids_.emplace(id, idx).second)
        throw SchemaError(fmt::format("duplicate annotator id \"{}\"", id));
    data_.annotators_.push_back({std::move(id), std::move(demographics)});
    return idx;
}

void AnnotatedDataset::Builder::add_annotation(std::string_view sample_id, std::string_view annotator_id,
                                               std::string_view label) {
    auto s = sample_ids_.find(std::string(sample_id));
    if (s == sample_ids_.end()) throw SchemaError(fmt::format("annotation references unknown sample \"{}\"", sample_id));
    auto a = annotator_ids_.find(std::string(annotator_id));
    if (a == annotator_ids_.end())
        throw SchemaError(fmt::format("annotation references unknown annotator \"{}\"", annotator_id));
    auto l = label_ids_.find(std::string(label));
    if (l == label_ids_.end())
        throw SchemaError(fmt::format("label \"{}\" (sample \"{}\", annotator \"{}\") is not in the label set", label,
                                      sample_id, annotator_id));
    add_annotation(s->second, a->second, l->second);
}

void AnnotatedDataset::Builder::add_annotation(std::size_t sample, std::size_t annotator, std::size_t label) {
    if (sample >= data_.samples_.size()) throw SchemaError("annotation references unknown sample index");
    if (annotator >= data_.annotators_.size()) throw SchemaError("annotation references unknown annotator index");
    if (label >= data_.labels_.size()) throw SchemaError("annotation label index outside the label set");
    data_.annotations_.push_back({sample, annotator, label});
}

AnnotatedDataset AnnotatedDataset::Builder::build() && {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(data_.annotations_.size());
    std::vector<std::size_t> per_sample(data_.samples_.size(), 0);
    for (const auto& a : data_.annotations_) {
        if (!seen.insert(pair_key(a.sample, a.annotator)).second)
            throw SchemaError(fmt::format("duplicate annotation for (sample \"{}\", annotator \"{}\")",
                                          data_.samples_[a.sample].id, data_.annotators_[a.annotator].id));
        ++per_sample[a.sample];
    }
    for (std::size_t i = 0; i < per_sample.size(); ++i)
        if (per_sample[i] == 0) throw SchemaError(fmt::format("sample \"{}\" has no annotations", data_.samples_[i].id));
    data_.index();
    return std::move(data_);
}

// ---------------------------------------------------------------------------------------------
// Statistics

std::vector<SampleStats> majority_vote(const AnnotatedDataset& dataset) {
    const std::size_t k = dataset.label_set().size();
    std::vector<SampleStats> out(dataset.samples().size());
    for (std::size_t s = 0; s < out.size(); ++s) {
        SampleStats& st = out[s];
        st.sample = s;
        st.histogram.assign(k, 0);
        for (std::size_t idx : dataset.annotations_of_sample(s)) ++st.histogram[dataset.annotations()[idx].label];
        st.total = dataset.annotations_of_sample(s).size();
        // max_element returns the first maximum, i.e. the earliest label in label_set order.
        auto top = std::max_element(st.histogram.begin(), st.histogram.end());
        st.majority_label = static_cast<std::size_t>(top - st.histogram.begin());
        st.is_tie = std::count(st.histogram.begin(), st.histogram.end(), *top) > 1;
        st.ambiguity = ambiguity(st);
    }
    return out;
}

double ambiguity(const SampleStats& stats) {
    const std::size_t k = stats.histogram.size();
    if (stats.total == 0) throw std::invalid_argument("ambiguity: sample has no annotations");
    if (k < 2) return 0.0;
    const std::size_t top = *std::max_element(stats.histogram.begin(), stats.histogram.end());
    const std::size_t rest = stats.total - top;
    // rest/total * k/(k-1), evaluated as one division of integers
    return static_cast<double>(rest * k) / static_cast<double>(stats.total * (k - 1));
}

double popularity(const Annotation& annotation, const SampleStats& stats) {
    if (annotation.sample != stats.sample) throw std::invalid_argument("popularity: annotation from another sample");
    return static_cast<double>(stats.histogram.at(annotation.label)) / static_cast<double>(stats.total);
}

std::vector<AnnotatorProfile> compute_adr(const AnnotatedDataset& dataset, std::span<const SampleStats> mv) {
    if (mv.size() != dataset.samples().size()) throw std::invalid_argument("compute_adr: stats from another dataset");
    std::vector<AnnotatorProfile> out;
    for (std::size_t u = 0; u < dataset.annotators().size(); ++u) {
        const auto own = dataset.annotations_of_annotator(u);
        if (own.empty()) continue;
        AnnotatorProfile p;
        p.annotator = u;
        p.annotator_id = dataset.annotators()[u].id;
        p.n_annotations = own.size();
        for (std::size_t idx : own) {
            const Annotation& a = dataset.annotations()[idx];
            if (a.label != mv[a.sample].majority_label) ++p.n_disagreements;
        }
        p.adr = static_cast<double>(p.n_disagreements) / static_cast<double>(p.n_annotations);
        out.push_back(std::move(p));
    }
    return out;
}

TieSummary summarize_ties(std::span<const SampleStats> mv) {
    TieSummary t;
    std::size_t total = 0;
    for (const auto& s : mv) {
        total += s.total;
        if (s.is_tie) {
            ++t.tie_samples;
            t.tie_annotations += s.total;
        }
    }
    t.annotation_fraction = total ? static_cast<double>(t.tie_annotations) / static_cast<double>(total) : 0.0;
    return t;
}

std::string fingerprint(const AnnotatedDataset& dataset) {
    constexpr char unit = '\x1f';
    constexpr char record = '\x1e';
    std::uint64_t h = fnv1a64("opinion-audit/dataset/v1");
    auto feed = [&h](std::string_view s) { h = fnv1a64(s, h); };

    for (const auto& l : dataset.label_set()) {
        feed(l);
        feed(std::string_view(&unit, 1));
    }
    feed(std::string_view(&record, 1));

    using Row = std::tuple<std::string_view, std::string_view, std::string_view, std::string_view>;
    std::vector<Row> rows;
    rows.reserve(dataset.annotations().size());
    for (const auto& a : dataset.annotations()) {
        rows.emplace_back(dataset.samples()[a.sample].id, dataset.annotators()[a.annotator].id,
                          dataset.label_set()[a.label], dataset.samples()[a.sample].text);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [s, u, l, text] : rows) {
        for (std::string_view part : {s, u, l, text}) {
            feed(part);
            feed(std::string_view(&unit, 1));
        }
        feed(std::string_view(&record, 1));
    }

    std::vector<std::size_t> order(dataset.annotators().size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return dataset.annotators()[a].id < dataset.annotators()[b].id; });
    for (std::size_t u : order) {
        const auto& ann = dataset.annotators()[u];
        if (!ann.demographics) continue;
        feed(ann.id);
        for (const auto& [k, v] : *ann.demographics) {
            feed(std::string_view(&unit, 1));
            feed(k);
            feed("=");
            feed(v);
        }
        feed(std::string_view(&record, 1));
    }
    return "fnv1a64:" + hex64(h);
}

}  // namespace opinion_audit
