#include "opinion_audit/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "opinion_audit/csv.hpp"
#include "opinion_audit/errors.hpp"

namespace opinion_audit {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Row {
    std::string sample_id;
    std::string text;
    std::string annotator_id;
    std::string label;
    std::optional<Demographics> demographics;
};

/// Collects rows, checks cross-row consistency, then hands everything to the Builder.
class RowCollector {
public:
    explicit RowCollector(const Manifest& manifest) : manifest_(manifest) {}

    void add(Row row, std::size_t line) {
        if (row.sample_id.empty()) throw ParseError("empty sample_id", line);
        if (row.annotator_id.empty()) throw ParseError("empty annotator_id", line);

        auto [s, new_sample] = sample_index_.try_emplace(row.sample_id, samples_.size());
        if (new_sample) {
            samples_.push_back({row.sample_id, row.text});
        } else if (samples_[s->second].text != row.text) {
            throw SchemaError(fmt::format("line {}: sample \"{}\" has conflicting text", line, row.sample_id));
        }

        auto [a, new_annotator] = annotator_index_.try_emplace(row.annotator_id, annotators_.size());
        if (new_annotator) {
            annotators_.push_back({row.annotator_id, row.demographics});
        } else if (row.demographics) {
            auto& known = annotators_[a->second].demographics;
            if (!known) {
                known = row.demographics;
            } else if (*known != *row.demographics) {
                throw SchemaError(
                    fmt::format("line {}: annotator \"{}\" has conflicting demographics", line, row.annotator_id));
            }
        }

        const std::string key = row.sample_id + '\x1f' + row.annotator_id;
        if (auto [it, inserted] = pair_lines_.try_emplace(key, line); !inserted) {
            throw SchemaError(fmt::format("line {}: duplicate annotation for (sample \"{}\", annotator \"{}\"), first seen on line {}",
                                          line, row.sample_id, row.annotator_id, it->second));
        }
        if (std::find(manifest_.labels.begin(), manifest_.labels.end(), row.label) == manifest_.labels.end()) {
            throw SchemaError(fmt::format("line {}: label \"{}\" is not in the declared label set", line, row.label));
        }
        annotations_.push_back({row.sample_id, row.annotator_id, row.label});
    }

    AnnotatedDataset build() {
        AnnotatedDataset::Builder b(manifest_.labels, manifest_.demographics);
        for (auto& s : samples_) b.add_sample(s.id, s.text);
        for (auto& a : annotators_) b.add_annotator(a.id, a.demographics);
        for (auto& [s, a, l] : annotations_) b.add_annotation(s, a, l);
        return std::move(b).build();
    }

private:
    struct PendingAnnotation {
        std::string sample, annotator, label;
    };
    const Manifest& manifest_;
    std::vector<Sample> samples_;
    std::vector<Annotator> annotators_;
    std::vector<PendingAnnotation> annotations_;
    std::unordered_map<std::string, std::size_t> sample_index_;
    std::unordered_map<std::string, std::size_t> annotator_index_;
    std::unordered_map<std::string, std::size_t> pair_lines_;
};

std::string required_string(const ordered_json& obj, const char* field, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end()) throw ParseError(fmt::format("missing field \"{}\"", field), line);
    if (!it->is_string()) throw ParseError(fmt::format("field \"{}\" must be a string", field), line);
    return it->get<std::string>();
}

AnnotatedDataset ingest_jsonl(std::istream& in, const Manifest& manifest) {
    RowCollector rows(manifest);
    std::string text;
    for (std::size_t line = 1; std::getline(in, text); ++line) {
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;
        ordered_json obj;
        try {
            obj = ordered_json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(fmt::format("malformed JSON: {}", e.what()), line);
        }
        if (!obj.is_object()) throw ParseError("row is not a JSON object", line);

        Row row;
        row.sample_id = required_string(obj, "sample_id", line);
        row.text = required_string(obj, "text", line);
        row.annotator_id = required_string(obj, "annotator_id", line);
        row.label = required_string(obj, "label", line);
        if (auto d = obj.find("demographics"); d != obj.end() && !d->is_null()) {
            if (!d->is_object()) throw ParseError("field \"demographics\" must be an object", line);
            Demographics demo;
            for (auto& [k, v] : d->items()) {
                if (v.is_null()) continue;
                if (!v.is_string()) throw ParseError(fmt::format("demographic \"{}\" must be a string", k), line);
                demo.emplace(k, v.get<std::string>());
            }
            row.demographics = std::move(demo);
        }
        rows.add(std::move(row), line);
    }
    return rows.build();
}

AnnotatedDataset ingest_csv(std::istream& in, const Manifest& manifest) {
    CsvReader reader(in);
    auto header = reader.next();
    if (!header) throw ParseError("empty CSV file", 1);
    if (!header->empty() && header->front().starts_with("\xEF\xBB\xBF")) header->front().erase(0, 3);

    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header->size(); ++i) {
        if (!column.emplace((*header)[i], i).second)
            throw ParseError(fmt::format("duplicate column \"{}\"", (*header)[i]), 1);
    }
    for (const char* required : {"sample_id", "text", "annotator_id", "label"})
        if (!column.contains(required)) throw ParseError(fmt::format("missing column \"{}\"", required), 1);

    std::vector<std::pair<std::string, std::size_t>> demo_columns;
    for (std::size_t i = 0; i < header->size(); ++i) {
        const std::string& name = (*header)[i];
        if (name == "sample_id" || name == "text" || name == "annotator_id" || name == "label") continue;
        const bool declared = std::any_of(manifest.demographics.begin(), manifest.demographics.end(),
                                          [&](const DemographicAttribute& d) { return d.name == name; });
        if (!declared) throw SchemaError(fmt::format("CSV column \"{}\" is not a declared demographic attribute", name));
        demo_columns.emplace_back(name, i);
    }

    RowCollector rows(manifest);
    while (auto record = reader.next()) {
        const std::size_t line = reader.record_line();
        if (record->size() == 1 && record->front().empty()) continue;
        if (record->size() != header->size())
            throw ParseError(fmt::format("expected {} fields, found {}", header->size(), record->size()), line);
        Row row;
        row.sample_id = (*record)[column["sample_id"]];
        row.text = (*record)[column["text"]];
        row.annotator_id = (*record)[column["annotator_id"]];
        row.label = (*record)[column["label"]];
        Demographics demo;
        for (const auto& [name, idx] : demo_columns)
            if (!(*record)[idx].empty()) demo.emplace(name, (*record)[idx]);
        if (!demo.empty()) row.demographics = std::move(demo);
        rows.add(std::move(row), line);
    }
    return rows.build();
}

}  // namespace

Manifest parse_manifest(std::string_view json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(fmt::format("malformed manifest: {}", e.what()), 0);
    }
    if (!doc.is_object()) throw ParseError("manifest must be a JSON object", 0);
    Manifest m;
    auto labels = doc.find("labels");
    if (labels == doc.end() || !labels->is_array()) throw SchemaError("manifest: \"labels\" must be an array");
    for (const auto& l : *labels) {
        if (!l.is_string()) throw SchemaError("manifest: labels must be strings");
        m.labels.push_back(l.get<std::string>());
    }
    if (m.labels.empty()) throw SchemaError("manifest: empty label set");
    if (auto d = doc.find("demographics"); d != doc.end() && !d->is_null()) {
        if (!d->is_object()) throw SchemaError("manifest: \"demographics\" must be an object");
        for (auto& [name, values] : d->items()) {
            if (!values.is_array()) throw SchemaError(fmt::format("manifest: vocabulary of \"{}\" must be an array", name));
            DemographicAttribute attr{name, {}};
            for (const auto& v : values) {
                if (!v.is_string()) throw SchemaError(fmt::format("manifest: values of \"{}\" must be strings", name));
                attr.values.push_back(v.get<std::string>());
            }
            m.demographics.push_back(std::move(attr));
        }
    }
    return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_file(path));
}

std::string manifest_json(const Manifest& manifest) {
    ordered_json doc;
    doc["labels"] = manifest.labels;
    ordered_json demo = ordered_json::object();
    for (const auto& attr : manifest.demographics) demo[attr.name] = attr.values;
    doc["demographics"] = demo;
    return doc.dump(2) + "\n";
}

Manifest manifest_of(const AnnotatedDataset& dataset) {
    return {dataset.label_set(), dataset.demographic_vocab()};
}

InputFormat format_from_path(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".csv") return InputFormat::csv;
    if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return InputFormat::jsonl;
    throw UsageError(fmt::format("cannot infer format of {} (expected .jsonl or .csv)", path.string()));
}

AnnotatedDataset ingest(std::istream& in, const Manifest& manifest, InputFormat format) {
    return format == InputFormat::jsonl ? ingest_jsonl(in, manifest) : ingest_csv(in, manifest);
}

AnnotatedDataset ingest(const std::filesystem::path& path, const Manifest& manifest, InputFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
    return ingest(in, manifest, format);
}

void write_jsonl(const AnnotatedDataset& dataset, std::ostream& out) {
    for (const auto& a : dataset.annotations()) {
        const auto& sample = dataset.samples()[a.sample];
        const auto& annotator = dataset.annotators()[a.annotator];
        ordered_json row;
        row["sample_id"] = sample.id;
        row["text"] = sample.text;
        row["annotator_id"] = annotator.id;
        row["label"] = dataset.label_set()[a.label];
        if (annotator.demographics) {
            ordered_json demo = ordered_json::object();
            for (const auto& [k, v] : *annotator.demographics) demo[k] = v;
            row["demographics"] = demo;
        }
        out << row.dump() << '\n';
    }
}

void write_csv(const AnnotatedDataset& dataset, std::ostream& out) {
    out << "sample_id,text,annotator_id,label";
    for (const auto& attr : dataset.demographic_vocab()) out << ',' << csv_escape(attr.name);
    out << '\n';
    for (const auto& a : dataset.annotations()) {
        const auto& sample = dataset.samples()[a.sample];
        out << csv_escape(sample.id) << ',' << csv_escape(sample.text) << ','
            << csv_escape(dataset.annotators()[a.annotator].id) << ',' << csv_escape(dataset.label_set()[a.label]);
        for (const auto& attr : dataset.demographic_vocab())
            out << ',' << csv_escape(dataset.demographic_value(a.annotator, attr.name).value_or(""));
        out << '\n';
    }
}

}  // namespace opinion_audit
