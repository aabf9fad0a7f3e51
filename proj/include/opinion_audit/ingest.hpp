#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "opinion_audit/dataset.hpp"

namespace opinion_audit {

enum class InputFormat { jsonl, csv };

/// Sidecar declaring the label set and demographic vocabularies:
/// {"labels": [..], "demographics": {"age": [..], ...}}
struct Manifest {
    std::vector<std::string> labels;
    std::vector<DemographicAttribute> demographics;  // in declaration order
};

Manifest parse_manifest(std::string_view json_text);
Manifest read_manifest(const std::filesystem::path& path);
std::string manifest_json(const Manifest& manifest);
Manifest manifest_of(const AnnotatedDataset& dataset);

/// Picks the format from the file extension (.jsonl/.ndjson/.json -> jsonl, .csv -> csv).
InputFormat format_from_path(const std::filesystem::path& path);

/// Strict ingestion: malformed rows raise ParseError with the line number; duplicate
/// (sample, annotator) pairs, unknown labels, conflicting texts or demographics raise SchemaError.
AnnotatedDataset ingest(std::istream& in, const Manifest& manifest, InputFormat format);
AnnotatedDataset ingest(const std::filesystem::path& path, const Manifest& manifest, InputFormat format);

/// One JSON object per annotation, in annotation order.
void write_jsonl(const AnnotatedDataset& dataset, std::ostream& out);
void write_csv(const AnnotatedDataset& dataset, std::ostream& out);

}  // namespace opinion_audit
