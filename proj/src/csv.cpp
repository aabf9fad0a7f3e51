#include "opinion_audit/csv.hpp"

#include "opinion_audit/errors.hpp"

namespace opinion_audit {

std::optional<std::vector<std::string>> CsvReader::next() {
    int c = in_.get();
    if (c == std::char_traits<char>::eof()) return std::nullopt;

    record_line_ = line_;
    std::vector<std::string> fields(1);
    bool quoted = false;
    bool field_started_quoted = false;
    for (;; c = in_.get()) {
        if (c == std::char_traits<char>::eof()) {
            if (quoted) throw ParseError("unterminated quoted field", record_line_);
            break;
        }
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    fields.back() += '"';
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line_;
                fields.back() += ch;
            }
            continue;
        }
        if (ch == '"' && fields.back().empty() && !field_started_quoted) {
            quoted = true;
            field_started_quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
            field_started_quoted = false;
        } else if (ch == '\r' && in_.peek() == '\n') {
            continue;
        } else if (ch == '\n') {
            ++line_;
            break;
        } else {
            fields.back() += ch;
        }
    }
    return fields;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace opinion_audit
