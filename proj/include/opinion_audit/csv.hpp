#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace opinion_audit {

/// RFC 4180 reader: comma separated, double-quote quoting with "" escapes,
/// quoted fields may span lines. Accepts LF and CRLF.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. Throws ParseError on an unterminated quote.
    std::optional<std::vector<std::string>> next();

    /// 1-based line on which the last returned record started.
    std::size_t record_line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

/// Quotes a field when it contains a separator, quote, or line break.
std::string csv_escape(std::string_view field);

}  // namespace opinion_audit
