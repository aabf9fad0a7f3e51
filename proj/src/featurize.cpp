#include "opinion_audit/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include <fmt/format.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

namespace {

bool is_separator(char32_t cp) {
    if (cp < 0x80) {
        const char c = static_cast<char>(cp);
        return !((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'));
    }
    return (cp >= 0x80 && cp <= 0xBF) ||     // Latin-1 controls, punctuation, symbols
           cp == 0xD7 || cp == 0xF7 ||       // multiplication and division signs
           (cp >= 0x2000 && cp <= 0x206F) ||  // general punctuation and spaces
           (cp >= 0x20A0 && cp <= 0x20CF) ||  // currency symbols
           (cp >= 0x3000 && cp <= 0x303F) ||  // CJK symbols and punctuation
           (cp >= 0xFE30 && cp <= 0xFE4F) || (cp >= 0xFF00 && cp <= 0xFF0F) || cp == 0xFEFF;
}

char32_t fold_case(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

/// Decodes one code point at `pos`, advancing it. Returns nullopt for an invalid sequence
/// (pos advances by one byte).
std::optional<char32_t> decode(std::string_view s, std::size_t& pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
        ++pos;
        return b0;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return std::nullopt;
    }
    if (pos + len > s.size()) {
        ++pos;
        return std::nullopt;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return std::nullopt;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    pos += len;
    return cp;
}

void add_text_features(std::string_view text, const FeatureSpec& spec, std::vector<Feature>& out) {
    std::map<std::uint32_t, double> counts;
    for (const auto& token : tokenize(text)) counts[token_bucket(token, spec)] += 1.0;
    double norm2 = 0.0;
    for (const auto& [_, c] : counts) norm2 += c * c;
    if (norm2 == 0.0) return;
    const double norm = std::sqrt(norm2);
    for (const auto& [idx, c] : counts) out.push_back({idx, c / norm});
}

}  // namespace

std::size_t FeatureSpec::width() const {
    std::size_t w = n_text_buckets;
    if (include_demographics)
        for (const auto& attr : demographic_vocab) w += attr.values.size() + 1;
    return w;
}

void FeatureSpec::validate() const {
    if (n_text_buckets < 2 || (n_text_buckets & (n_text_buckets - 1)) != 0)
        throw UsageError(fmt::format("n_text_buckets must be a power of two >= 2, got {}", n_text_buckets));
    if (n_text_buckets > (std::size_t{1} << 31)) throw UsageError("n_text_buckets too large");
}

std::string FeatureSpec::hash() const {
    std::string canon = fmt::format("buckets={};seed={};demo={};", n_text_buckets, hash_seed, include_demographics);
    if (include_demographics) {
        for (const auto& attr : demographic_vocab) {
            canon += attr.name + ":";
            for (const auto& v : attr.values) canon += v + '\x1f';
            canon += ';';
        }
    }
    return "fnv1a64:" + hex64(fnv1a64(canon));
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto cp = decode(text, pos);
        if (!cp || is_separator(*cp)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
            continue;
        }
        append_utf8(current, fold_case(*cp));
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::uint32_t token_bucket(std::string_view token, const FeatureSpec& spec) {
    const std::uint64_t h = mix64(fnv1a64(token, 0xcbf29ce484222325ULL ^ spec.hash_seed));
    return static_cast<std::uint32_t>(h & (spec.n_text_buckets - 1));
}

FeatureVector featurize_sample(std::string_view text, const FeatureSpec& spec) {
    FeatureVector v;
    v.width = spec.n_text_buckets;
    add_text_features(text, spec, v.entries);
    return v;
}

FeatureVector featurize_pair(std::string_view text, const std::optional<Demographics>& demographics,
                             const FeatureSpec& spec) {
    FeatureVector v;
    v.width = spec.width();
    add_text_features(text, spec, v.entries);
    if (!spec.include_demographics) return v;

    std::size_t offset = spec.n_text_buckets;
    for (const auto& attr : spec.demographic_vocab) {
        std::size_t slot = attr.values.size();  // unknown
        if (demographics) {
            if (auto it = demographics->find(attr.name); it != demographics->end()) {
                auto pos = std::find(attr.values.begin(), attr.values.end(), it->second);
                if (pos != attr.values.end()) slot = static_cast<std::size_t>(pos - attr.values.begin());
            }
        }
        v.entries.push_back({static_cast<std::uint32_t>(offset + slot), 1.0});
        offset += attr.values.size() + 1;
    }
    return v;
}

double collision_rate(std::span<const std::string> vocabulary, const FeatureSpec& spec) {
    std::unordered_set<std::string> distinct(vocabulary.begin(), vocabulary.end());
    if (distinct.empty()) return 0.0;
    std::unordered_set<std::uint32_t> buckets;
    for (const auto& t : distinct) buckets.insert(token_bucket(t, spec));
    return static_cast<double>(distinct.size() - buckets.size()) / static_cast<double>(distinct.size());
}

}  // namespace opinion_audit
