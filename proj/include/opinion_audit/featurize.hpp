#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opinion_audit/dataset.hpp"

namespace opinion_audit {

struct FeatureSpec {
    std::size_t n_text_buckets = std::size_t{1} << 18;
    std::vector<DemographicAttribute> demographic_vocab;
    bool include_demographics = false;
    std::uint64_t hash_seed = 0x6f70696e696f6eULL;

    /// n_text_buckets, plus (|values| + 1 unknown slot) per attribute when demographics are included.
    std::size_t width() const;
    /// Throws UsageError unless n_text_buckets is a power of two >= 2.
    void validate() const;
    /// Stable identifier of everything that affects the feature mapping.
    std::string hash() const;
};

struct Feature {
    std::uint32_t index;
    double value;
};

/// Sparse vector, entries sorted by index, all indices < width.
struct FeatureVector {
    std::vector<Feature> entries;
    std::size_t width = 0;
};

/// Lowercases and splits on every non-alphanumeric code point. ASCII and Latin-1 letters are
/// case-folded; other non-ASCII code points count as word characters except for the common
/// punctuation and space blocks. Invalid UTF-8 bytes act as separators.
std::vector<std::string> tokenize(std::string_view text);

/// Bucket of a token under the FeatureSpec seeded hash.
std::uint32_t token_bucket(std::string_view token, const FeatureSpec& spec);

/// Hashed bag of words, L2-normalized. Empty text gives the zero vector.
FeatureVector featurize_sample(std::string_view text, const FeatureSpec& spec);

/// featurize_sample plus, when spec.include_demographics, one one-hot block per attribute
/// (missing record, attribute, or out-of-vocabulary value -> the attribute's "unknown" slot).
FeatureVector featurize_pair(std::string_view text, const std::optional<Demographics>& demographics,
                             const FeatureSpec& spec);

/// Share of distinct tokens that land in a bucket already taken by another token.
double collision_rate(std::span<const std::string> vocabulary, const FeatureSpec& spec);

}  // namespace opinion_audit
