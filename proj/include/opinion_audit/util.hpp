#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace opinion_audit {

/// Seeded generator with platform-independent helpers. The standard distributions are
/// implementation-defined, so everything that feeds an artifact goes through these.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). `bound` must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    bool bernoulli(double p) { return uniform() < p; }

    /// Index drawn proportionally to non-negative `weights` (not necessarily normalized).
    std::size_t weighted(std::span<const double> weights);

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// 64-bit FNV-1a over bytes, starting from `basis` (the standard offset basis by default).
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// splitmix64 finalizer; good avalanche for bucket selection.
std::uint64_t mix64(std::uint64_t x);

std::string hex64(std::uint64_t value);

/// Correctly rounded sum of `values` (Shewchuk partials, as in Python's math.fsum).
/// The result does not depend on the order of the inputs.
double exact_sum(std::span<const double> values);

/// exact_sum(values) / size; 0 for an empty span.
double exact_mean(std::span<const double> values);

/// Thread cap from OPINION_AUDIT_THREADS (>= 1), else hardware concurrency.
std::size_t thread_budget();

/// Runs fn(0..n-1) on up to thread_budget() threads. Each index must write only its own output.
/// The first exception thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Largest-remainder apportionment of `total` units according to `weights`.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights);

/// Formats a double with `digits` decimals, never printing "-0.00".
std::string fixed(double value, int digits);

}  // namespace opinion_audit
