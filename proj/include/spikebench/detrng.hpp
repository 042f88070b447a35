#pragma once

// Deterministic, hierarchically derived random streams.
//
// Every stochastic choice in a run (split shuffles, epoch order, spike draws,
// prototype init) is taken from a stream resolved from a SeedPath such as
//   [("digits-hybrid",0), ("split",2026), ("model",23), ("encode-train",0),
//    ("epoch",4), ("sample",911)]
// so any single draw can be reproduced without replaying the others.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spikebench::detrng {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// FNV-1a over the bytes of `label`.
constexpr std::uint64_t hash_label(std::string_view label) noexcept {
    std::uint64_t h = kFnvOffsetBasis;
    for (unsigned char c : label) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

/// splitmix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// A splitmix64 generator. Plain value type; copying forks the sequence.
class StreamState {
public:
    constexpr StreamState() noexcept = default;
    constexpr explicit StreamState(std::uint64_t state) noexcept : state_(state) {}

    constexpr std::uint64_t state() const noexcept { return state_; }

    constexpr std::uint64_t next_u64() noexcept {
        state_ += kGoldenGamma;
        return mix64(state_);
    }

    /// Uniform in [0,1) with 53 bits of resolution.
    constexpr double next_uniform() noexcept {
        // The shifted value fits in 53 bits, so the signed conversion is exact.
        return static_cast<double>(static_cast<std::int64_t>(next_u64() >> 11)) * 0x1.0p-53;
    }

    friend constexpr bool operator==(const StreamState&, const StreamState&) = default;

private:
    std::uint64_t state_ = 0;
};

/// Child stream for (parent, index); distinct indices give distinct children.
constexpr StreamState derive_child(std::uint64_t parent, std::uint64_t index) noexcept {
    return StreamState{mix64(parent ^ ((index + 1) * kGoldenGamma))};
}

inline StreamState derive_child(const StreamState& parent, std::uint64_t index) noexcept {
    return derive_child(parent.state(), index);
}

/// Ordered (label, index) pairs naming one stream.
class SeedPath {
public:
    using Segment = std::pair<std::string, std::uint64_t>;

    SeedPath() = default;
    SeedPath(std::initializer_list<Segment> segments) : segments_(segments) {}

    /// Returns a copy extended by one segment.
    SeedPath child(std::string label, std::uint64_t index = 0) const;

    const std::vector<Segment>& segments() const noexcept { return segments_; }

    /// Resolution is a pure function of the segments.
    StreamState resolve() const noexcept;

    std::string to_string() const;

    friend bool operator==(const SeedPath&, const SeedPath&) = default;

private:
    std::vector<Segment> segments_;
};

/// true iff next_uniform() < p. Throws std::invalid_argument when p is outside [0,1].
bool bernoulli(StreamState& stream, double p);

/// Fisher-Yates permutation of 0..n-1 drawn from `stream`.
std::vector<std::size_t> shuffle(StreamState& stream, std::size_t n);

}  // namespace spikebench::detrng
