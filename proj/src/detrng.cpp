#include "spikebench/detrng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spikebench::detrng {

SeedPath SeedPath::child(std::string label, std::uint64_t index) const {
    SeedPath out = *this;
    out.segments_.emplace_back(std::move(label), index);
    return out;
}

StreamState SeedPath::resolve() const noexcept {
    // Empty path resolves to the FNV offset basis so it is still well defined.
    std::uint64_t state = kFnvOffsetBasis;
    bool first = true;
    for (const auto& [label, index] : segments_) {
        const std::uint64_t keyed = first ? hash_label(label) : state ^ hash_label(label);
        state = derive_child(keyed, index).state();
        first = false;
    }
    return StreamState{state};
}

std::string SeedPath::to_string() const {
    std::string out;
    for (const auto& [label, index] : segments_) {
        if (!out.empty()) out += '/';
        out += label;
        out += ':';
        out += std::to_string(index);
    }
    return out;
}

bool bernoulli(StreamState& stream, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("bernoulli: probability " + std::to_string(p) +
                                    " outside [0,1] (check rate * dt)");
    }
    return stream.next_uniform() < p;
}

std::vector<std::size_t> shuffle(StreamState& stream, std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(stream.next_uniform() * static_cast<double>(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace spikebench::detrng
