#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "spikebench/detrng.hpp"

using namespace spikebench::detrng;

namespace {

// Independent reference implementations.
std::uint64_t fnv1a_reference(const char* s) {
    std::uint64_t h = 14695981039346656037ULL;
    while (*s != '\0') {
        h = (h ^ static_cast<unsigned char>(*s++)) * 1099511628211ULL;
    }
    return h;
}

std::uint64_t mix_reference(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct SplitMix64Reference {
    std::uint64_t x;
    std::uint64_t next() { return mix_reference(x += 0x9e3779b97f4a7c15ULL); }
};

}  // namespace

TEST_SUITE("detrng") {

TEST_CASE("hash_label matches FNV-1a") {
    CHECK(hash_label("") == 0xcbf29ce484222325ULL);
    CHECK(hash_label("a") == fnv1a_reference("a"));
    CHECK(hash_label("a") == 0xaf63dc4c8601ec8cULL);
    for (const char* s : {"split", "digits-hybrid", "encode-train", "model", "the quick brown fox"}) {
        CHECK(hash_label(s) == fnv1a_reference(s));
        CHECK(hash_label(s) == hash_label(s));
    }
}

TEST_CASE("splitmix64 sequence matches reference") {
    StreamState s{0};
    SplitMix64Reference ref{0};
    CHECK(s.next_u64() == 0xe220a8397b1dcdafULL);
    CHECK(ref.next() == 0xe220a8397b1dcdafULL);
    for (int i = 0; i < 1000; ++i) CHECK(s.next_u64() == ref.next());

    StreamState a{12345};
    SplitMix64Reference b{12345};
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next());
}

TEST_CASE("derive_child formula and distinctness") {
    const std::uint64_t p = hash_label("test");
    CHECK(derive_child(p, 0) != derive_child(p, 1));
    CHECK(derive_child(p, 0).state() == mix_reference(p ^ 0x9e3779b97f4a7c15ULL));
    CHECK(derive_child(p, 5).state() == mix_reference(p ^ (6 * 0x9e3779b97f4a7c15ULL)));
    CHECK(derive_child(p, 7) == derive_child(p, 7));

    std::unordered_set<std::uint64_t> seen;
    seen.reserve(1'000'001);
    for (std::uint64_t i = 0; i <= 1'000'000; ++i) seen.insert(derive_child(p, i).state());
    CHECK(seen.size() == 1'000'001);
}

TEST_CASE("next_uniform range, mean and determinism") {
    StreamState s = derive_child(hash_label("uniform"), 0);
    StreamState copy = s;
    CHECK(s.next_uniform() == copy.next_uniform());
    double sum = 0.0;
    bool in_range = true;
    for (int i = 0; i < 1'000'000; ++i) {
        const double u = s.next_uniform();
        in_range = in_range && u >= 0.0 && u < 1.0;
        sum += u;
    }
    CHECK(in_range);
    CHECK(std::abs(sum / 1e6 - 0.5) <= 0.002);
}

TEST_CASE("next_uniform uses the top 53 bits") {
    StreamState s{99};
    StreamState raw{99};
    for (int i = 0; i < 100; ++i) {
        CHECK(s.next_uniform() == static_cast<double>(raw.next_u64() >> 11) / 9007199254740992.0);
    }
}

TEST_CASE("bernoulli") {
    StreamState s = derive_child(hash_label("bernoulli"), 3);
    bool any_true = false;
    bool any_false = false;
    for (int i = 0; i < 10000; ++i) {
        any_true = any_true || bernoulli(s, 0.0);
        any_false = any_false || !bernoulli(s, 1.0);
    }
    CHECK_FALSE(any_true);
    CHECK_FALSE(any_false);

    std::size_t hits = 0;
    for (int i = 0; i < 1'000'000; ++i) hits += bernoulli(s, 0.2) ? 1 : 0;
    CHECK(std::abs(static_cast<double>(hits) / 1e6 - 0.2) <= 0.0012);

    CHECK_THROWS_AS(bernoulli(s, -0.01), std::invalid_argument);
    CHECK_THROWS_AS(bernoulli(s, 1.01), std::invalid_argument);
}

TEST_CASE("shuffle") {
    StreamState s{42};
    CHECK(shuffle(s, 0).empty());
    CHECK(shuffle(s, 1) == std::vector<std::size_t>{0});

    StreamState a{7};
    StreamState b{7};
    CHECK(shuffle(a, 10) == shuffle(b, 10));

    for (std::size_t n : {2u, 5u, 17u, 1000u}) {
        auto perm = shuffle(s, n);
        std::sort(perm.begin(), perm.end());
        std::vector<std::size_t> iota(n);
        std::iota(iota.begin(), iota.end(), 0);
        CHECK(perm == iota);
    }
}

TEST_CASE("SeedPath resolution") {
    const SeedPath p{{"digits-hybrid", 0}, {"split", 2026}, {"model", 23}};
    CHECK(p.resolve() == p.resolve());
    CHECK(p.child("epoch", 4).resolve() == p.child("epoch", 4).resolve());
    CHECK(p.child("epoch", 4).resolve() != p.child("epoch", 5).resolve());
    CHECK(p.child("init").resolve() != p.child("train-order").resolve());
    const SeedPath q{{"digits-hybrid", 0}, {"split", 2026}, {"model", 37}};
    CHECK(p.resolve() != q.resolve());
    CHECK(p.child("x").segments().size() == 4);
    CHECK(p.segments().size() == 3);
    CHECK(SeedPath{}.resolve().state() == kFnvOffsetBasis);

    // First segment: derive_child(hash(label), index); later: derive_child(state ^ hash(label), index).
    const auto first = derive_child(hash_label("digits-hybrid"), 0);
    const auto second = derive_child(first.state() ^ hash_label("split"), 2026);
    const auto third = derive_child(second.state() ^ hash_label("model"), 23);
    CHECK(p.resolve() == third);
    CHECK_FALSE(p.to_string().empty());
}

}  // TEST_SUITE
