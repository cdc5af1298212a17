#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace secagg {

/// SplitMix64 stream. Chosen over std::mt19937_64 + distributions because the
/// whole pipeline must be reproducible byte-for-byte from a documented seed,
/// independent of standard-library internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform draw in [0, bound) by rejection sampling; unbiased.
    std::uint64_t uniform(std::uint64_t bound) {
        const std::uint64_t limit = bound * ((~0ull) / bound);
        std::uint64_t x;
        do { x = next(); } while (x >= limit);
        return x % bound;
    }

    /// Uniform subset of size k from {0,...,n-1}, returned sorted.
    std::vector<std::size_t> subset(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(uniform(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

private:
    std::uint64_t state_;
};

/// Every consumer of randomness derives its own stream from the master seed
/// and a documented stream name ("keygen", "inputs", "source-key",
/// "security-sampling", "lemma-sampling", "oracle", "mutations"), so fixing
/// the seed fixes every downstream artifact.
inline Rng derive_stream(std::uint64_t master_seed, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    Rng mix(master_seed ^ h);
    mix.next();
    return Rng(mix.next());
}

}  // namespace secagg
