#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "secagg/rng.hpp"

namespace secagg {

/// User (u,v): v-th user of server u. Zero-based everywhere in code; rendered
/// one-based in labels, JSON and logs to match the usual protocol notation.
struct UserId {
    std::size_t u = 0;
    std::size_t v = 0;
    auto operator<=>(const UserId&) const = default;
};

using ColludingSet = std::vector<UserId>;  // kept sorted

/// Split of a colluding set relative to server k: members at server k itself
/// (t1), servers other than k whose entire user group colludes (u2, with
/// their users t2), and the remainder (t3).
struct ColluderPartition {
    ColludingSet t1;
    std::vector<std::size_t> u2;
    ColludingSet t2;
    ColludingSet t3;
};

inline ColluderPartition partition_colluders(const ColludingSet& members, std::size_t k,
                                             std::size_t U, std::size_t V) {
    ColluderPartition p;
    std::vector<std::size_t> per_server(U, 0);
    for (const auto& m : members) {
        if (m.u >= U || m.v >= V) throw std::invalid_argument("partition_colluders: user out of range");
        ++per_server[m.u];
    }
    for (std::size_t u = 0; u < U; ++u)
        if (u != k && per_server[u] == V) p.u2.push_back(u);
    for (const auto& m : members) {
        if (m.u == k) {
            p.t1.push_back(m);
        } else if (per_server[m.u] == V) {
            p.t2.push_back(m);
        } else {
            p.t3.push_back(m);
        }
    }
    return p;
}

inline unsigned __int128 binomial128(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

/// Number of colluding sets of size at most max_t among U*V users.
inline unsigned __int128 count_colluding_sets(std::size_t num_users, std::size_t max_t) {
    unsigned __int128 total = 0;
    for (std::size_t t = 0; t <= max_t && t <= num_users; ++t) total += binomial128(num_users, t);
    return total;
}

/// Visits every colluding set with |set| <= max_t, sizes ascending and
/// members in lexicographic order within each size. Deterministic.
inline void for_each_colluding_set(std::size_t U, std::size_t V, std::size_t max_t,
                                   const std::function<void(const ColludingSet&)>& fn) {
    const std::size_t n = U * V;
    std::vector<UserId> users;
    users.reserve(n);
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t v = 0; v < V; ++v) users.push_back({u, v});

    for (std::size_t t = 0; t <= max_t && t <= n; ++t) {
        std::vector<std::size_t> comb(t);
        for (std::size_t i = 0; i < t; ++i) comb[i] = i;
        while (true) {
            ColludingSet set;
            set.reserve(t);
            for (auto i : comb) set.push_back(users[i]);
            fn(set);
            if (t == 0) break;
            std::size_t i = t;
            while (i > 0 && comb[i - 1] == n - t + i - 1) --i;
            if (i == 0) break;
            ++comb[i - 1];
            for (std::size_t j = i; j < t; ++j) comb[j] = comb[j - 1] + 1;
        }
    }
}

/// Uniform draw over all colluding sets of size <= max_t.
inline ColludingSet sample_colluding_set(std::size_t U, std::size_t V, std::size_t max_t, Rng& rng) {
    const std::size_t n = U * V;
    unsigned __int128 total = count_colluding_sets(n, max_t);
    if (total > static_cast<unsigned __int128>(~0ull))
        throw std::invalid_argument("sample_colluding_set: set space exceeds 2^64");
    std::uint64_t r = rng.uniform(static_cast<std::uint64_t>(total));
    std::size_t t = 0;
    for (; t <= max_t; ++t) {
        std::uint64_t c = static_cast<std::uint64_t>(binomial128(n, t));
        if (r < c) break;
        r -= c;
    }
    auto idx = rng.subset(n, t);
    ColludingSet set;
    set.reserve(t);
    for (auto i : idx) set.push_back({i / V, i % V});
    return set;
}

}  // namespace secagg
