#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "secagg/keyplan.hpp"
#include "secagg/rng.hpp"

namespace secagg {

/// The UV user inputs, each a length-L vector over F_q. Grid is (u,v)
/// lexicographic, matching the coefficient table.
struct Inputs {
    std::size_t L = 1;
    std::vector<std::vector<std::uint64_t>> w;  // UV entries of length L

    static Inputs zeros(const SystemParams& p, std::size_t L) {
        return Inputs{L, std::vector<std::vector<std::uint64_t>>(p.num_users(),
                                                                 std::vector<std::uint64_t>(L, 0))};
    }
    static Inputs random(const SystemParams& p, std::size_t L, Rng& rng) {
        Inputs in = zeros(p, L);
        for (auto& row : in.w)
            for (auto& x : row) x = rng.uniform(p.q);
        return in;
    }
};

/// L independent draws of the source key (N_1,...,N_{r_star}); slice l
/// occupies positions [l*r_star, (l+1)*r_star).
struct SourceKeySample {
    std::size_t r_star = 0;
    std::size_t L = 1;
    std::vector<std::uint64_t> n;

    static SourceKeySample random(std::size_t r_star, std::size_t L, std::uint64_t q, Rng& rng) {
        SourceKeySample s{r_star, L, std::vector<std::uint64_t>(r_star * L, 0)};
        for (auto& x : s.n) x = rng.uniform(q);
        return s;
    }
    std::vector<std::uint64_t> slice(std::size_t l) const {
        return {n.begin() + static_cast<std::ptrdiff_t>(l * r_star),
                n.begin() + static_cast<std::ptrdiff_t>((l + 1) * r_star)};
    }
};

struct TranscriptEvent {
    int hop = 1;
    std::string sender;
    std::vector<std::string> receivers;
    std::vector<std::uint64_t> payload;
};

/// Concrete field values of one protocol run: first-hop messages x, broadcast
/// messages y, the per-server decodes, and the ordered event log.
struct Transcript {
    SystemParams params;
    std::size_t L = 1;
    std::vector<std::vector<std::uint64_t>> x;        // UV messages of length L
    std::vector<std::vector<std::uint64_t>> y;        // U broadcasts of length L
    std::vector<std::vector<std::uint64_t>> decoded;  // U decoded sums
    std::vector<TranscriptEvent> events;
};

/// X = W + Z symbol-wise.
inline std::vector<std::uint64_t> user_encode(const PrimeField& F,
                                              const std::vector<std::uint64_t>& w,
                                              const std::vector<std::uint64_t>& z) {
    if (w.size() != z.size()) throw std::invalid_argument("user_encode: length mismatch");
    std::vector<std::uint64_t> x(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) x[i] = F.add(F.reduce(w[i]), F.reduce(z[i]));
    return x;
}

/// Y = sum of the V first-hop messages, symbol-wise.
inline std::vector<std::uint64_t> server_aggregate(const PrimeField& F,
                                                   const std::vector<std::vector<std::uint64_t>>& xs) {
    if (xs.empty()) throw std::invalid_argument("server_aggregate: no messages");
    std::vector<std::uint64_t> y(xs.front().size(), 0);
    for (const auto& x : xs) {
        if (x.size() != y.size()) throw std::invalid_argument("server_aggregate: length mismatch");
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = F.add(y[i], F.reduce(x[i]));
    }
    return y;
}

/// Own first-hop messages plus the other servers' broadcasts; by the zero-sum
/// key property this equals the global input sum.
inline std::vector<std::uint64_t> server_decode(const PrimeField& F,
                                                const std::vector<std::vector<std::uint64_t>>& own_xs,
                                                const std::vector<std::vector<std::uint64_t>>& others_ys) {
    auto acc = server_aggregate(F, own_xs);
    for (const auto& y : others_ys) {
        if (y.size() != acc.size()) throw std::invalid_argument("server_decode: length mismatch");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = F.add(acc[i], F.reduce(y[i]));
    }
    return acc;
}

/// The trusted dealer: turns one source-key sample into the per-user keys
/// z_{u,v}[l] = h_{u,v} . n_slice(l).
inline std::vector<std::vector<std::uint64_t>> derive_user_keys(const CoefficientTable& t,
                                                                const SourceKeySample& sample) {
    if (sample.r_star != t.r_star)
        throw std::invalid_argument("derive_user_keys: source key width mismatch");
    const PrimeField F = t.field();
    std::vector<std::vector<std::uint64_t>> keys(t.params.num_users(),
                                                 std::vector<std::uint64_t>(sample.L, 0));
    for (std::size_t l = 0; l < sample.L; ++l) {
        const auto n = sample.slice(l);
        for (std::size_t i = 0; i < t.params.num_users(); ++i) {
            std::uint64_t acc = 0;
            for (std::size_t j = 0; j < t.r_star; ++j) acc = F.add(acc, F.mul(t.h.get(i, j), n[j]));
            keys[i][l] = acc;
        }
    }
    return keys;
}

namespace detail {
inline std::string server_label(std::size_t u) { return "server(" + std::to_string(u + 1) + ")"; }
}  // namespace detail

/// Runs the two-hop protocol: encode, aggregate, broadcast, decode at every
/// server. The event log is deterministic: hop 1 in (u,v) lexicographic
/// order, hop 2 in server order.
inline Transcript run_protocol(const CoefficientTable& t, const Inputs& inputs,
                               const SourceKeySample& sample) {
    const SystemParams& p = t.params;
    if (inputs.w.size() != p.num_users())
        throw std::invalid_argument("run_protocol: input grid does not match UV");
    if (sample.L != inputs.L || sample.r_star != t.r_star)
        throw std::invalid_argument("run_protocol: source key sample shape mismatch");
    for (const auto& w : inputs.w)
        if (w.size() != inputs.L) throw std::invalid_argument("run_protocol: ragged inputs");

    const PrimeField F = t.field();
    Transcript tr;
    tr.params = p;
    tr.L = inputs.L;

    const auto keys = derive_user_keys(t, sample);
    tr.x.reserve(p.num_users());
    for (std::size_t u = 0; u < p.U; ++u) {
        for (std::size_t v = 0; v < p.V; ++v) {
            const std::size_t i = t.row_index(u, v);
            tr.x.push_back(user_encode(F, inputs.w[i], keys[i]));
            tr.events.push_back({1, "user" + detail::user_label(u, v),
                                 {detail::server_label(u)}, tr.x.back()});
        }
    }

    tr.y.reserve(p.U);
    for (std::size_t u = 0; u < p.U; ++u) {
        std::vector<std::vector<std::uint64_t>> own;
        for (std::size_t v = 0; v < p.V; ++v) own.push_back(tr.x[t.row_index(u, v)]);
        tr.y.push_back(server_aggregate(F, own));
        std::vector<std::string> receivers;
        for (std::size_t k = 0; k < p.U; ++k)
            if (k != u) receivers.push_back(detail::server_label(k));
        tr.events.push_back({2, detail::server_label(u), std::move(receivers), tr.y.back()});
    }

    for (std::size_t k = 0; k < p.U; ++k) {
        std::vector<std::vector<std::uint64_t>> own, others;
        for (std::size_t v = 0; v < p.V; ++v) own.push_back(tr.x[t.row_index(k, v)]);
        for (std::size_t u = 0; u < p.U; ++u)
            if (u != k) others.push_back(tr.y[u]);
        tr.decoded.push_back(server_decode(F, own, others));
    }
    return tr;
}

/// Direct global sum of the inputs; independent of keys and transcript.
inline std::vector<std::uint64_t> global_input_sum(const PrimeField& F, const Inputs& inputs) {
    std::vector<std::uint64_t> s(inputs.L, 0);
    for (const auto& w : inputs.w)
        for (std::size_t i = 0; i < inputs.L; ++i) s[i] = F.add(s[i], F.reduce(w[i]));
    return s;
}

}  // namespace secagg
