#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "secagg/colluders.hpp"
#include "secagg/entropy.hpp"
#include "secagg/matrix.hpp"
#include "secagg/rng.hpp"

namespace secagg {

/// One problem instance: U servers, V users per server, at most T colluding
/// users, symbol alphabet F_q, and the master seed all randomness derives from.
struct SystemParams {
    std::uint64_t U = 0;
    std::uint64_t V = 0;
    std::uint64_t T = 0;
    std::uint64_t q = 0;
    std::uint64_t seed = 0;

    void validate() const {
        if (U < 3) throw std::invalid_argument("SystemParams: at least 3 servers are required");
        if (V < 1) throw std::invalid_argument("SystemParams: at least 1 user per server is required");
        if (T > U * V) throw std::invalid_argument("SystemParams: T cannot exceed the user population");
        PrimeField check(q);  // validates primality and range
        (void)check;
    }

    std::size_t num_users() const { return static_cast<std::size_t>(U * V); }
    bool operator==(const SystemParams&) const = default;
};

/// min{U+V+T-2, UV-1}: the optimal source-key length per input symbol.
inline std::size_t optimal_source_key_length(std::uint64_t U, std::uint64_t V, std::uint64_t T) {
    if (U < 3) throw std::invalid_argument("optimal_source_key_length: requires U >= 3");
    if (V < 1) throw std::invalid_argument("optimal_source_key_length: requires V >= 1");
    return static_cast<std::size_t>(std::min(U + V + T - 2, U * V - 1));
}

/// Default field size when the caller does not pick one: the smallest prime
/// exceeding r_star * C(UV, r_star), the degree bound that makes random
/// coefficient tables valid with positive probability.
inline std::uint64_t default_modulus(std::uint64_t U, std::uint64_t V, std::uint64_t T) {
    const std::size_t r = optimal_source_key_length(U, V, T);
    unsigned __int128 bound = binomial128(static_cast<std::size_t>(U * V), r) * r;
    if (bound >= PrimeField::kMaxModulus)
        throw std::invalid_argument("default_modulus: degree bound exceeds the supported field range");
    return next_prime_above(static_cast<std::uint64_t>(bound));
}

/// The UV coefficient vectors h_{u,v} in F_q^{r_star} that define every
/// individual key as a linear combination of the source key. Rows are stored
/// in (u,v) lexicographic order. Structural shape is enforced here; the
/// zero-sum and independence properties are checked by validate_table (tables
/// loaded from files or mutated by tests may violate them).
struct CoefficientTable {
    SystemParams params;
    std::size_t r_star = 0;
    FieldMatrix h;

    CoefficientTable(SystemParams p, std::size_t r, FieldMatrix rows)
        : params(p), r_star(r), h(std::move(rows)) {
        params.validate();
        if (h.rows() != params.num_users() || h.cols() != r_star)
            throw std::invalid_argument("CoefficientTable: row grid does not match (UV, r_star)");
        if (h.field().modulus() != params.q)
            throw std::invalid_argument("CoefficientTable: field does not match params.q");
    }

    PrimeField field() const { return h.field(); }
    std::size_t row_index(std::size_t u, std::size_t v) const {
        if (u >= params.U || v >= params.V)
            throw std::invalid_argument("CoefficientTable: user index out of range");
        return u * params.V + v;
    }
    std::span<const std::uint64_t> row(std::size_t u, std::size_t v) const {
        return h.row(row_index(u, v));
    }

    /// s_u = sum_v h_{u,v}, one row per server.
    FieldMatrix row_sums() const {
        const PrimeField F = field();
        FieldMatrix s(F, params.U, r_star);
        for (std::size_t u = 0; u < params.U; ++u)
            for (std::size_t v = 0; v < params.V; ++v)
                for (std::size_t j = 0; j < r_star; ++j)
                    s.set(u, j, F.add(s.get(u, j), h.get(row_index(u, v), j)));
        return s;
    }

    bool zero_sum_holds() const {
        const PrimeField F = field();
        for (std::size_t j = 0; j < r_star; ++j) {
            std::uint64_t acc = 0;
            for (std::size_t i = 0; i < h.rows(); ++i) acc = F.add(acc, h.get(i, j));
            if (acc != 0) return false;
        }
        return true;
    }

    bool operator==(const CoefficientTable& o) const {
        return params == o.params && r_star == o.r_star && h == o.h;
    }
};

/// Layout of the source vector induced by a table: UV input coordinates
/// followed by r_star source-key coordinates.
inline SourceLayout scheme_layout(const CoefficientTable& t) {
    return SourceLayout{t.params.num_users(), t.r_star};
}

namespace detail {
inline std::string user_label(std::size_t u, std::size_t v) {
    return "(" + std::to_string(u + 1) + "," + std::to_string(v + 1) + ")";
}
}  // namespace detail

/// W_{u,v}: selector of one input coordinate.
inline LinearVariable input_variable(const CoefficientTable& t, std::size_t u, std::size_t v) {
    const SourceLayout layout = scheme_layout(t);
    return coordinate_selector(t.field(), layout, layout.input_col(t.row_index(u, v)),
                               "W" + detail::user_label(u, v));
}

/// N_j: selector of one source-key coordinate.
inline LinearVariable source_symbol_variable(const CoefficientTable& t, std::size_t j) {
    const SourceLayout layout = scheme_layout(t);
    if (j >= t.r_star) throw std::invalid_argument("source_symbol_variable: index out of range");
    return coordinate_selector(t.field(), layout, layout.key_col(j), "N" + std::to_string(j + 1));
}

/// Z_{u,v} = h_{u,v} Z_Sigma^T as a map over the source vector.
inline LinearVariable key_variable(const CoefficientTable& t, std::size_t u, std::size_t v) {
    const SourceLayout layout = scheme_layout(t);
    FieldMatrix m(t.field(), 1, layout.total());
    auto r = t.row(u, v);
    for (std::size_t j = 0; j < t.r_star; ++j) m.set(0, layout.key_col(j), r[j]);
    return LinearVariable(std::move(m), layout, "Z" + detail::user_label(u, v));
}

/// X_{u,v} = W_{u,v} + Z_{u,v}.
inline LinearVariable message_variable(const CoefficientTable& t, std::size_t u, std::size_t v) {
    const SourceLayout layout = scheme_layout(t);
    FieldMatrix m(t.field(), 1, layout.total());
    m.set(0, layout.input_col(t.row_index(u, v)), 1);
    auto r = t.row(u, v);
    for (std::size_t j = 0; j < t.r_star; ++j) m.set(0, layout.key_col(j), r[j]);
    return LinearVariable(std::move(m), layout, "X" + detail::user_label(u, v));
}

/// Y_u = sum_v X_{u,v}.
inline LinearVariable broadcast_variable(const CoefficientTable& t, std::size_t u) {
    const SourceLayout layout = scheme_layout(t);
    const PrimeField F = t.field();
    FieldMatrix m(F, 1, layout.total());
    for (std::size_t v = 0; v < t.params.V; ++v) {
        m.set(0, layout.input_col(t.row_index(u, v)), 1);
        auto r = t.row(u, v);
        for (std::size_t j = 0; j < t.r_star; ++j)
            m.set(0, layout.key_col(j), F.add(m.get(0, layout.key_col(j)), r[j]));
    }
    return LinearVariable(std::move(m), layout, "Y(" + std::to_string(u + 1) + ")");
}

/// sum over all users of W_{u,v}: the value the protocol reveals on purpose.
inline LinearVariable sum_inputs_variable(const CoefficientTable& t) {
    const SourceLayout layout = scheme_layout(t);
    FieldMatrix m(t.field(), 1, layout.total());
    for (std::size_t i = 0; i < layout.num_inputs; ++i) m.set(0, layout.input_col(i), 1);
    return LinearVariable(std::move(m), layout, "SumW");
}

// ---------------------------------------------------------------------------
// Table validation
// ---------------------------------------------------------------------------

/// One vector of the key plan: an individual key row h_{u,v} or a server row
/// sum s_u.
struct PlanVector {
    bool is_row_sum = false;
    std::size_t u = 0;
    std::size_t v = 0;  // unused for row sums
    bool operator==(const PlanVector&) const = default;

    std::string label() const {
        return is_row_sum ? "s(" + std::to_string(u + 1) + ")" : "h" + detail::user_label(u, v);
    }
};

namespace detail {

inline FieldMatrix plan_rows(const CoefficientTable& t, const FieldMatrix& sums,
                             const std::vector<PlanVector>& items) {
    FieldMatrix m(t.field(), items.size(), t.r_star);
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto src = items[i].is_row_sum ? sums.row(items[i].u) : t.row(items[i].u, items[i].v);
        for (std::size_t j = 0; j < t.r_star; ++j) m.set(i, j, src[j]);
    }
    return m;
}

/// Generic (formal) rank of a set of plan vectors: its size minus the number
/// of independent linear relations forced by the construction alone, namely
/// s_u = sum_v h_{u,v} and the global zero sum. A relation
/// sum_u a_u*(s_u - sum_v h_{u,v}) + b*sum h_{u,v} is supported inside the
/// set iff a_u = 0 wherever s_u is absent and a_u = b wherever some key of
/// server u is absent, which reduces the count to the closed form below.
inline std::size_t generic_deficiency(const std::vector<PlanVector>& items, std::size_t U,
                                      std::size_t V) {
    std::vector<bool> has_sum(U, false);
    std::vector<std::size_t> keys(U, 0);
    for (const auto& it : items) {
        if (it.is_row_sum)
            has_sum[it.u] = true;
        else
            ++keys[it.u];
    }
    std::size_t both = 0;      // servers with the row sum and every key present
    bool missing_ok = true;    // every server with a missing key has its row sum present
    for (std::size_t u = 0; u < U; ++u) {
        const bool full = keys[u] == V;
        if (full && has_sum[u]) ++both;
        if (!full && !has_sum[u]) missing_ok = false;
    }
    return both + (missing_ok ? 1 : 0);
}

inline std::size_t generic_rank(const std::vector<PlanVector>& items, std::size_t U, std::size_t V) {
    return items.size() - generic_deficiency(items, U, V);
}

/// Shrinks a collection whose numeric rank fell below its generic rank to a
/// minimal witness with the same defect.
inline std::vector<PlanVector> minimize_witness(const CoefficientTable& t, const FieldMatrix& sums,
                                                std::vector<PlanVector> items) {
    const std::size_t U = t.params.U, V = t.params.V;
    bool shrunk = true;
    while (shrunk) {
        shrunk = false;
        for (std::size_t i = 0; i < items.size(); ++i) {
            std::vector<PlanVector> cand = items;
            cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(i));
            if (rank(plan_rows(t, sums, cand)) < generic_rank(cand, U, V)) {
                items = std::move(cand);
                shrunk = true;
                break;
            }
        }
    }
    return items;
}

}  // namespace detail

struct TableValidation {
    bool ok = true;
    bool zero_sum_ok = true;
    std::optional<std::size_t> bad_column;  // first column whose keys do not cancel
    /// On rank failure: a minimal set of plan vectors whose rank falls below
    /// its generic value, plus the (k, colluders) check that exposed it (k is
    /// absent for pure key-set failures).
    std::vector<PlanVector> witness;
    std::optional<std::size_t> failing_server;
    ColludingSet failing_colluders;

    std::string witness_label() const {
        if (!zero_sum_ok)
            return "zero sum violated in column " + std::to_string(*bad_column + 1);
        std::string s = "{";
        for (std::size_t i = 0; i < witness.size(); ++i)
            s += (i ? ", " : "") + witness[i].label();
        return s + "}";
    }
};

/// The operational independence condition: exactly the rank identities the
/// collusion-security argument consumes. After a structural zero-sum check,
/// for every server k and every colluding set 𝒯 with |𝒯| <= T:
///   (a) the collection {s_u : u outside {k} and the fully-colluded servers}
///       ∪ {h_{k,v} : all v} ∪ {h_{u,v} : (u,v) in 𝒯} carries exactly one
///       linear dependence (the zero sum), i.e. has rank (size - 1);
///   (b) the colluders' own key rows are independent, rank = |𝒯| (minus one
///       only in the degenerate case where 𝒯 is the whole population).
/// Both targets equal the generic rank of the collection, so a valid table is
/// one that behaves like a generic realization on every collection the proof
/// touches. Blanket subset independence is deliberately not required: it
/// fails for every zero-sum table and for the hand-built example tables.
inline TableValidation validate_table(const CoefficientTable& t) {
    const std::size_t U = t.params.U, V = t.params.V;
    const FieldMatrix sums = t.row_sums();
    TableValidation result;

    const PrimeField F = t.field();
    for (std::size_t j = 0; j < t.r_star; ++j) {
        std::uint64_t acc = 0;
        for (std::size_t u = 0; u < U; ++u) acc = F.add(acc, sums.get(u, j));
        if (acc != 0) {
            result.ok = false;
            result.zero_sum_ok = false;
            result.bad_column = j;
            return result;
        }
    }

    auto check = [&](const std::vector<PlanVector>& items, std::size_t k_or_npos,
                     const ColludingSet& set) {
        const std::size_t target = detail::generic_rank(items, U, V);
        if (rank(detail::plan_rows(t, sums, items)) == target) return true;
        result.ok = false;
        result.witness = detail::minimize_witness(t, sums, items);
        if (k_or_npos != static_cast<std::size_t>(-1)) result.failing_server = k_or_npos;
        result.failing_colluders = set;
        return false;
    };

    bool done = false;
    for_each_colluding_set(U, V, static_cast<std::size_t>(t.params.T),
                           [&](const ColludingSet& set) {
        if (done) return;
        // (b) colluder keys
        std::vector<PlanVector> keys;
        keys.reserve(set.size());
        for (const auto& m : set) keys.push_back({false, m.u, m.v});
        if (!keys.empty() && !check(keys, static_cast<std::size_t>(-1), set)) { done = true; return; }
        // (a) per-server collections
        for (std::size_t k = 0; k < U && !done; ++k) {
            const ColluderPartition part = partition_colluders(set, k, U, V);
            std::set<std::size_t> full(part.u2.begin(), part.u2.end());
            std::vector<PlanVector> items;
            for (std::size_t u = 0; u < U; ++u)
                if (u != k && !full.contains(u)) items.push_back({true, u, 0});
            for (std::size_t v = 0; v < V; ++v) items.push_back({false, k, v});
            for (const auto& m : set)
                if (m.u != k) items.push_back({false, m.u, m.v});
            if (!check(items, k, set)) done = true;
        }
    });
    return result;
}

/// Generation failure: the retry budget ran out before a valid table showed
/// up, typically because q is too small for the independence condition.
class GenerationError : public std::runtime_error {
public:
    GenerationError(std::uint64_t q, std::size_t attempts)
        : std::runtime_error("generate_table: no valid coefficient table found over F_" +
                             std::to_string(q) + " after " + std::to_string(attempts) +
                             " attempts; try a larger prime field (the degree bound "
                             "r_star*C(UV,r_star) is always sufficient)"),
          modulus(q), attempts(attempts) {}
    std::uint64_t modulus;
    std::size_t attempts;
};

struct GeneratedTable {
    CoefficientTable table;
    std::size_t attempts_used;
};

/// Samples h_{u,v} i.i.d. uniform for every (u,v) except the last user, sets
/// the last row to minus the sum of the others so all keys cancel in the
/// global aggregate, and retries until validate_table passes. Deterministic
/// for a fixed (params, seed): all draws come from the "keygen" stream.
inline GeneratedTable generate_table(const SystemParams& params, std::size_t max_attempts = 1000) {
    params.validate();
    const std::size_t r = optimal_source_key_length(params.U, params.V, params.T);
    const PrimeField F(params.q);
    Rng rng = derive_stream(params.seed, "keygen");

    for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
        FieldMatrix h(F, params.num_users(), r);
        for (std::size_t i = 0; i + 1 < params.num_users(); ++i)
            for (std::size_t j = 0; j < r; ++j) h.set(i, j, rng.uniform(params.q));
        for (std::size_t j = 0; j < r; ++j) {
            std::uint64_t acc = 0;
            for (std::size_t i = 0; i + 1 < params.num_users(); ++i) acc = F.add(acc, h.get(i, j));
            h.set(params.num_users() - 1, j, F.neg(acc));
        }
        CoefficientTable table(params, r, std::move(h));
        if (validate_table(table).ok) return {std::move(table), attempt};
    }
    throw GenerationError(params.q, max_attempts);
}

/// The (U,V,T) = (3,2,0) construction over F_11 with keys
/// N1, N2, N3, N1+2N2+3N3, N1+3N2+4N3, -(3N1+6N2+8N3).
inline CoefficientTable example1_table() {
    SystemParams p{3, 2, 0, 11, 0};
    FieldMatrix h = FieldMatrix::from_rows(PrimeField(11), {
        {1, 0, 0},
        {0, 1, 0},
        {0, 0, 1},
        {1, 2, 3},
        {1, 3, 4},
        {8, 5, 3},  // -(3,6,8) mod 11
    });
    return CoefficientTable(p, 3, std::move(h));
}

/// The (U,V,T) = (3,3,2) construction over F_17: six unit vectors, then
/// (1,2,...,6), (1,3,...,7), and minus their running sum. Note: verify flags
/// this table as insecure for its stated collusion level (see assurance).
inline CoefficientTable example2_table() {
    SystemParams p{3, 3, 2, 17, 0};
    FieldMatrix h = FieldMatrix::from_rows(PrimeField(17), {
        {1, 0, 0, 0, 0, 0},
        {0, 1, 0, 0, 0, 0},
        {0, 0, 1, 0, 0, 0},
        {0, 0, 0, 1, 0, 0},
        {0, 0, 0, 0, 1, 0},
        {0, 0, 0, 0, 0, 1},
        {1, 2, 3, 4, 5, 6},
        {1, 3, 4, 5, 6, 7},
        {14, 11, 9, 7, 5, 3},  // -(3,6,8,10,12,14) mod 17
    });
    return CoefficientTable(p, 6, std::move(h));
}

}  // namespace secagg
