#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "secagg/colluders.hpp"
#include "secagg/entropy.hpp"
#include "secagg/keyplan.hpp"

namespace secagg {

/// Cap on the number of source states an exhaustive enumeration may visit.
/// brute_entropy / brute_mi enumerate only the source coordinates their maps
/// actually touch (the untouched uniform coordinates marginalize out
/// exactly), so the charged count is q^(touched coordinates).
struct OracleBudget {
    std::uint64_t max_states = 2'000'000;
};

namespace detail {
inline std::string u128_str(unsigned __int128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v) { s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10))); v /= 10; }
    return s;
}

/// q^n saturated at the u128 maximum, so budget comparisons never wrap.
inline unsigned __int128 pow_states(std::uint64_t q, std::size_t n) {
    constexpr unsigned __int128 kMax = ~static_cast<unsigned __int128>(0);
    unsigned __int128 states = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (states > kMax / q) return kMax;
        states *= q;
    }
    return states;
}
}  // namespace detail

class BudgetExceededError : public std::runtime_error {
public:
    BudgetExceededError(unsigned __int128 required, std::uint64_t budget)
        : std::runtime_error("oracle: enumeration needs " + detail::u128_str(required) +
                             " states, budget is " + std::to_string(budget)),
          required_states(required) {}
    unsigned __int128 required_states;
};

/// Exact rational in log-q units. For linear maps of uniform symbols every
/// entropy is an integer; carrying the rational keeps the oracle honest about
/// that fact instead of assuming it.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw std::invalid_argument("Rational: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    bool is_integer() const { return den == 1; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        const __int128 n = static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den;
        const __int128 d = static_cast<__int128>(a.den) * b.den;
        return reduce128(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return a + Rational(-b.num, b.den);
    }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator==(std::int64_t v) const { return den == 1 && num == v; }

    std::string str() const {
        return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
    }

private:
    static Rational reduce128(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 a = n < 0 ? -n : n, b = d;
        while (b) { __int128 t = a % b; a = b; b = t; }
        if (a > 1) { n /= a; d /= a; }
        Rational r;
        r.num = static_cast<std::int64_t>(n);
        r.den = static_cast<std::int64_t>(d);
        return r;
    }
};

namespace detail {

struct U128Hash {
    std::size_t operator()(unsigned __int128 v) const {
        std::uint64_t x = static_cast<std::uint64_t>(v) ^ (static_cast<std::uint64_t>(v >> 64) * 0x9e3779b97f4a7c15ull);
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdull;
        x ^= x >> 33;
        return static_cast<std::size_t>(x);
    }
};

using CountMap = std::unordered_map<unsigned __int128, std::uint64_t, U128Hash>;

/// Joint distribution of the grouped variables' outputs, enumerated over the
/// touched source coordinates only. Returns the count map plus per-group bit
/// ranges inside the packed key.
struct JointCounts {
    CountMap counts;
    std::uint64_t total_states = 0;
    std::vector<std::pair<int, int>> group_bits;  // (offset, width) per group
};

inline JointCounts brute_joint(const std::vector<std::vector<LinearVariable>>& groups,
                               const OracleBudget& budget) {
    std::vector<const LinearVariable*> flat;
    for (const auto& g : groups)
        for (const auto& v : g) flat.push_back(&v);
    if (flat.empty()) throw std::invalid_argument("oracle: no variables");
    const SourceLayout layout = flat.front()->layout();
    const PrimeField F = flat.front()->map().field();
    const std::uint64_t q = F.modulus();
    for (const auto* v : flat) {
        if (v->layout() != layout) throw std::invalid_argument("oracle: variables use different layouts");
        if (v->map().field() != F) throw std::invalid_argument("oracle: variables use different fields");
    }

    std::vector<std::size_t> touched;
    for (std::size_t c = 0; c < layout.total(); ++c) {
        bool used = false;
        for (const auto* v : flat) {
            for (std::size_t r = 0; r < v->map().rows() && !used; ++r)
                used = v->map().get(r, c) != 0;
            if (used) break;
        }
        if (used) touched.push_back(c);
    }

    const unsigned __int128 states = detail::pow_states(q, touched.size());
    if (states > budget.max_states) throw BudgetExceededError(states, budget.max_states);

    const int sym_bits = std::max<int>(1, static_cast<int>(std::bit_width(q - 1)));
    std::size_t total_rows = 0;
    JointCounts out;
    for (const auto& g : groups) {
        std::size_t rows = 0;
        for (const auto& v : g) rows += v.map().rows();
        out.group_bits.emplace_back(static_cast<int>(total_rows) * sym_bits,
                                    static_cast<int>(rows) * sym_bits);
        total_rows += rows;
    }
    if (total_rows * static_cast<std::size_t>(sym_bits) > 120)
        throw std::invalid_argument("oracle: packed output exceeds 120 bits; reduce the collection");

    // Restrict each map row to the touched coordinates.
    std::vector<std::vector<std::uint64_t>> rows;
    rows.reserve(total_rows);
    for (const auto& g : groups)
        for (const auto& v : g)
            for (std::size_t r = 0; r < v.map().rows(); ++r) {
                std::vector<std::uint64_t> row(touched.size());
                for (std::size_t i = 0; i < touched.size(); ++i) row[i] = v.map().get(r, touched[i]);
                rows.push_back(std::move(row));
            }

    std::vector<std::uint64_t> src(touched.size(), 0);
    const std::uint64_t total = static_cast<std::uint64_t>(states);
    out.total_states = total;
    out.counts.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(total, 1u << 20)));
    for (std::uint64_t s = 0;; ++s) {
        unsigned __int128 key = 0;
        int shift = 0;
        for (const auto& row : rows) {
            std::uint64_t acc = 0;
            for (std::size_t i = 0; i < row.size(); ++i)
                if (row[i]) acc = F.add(acc, F.mul(row[i], src[i]));
            key |= static_cast<unsigned __int128>(acc) << shift;
            shift += sym_bits;
        }
        ++out.counts[key];
        if (s + 1 == total) break;
        for (std::size_t i = 0;; ++i) {  // odometer over touched coordinates
            if (++src[i] < q) break;
            src[i] = 0;
        }
    }
    return out;
}

/// Entropy in log-q units of a distribution given by state counts out of
/// `total` equally likely source states. Exact: every count must be a power
/// of q (true for linear maps), otherwise the log is irrational and the
/// oracle refuses rather than rounding.
inline Rational entropy_of_counts(const CountMap& counts, std::uint64_t q, std::uint64_t total) {
    auto q_exponent = [q](std::uint64_t c) {
        int m = 0;
        while (c % q == 0) { c /= q; ++m; }
        if (c != 1) throw std::invalid_argument("oracle: outcome count is not a power of q");
        return m;
    };
    const int t = q_exponent(total);
    std::int64_t weighted = 0;  // sum of count * log_q(count)
    for (const auto& [key, c] : counts) {
        (void)key;
        weighted += static_cast<std::int64_t>(c) * q_exponent(c);
    }
    return Rational(static_cast<std::int64_t>(t) * static_cast<std::int64_t>(total) - weighted,
                    static_cast<std::int64_t>(total));
}

inline CountMap marginal(const CountMap& joint, const std::vector<std::pair<int, int>>& bits,
                         const std::vector<std::size_t>& keep) {
    CountMap out;
    out.reserve(joint.size());
    for (const auto& [key, c] : joint) {
        unsigned __int128 k = 0;
        int shift = 0;
        for (auto g : keep) {
            const auto [off, width] = bits[g];
            const unsigned __int128 mask = width >= 128
                ? ~static_cast<unsigned __int128>(0)
                : ((static_cast<unsigned __int128>(1) << width) - 1);
            k |= ((key >> off) & mask) << shift;
            shift += width;
        }
        out[k] += c;
    }
    return out;
}

}  // namespace detail

/// Exhaustive joint entropy of the variables, in log-q units.
inline Rational brute_entropy(const std::vector<LinearVariable>& vars,
                              const OracleBudget& budget = {}) {
    if (vars.empty()) return Rational(0);
    auto joint = detail::brute_joint({vars}, budget);
    const std::uint64_t q = vars.front().map().field().modulus();
    return detail::entropy_of_counts(joint.counts, q, joint.total_states);
}

/// Exhaustive I(a; b | given) from a single enumerated joint distribution.
inline Rational brute_mi(const std::vector<LinearVariable>& a, const std::vector<LinearVariable>& b,
                         const std::vector<LinearVariable>& given, const OracleBudget& budget = {}) {
    if (a.empty() || b.empty()) throw std::invalid_argument("brute_mi: empty variable list");
    std::vector<std::vector<LinearVariable>> groups = {a, b};
    if (!given.empty()) groups.push_back(given);
    auto joint = detail::brute_joint(groups, budget);
    const std::uint64_t q = a.front().map().field().modulus();
    const std::uint64_t total = joint.total_states;

    std::vector<std::size_t> g_idx;
    if (!given.empty()) g_idx.push_back(2);
    auto H = [&](std::vector<std::size_t> keep) {
        return detail::entropy_of_counts(detail::marginal(joint.counts, joint.group_bits, keep), q,
                                         total);
    };
    std::vector<std::size_t> ag = {0}, bg = {1}, abg = {0, 1};
    ag.insert(ag.end(), g_idx.begin(), g_idx.end());
    bg.insert(bg.end(), g_idx.begin(), g_idx.end());
    abg.insert(abg.end(), g_idx.begin(), g_idx.end());
    Rational hg = given.empty() ? Rational(0) : H(g_idx);
    return H(ag) + H(bg) - H(abg) - hg;
}

struct BruteSecurityResult {
    bool ok = true;
    std::optional<std::size_t> failing_server;
    ColludingSet failing_colluders;
    std::uint64_t states_per_enumeration = 0;
};

/// Definitionally faithful security check: for every server k and every
/// colluding set, conditioned on (sum of inputs, colluders' inputs and keys),
/// the multiset of possible views must be identical across all consistent
/// assignments of the remaining inputs. Independent of the entropy formulas.
inline BruteSecurityResult brute_security_check(const CoefficientTable& t,
                                                const OracleBudget& budget = {},
                                                std::optional<std::size_t> max_t_override = {}) {
    const SystemParams& p = t.params;
    const PrimeField F = t.field();
    const std::uint64_t q = p.q;
    const std::size_t UV = p.num_users(), r = t.r_star;
    const std::size_t max_t = max_t_override.value_or(static_cast<std::size_t>(p.T));

    const unsigned __int128 need = detail::pow_states(q, UV + r);
    if (need > budget.max_states) throw BudgetExceededError(need, budget.max_states);
    const std::uint64_t w_states = [&] {
        std::uint64_t x = 1;
        for (std::size_t i = 0; i < UV; ++i) x *= q;
        return x;
    }();
    const std::uint64_t n_states = [&] {
        std::uint64_t x = 1;
        for (std::size_t i = 0; i < r; ++i) x *= q;
        return x;
    }();

    const int sym_bits = std::max<int>(1, static_cast<int>(std::bit_width(q - 1)));
    const std::size_t view_rows = static_cast<std::size_t>(p.V + p.U - 1);
    if (view_rows * static_cast<std::size_t>(sym_bits) > 120)
        throw std::invalid_argument("brute_security_check: view does not fit the packing");

    BruteSecurityResult result;
    result.states_per_enumeration = static_cast<std::uint64_t>(need);

    // Pre-unpack all n assignments once.
    std::vector<std::vector<std::uint64_t>> n_vals(n_states, std::vector<std::uint64_t>(r));
    for (std::uint64_t s = 0; s < n_states; ++s) {
        std::uint64_t x = s;
        for (std::size_t j = 0; j < r; ++j) { n_vals[s][j] = x % q; x /= q; }
    }

    bool done = false;
    for_each_colluding_set(p.U, p.V, max_t, [&](const ColludingSet& set) {
        if (done) return;
        for (std::size_t k = 0; k < p.U && !done; ++k) {
            // Key contribution of each view row, evaluated per n once.
            std::vector<std::vector<std::uint64_t>> key_rows;  // view_rows x r
            for (std::size_t v = 0; v < p.V; ++v) {
                auto row = t.row(k, v);
                key_rows.emplace_back(row.begin(), row.end());
            }
            const FieldMatrix sums = t.row_sums();
            for (std::size_t u = 0; u < p.U; ++u)
                if (u != k) {
                    auto row = sums.row(u);
                    key_rows.emplace_back(row.begin(), row.end());
                }
            std::vector<std::vector<std::uint64_t>> n_contrib(n_states,
                                                              std::vector<std::uint64_t>(view_rows));
            std::vector<std::uint64_t> zt_packed(n_states);
            for (std::uint64_t s = 0; s < n_states; ++s) {
                for (std::size_t i = 0; i < view_rows; ++i) {
                    std::uint64_t acc = 0;
                    for (std::size_t j = 0; j < r; ++j)
                        acc = F.add(acc, F.mul(key_rows[i][j], n_vals[s][j]));
                    n_contrib[s][i] = acc;
                }
                std::uint64_t packed = 0;
                for (const auto& m : set) {
                    std::uint64_t acc = 0;
                    auto row = t.row(m.u, m.v);
                    for (std::size_t j = 0; j < r; ++j) acc = F.add(acc, F.mul(row[j], n_vals[s][j]));
                    packed = packed * q + acc;
                }
                zt_packed[s] = packed;
            }

            // conditioning class -> signature (sorted multiset of views)
            std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>,
                     std::vector<unsigned __int128>> classes;
            std::vector<std::uint64_t> w(UV, 0);
            for (std::uint64_t ws = 0;; ++ws) {
                std::uint64_t sum_w = 0;
                for (auto x : w) sum_w = F.add(sum_w, x);
                std::uint64_t wt_packed = 0;
                for (const auto& m : set) wt_packed = wt_packed * q + w[m.u * p.V + m.v];
                std::vector<std::uint64_t> w_contrib(view_rows, 0);
                for (std::size_t v = 0; v < p.V; ++v) w_contrib[v] = w[k * p.V + v];
                std::size_t i = p.V;
                for (std::size_t u = 0; u < p.U; ++u)
                    if (u != k) {
                        std::uint64_t acc = 0;
                        for (std::size_t v = 0; v < p.V; ++v) acc = F.add(acc, w[u * p.V + v]);
                        w_contrib[i++] = acc;
                    }

                std::map<std::uint64_t, std::vector<unsigned __int128>> per_z;
                for (std::uint64_t s = 0; s < n_states; ++s) {
                    unsigned __int128 packed = 0;
                    int shift = 0;
                    for (std::size_t row_i = 0; row_i < view_rows; ++row_i) {
                        packed |= static_cast<unsigned __int128>(
                                      F.add(w_contrib[row_i], n_contrib[s][row_i]))
                                  << shift;
                        shift += sym_bits;
                    }
                    per_z[zt_packed[s]].push_back(packed);
                }
                for (auto& [zt, views] : per_z) {
                    std::sort(views.begin(), views.end());
                    auto key = std::make_tuple(sum_w, wt_packed, zt);
                    auto it = classes.find(key);
                    if (it == classes.end()) {
                        classes.emplace(key, std::move(views));
                    } else if (it->second != views) {
                        result.ok = false;
                        result.failing_server = k;
                        result.failing_colluders = set;
                        done = true;
                        break;
                    }
                }
                if (done || ws + 1 == w_states) break;
                for (std::size_t j = 0;; ++j) {
                    if (++w[j] < q) break;
                    w[j] = 0;
                }
            }
        }
    });
    return result;
}

struct ModulusSearchResult {
    std::uint64_t q = 0;
    std::size_t attempts = 0;
    CoefficientTable table;
};

/// Preliminary search: the smallest prime from `candidates` over which
/// rejection sampling produces a valid table within the attempt budget.
inline std::optional<ModulusSearchResult> search_smallest_valid_modulus(
    std::uint64_t U, std::uint64_t V, std::uint64_t T, std::uint64_t seed,
    std::size_t attempts_per_prime = 2000,
    const std::vector<std::uint64_t>& candidates = {2, 3, 5, 7, 11}) {
    for (std::uint64_t q : candidates) {
        SystemParams p{U, V, T, q, seed};
        try {
            GeneratedTable g = generate_table(p, attempts_per_prime);
            return ModulusSearchResult{q, g.attempts_used, std::move(g.table)};
        } catch (const GenerationError&) {
            continue;
        }
    }
    return std::nullopt;
}

}  // namespace secagg
