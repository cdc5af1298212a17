#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "secagg/colluders.hpp"
#include "secagg/entropy.hpp"
#include "secagg/keyplan.hpp"
#include "secagg/oracle.hpp"
#include "secagg/protocol.hpp"
#include "secagg/rng.hpp"

namespace secagg {

/// Everything server k observes, as linear maps: its V first-hop messages and
/// the U-1 broadcasts of the other servers.
inline std::vector<LinearVariable> server_view(const CoefficientTable& t, std::size_t k) {
    if (k >= t.params.U) throw std::invalid_argument("server_view: server index out of range");
    std::vector<LinearVariable> view;
    view.reserve(t.params.V + t.params.U - 1);
    for (std::size_t v = 0; v < t.params.V; ++v) view.push_back(message_variable(t, k, v));
    for (std::size_t u = 0; u < t.params.U; ++u)
        if (u != k) view.push_back(broadcast_variable(t, u));
    return view;
}

inline std::vector<LinearVariable> all_input_variables(const CoefficientTable& t) {
    std::vector<LinearVariable> vars;
    vars.reserve(t.params.num_users());
    for (std::size_t u = 0; u < t.params.U; ++u)
        for (std::size_t v = 0; v < t.params.V; ++v) vars.push_back(input_variable(t, u, v));
    return vars;
}

// ---------------------------------------------------------------------------
// Correctness
// ---------------------------------------------------------------------------

struct CorrectnessResult {
    bool symbolic_ok = true;
    std::optional<std::size_t> failing_server;
    std::size_t trials = 0;
    std::size_t trials_passed = 0;

    bool ok() const { return symbolic_ok && trials_passed == trials; }
};

/// Decode-map identity: sum_v X_{k,v} + sum_{u != k} Y_u - sum W must be the
/// all-zero map for every k. Stronger than sampling; the random trials on top
/// exercise the concrete protocol path.
inline CorrectnessResult verify_correctness(const CoefficientTable& t, std::size_t trials = 100,
                                            std::uint64_t seed = 0) {
    const SystemParams& p = t.params;
    CorrectnessResult res;

    const LinearVariable sum_w = sum_inputs_variable(t);
    for (std::size_t k = 0; k < p.U; ++k) {
        LinearVariable decode = message_variable(t, k, 0);
        for (std::size_t v = 1; v < p.V; ++v) decode = decode + message_variable(t, k, v);
        for (std::size_t u = 0; u < p.U; ++u)
            if (u != k) decode = decode + broadcast_variable(t, u);
        const FieldMatrix& d = decode.map();
        const FieldMatrix& s = sum_w.map();
        for (std::size_t j = 0; j < d.cols(); ++j)
            if (d.get(0, j) != s.get(0, j)) {
                res.symbolic_ok = false;
                if (!res.failing_server) res.failing_server = k;
            }
        if (!res.symbolic_ok) break;
    }

    Rng rng = derive_stream(seed, "correctness-trials");
    res.trials = trials;
    const PrimeField F = t.field();
    for (std::size_t i = 0; i < trials; ++i) {
        Inputs in = Inputs::random(p, 1, rng);
        SourceKeySample ks = SourceKeySample::random(t.r_star, 1, p.q, rng);
        Transcript tr = run_protocol(t, in, ks);
        const auto expect = global_input_sum(F, in);
        bool good = true;
        for (const auto& d : tr.decoded) good = good && d == expect;
        if (good) ++res.trials_passed;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Security
// ---------------------------------------------------------------------------

/// I(view of server k ; all inputs | sum of inputs, colluders' inputs and
/// keys) in log-q units. Zero is the security requirement.
inline std::int64_t security_mutual_information(const CoefficientTable& t, std::size_t k,
                                                const ColludingSet& colluders) {
    std::vector<LinearVariable> given = {sum_inputs_variable(t)};
    for (const auto& m : colluders) given.push_back(input_variable(t, m.u, m.v));
    for (const auto& m : colluders) given.push_back(key_variable(t, m.u, m.v));
    return mutual_information(server_view(t, k), all_input_variables(t), given);
}

struct EnumerationPolicy {
    enum class Kind { Exhaustive, Sample };
    Kind kind = Kind::Exhaustive;
    std::uint64_t sample_count = 0;  // colluding-set draws per server

    static EnumerationPolicy exhaustive() { return {Kind::Exhaustive, 0}; }
    static EnumerationPolicy sample(std::uint64_t n) { return {Kind::Sample, n}; }

    /// Exhaustive while U * (number of colluding sets) stays at or below 1e6
    /// mutual-information evaluations; seeded sampling beyond that.
    static EnumerationPolicy auto_select(const SystemParams& p,
                                         std::uint64_t exhaustive_cap = 1'000'000,
                                         std::uint64_t default_samples = 20'000) {
        const unsigned __int128 evals =
            count_colluding_sets(p.num_users(), static_cast<std::size_t>(p.T)) * p.U;
        return evals <= exhaustive_cap ? exhaustive() : sample(default_samples);
    }

    std::string str() const {
        return kind == Kind::Exhaustive ? "exhaustive" : "sample:" + std::to_string(sample_count);
    }
};

struct SecurityFailure {
    std::size_t k = 0;
    ColludingSet colluders;
    std::int64_t mi = 0;
};

struct SecurityResult {
    bool ok = true;
    std::vector<SecurityFailure> failures;
    std::uint64_t evaluations = 0;        // distinct (k, set) pairs evaluated
    unsigned __int128 total_cases = 0;    // U * #{sets with |set| <= T}
    bool coverage_complete = false;
    EnumerationPolicy policy;
};

/// Checks the mutual-information requirement for every server against every
/// colluding set admitted by the policy. Exhaustive by default; the sampled
/// fallback is seeded and reports its coverage honestly.
inline SecurityResult verify_security(const CoefficientTable& t,
                                      EnumerationPolicy policy = EnumerationPolicy::exhaustive(),
                                      std::uint64_t seed = 0) {
    const SystemParams& p = t.params;
    SecurityResult res;
    res.policy = policy;
    res.total_cases = count_colluding_sets(p.num_users(), static_cast<std::size_t>(p.T)) * p.U;

    auto eval = [&](std::size_t k, const ColludingSet& set) {
        const std::int64_t mi = security_mutual_information(t, k, set);
        ++res.evaluations;
        if (mi != 0) {
            res.ok = false;
            res.failures.push_back({k, set, mi});
        }
    };

    if (policy.kind == EnumerationPolicy::Kind::Exhaustive) {
        for_each_colluding_set(p.U, p.V, static_cast<std::size_t>(p.T),
                               [&](const ColludingSet& set) {
                                   for (std::size_t k = 0; k < p.U; ++k) eval(k, set);
                               });
        res.coverage_complete = true;
    } else {
        Rng rng = derive_stream(seed, "security-sampling");
        std::set<std::pair<std::size_t, ColludingSet>> visited;
        for (std::size_t k = 0; k < p.U; ++k)
            for (std::uint64_t i = 0; i < policy.sample_count; ++i) {
                ColludingSet set = sample_colluding_set(p.U, p.V, static_cast<std::size_t>(p.T), rng);
                if (visited.emplace(k, set).second) eval(k, set);
            }
        res.coverage_complete = res.evaluations == res.total_cases;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Converse lemma bounds
// ---------------------------------------------------------------------------

struct LemmaCheck {
    std::string name;
    std::int64_t bound = 0;     // of the worst instance
    std::int64_t achieved = 0;  // of the worst instance
    bool satisfied = true;
    std::size_t instances = 0;
};

/// Per-message, collection, and key-independence lower bounds from the
/// converse. The per-message bounds are checked exhaustively; the collection
/// and key bounds over seeded random (V-set, U-set, colluder) choices. The
/// collection/key clauses assume T <= (U-1)(V-1) and are skipped otherwise.
inline std::vector<LemmaCheck> verify_lemma_bounds(const CoefficientTable& t,
                                                   std::size_t samples = 100,
                                                   std::uint64_t seed = 0) {
    const SystemParams& p = t.params;
    std::vector<LemmaCheck> checks;

    auto record = [&](LemmaCheck& c, std::int64_t bound, std::int64_t achieved) {
        const bool first = c.instances == 0;
        ++c.instances;
        const bool worse = (achieved - bound) < (c.achieved - c.bound);
        if (first || worse) {
            c.bound = bound;
            c.achieved = achieved;
        }
        if (achieved < bound) c.satisfied = false;
    };

    auto rest_of_world = [&](std::size_t u, std::size_t v) {
        std::vector<LinearVariable> given;
        for (std::size_t a = 0; a < p.U; ++a)
            for (std::size_t b = 0; b < p.V; ++b)
                if (!(a == u && b == v)) {
                    given.push_back(input_variable(t, a, b));
                    given.push_back(key_variable(t, a, b));
                }
        return given;
    };

    LemmaCheck l1x{"per_message_first_hop"}, l1y{"per_message_broadcast"};
    for (std::size_t u = 0; u < p.U; ++u)
        for (std::size_t v = 0; v < p.V; ++v) {
            const auto given = rest_of_world(u, v);
            record(l1x, 1,
                   static_cast<std::int64_t>(conditional_entropy({message_variable(t, u, v)}, given)));
            record(l1y, 1,
                   static_cast<std::int64_t>(conditional_entropy({broadcast_variable(t, u)}, given)));
        }
    checks.push_back(l1x);
    checks.push_back(l1y);

    const std::uint64_t t_cap = std::min<std::uint64_t>(p.T, (p.U - 1) * (p.V - 1));
    if (p.T > (p.U - 1) * (p.V - 1)) return checks;

    Rng rng = derive_stream(seed, "lemma-sampling");
    LemmaCheck l2x{"collection_first_hop"}, l2y{"collection_broadcast"},
        l3zv{"keys_given_colluders"}, l3zt{"colluder_keys"};

    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t u1 = static_cast<std::size_t>(rng.uniform(p.U));
        const std::size_t v1 = static_cast<std::size_t>(rng.uniform(p.V));

        // colluders avoid server u1 and user column v1
        std::vector<UserId> pool;
        for (std::size_t u = 0; u < p.U; ++u)
            for (std::size_t v = 0; v < p.V; ++v)
                if (u != u1 && v != v1) pool.push_back({u, v});
        const std::size_t tsize = static_cast<std::size_t>(rng.uniform(t_cap + 1));
        ColludingSet colluders;
        for (auto i : rng.subset(pool.size(), tsize)) colluders.push_back(pool[i]);

        std::vector<LinearVariable> wz;
        for (const auto& m : colluders) {
            wz.push_back(input_variable(t, m.u, m.v));
            wz.push_back(key_variable(t, m.u, m.v));
        }
        std::vector<LinearVariable> z_only;
        for (const auto& m : colluders) z_only.push_back(key_variable(t, m.u, m.v));

        const auto vset = rng.subset(p.V, 1 + rng.uniform(p.V));
        std::vector<LinearVariable> xs, zs;
        for (auto v : vset) {
            xs.push_back(message_variable(t, u1, v));
            zs.push_back(key_variable(t, u1, v));
        }
        record(l2x, static_cast<std::int64_t>(vset.size()),
               static_cast<std::int64_t>(conditional_entropy(xs, wz)));
        record(l3zv, static_cast<std::int64_t>(vset.size()),
               static_cast<std::int64_t>(conditional_entropy(zs, z_only)));
        record(l3zt, static_cast<std::int64_t>(colluders.size()),
               colluders.empty() ? 0 : static_cast<std::int64_t>(entropy(z_only)));

        std::vector<std::size_t> others;
        for (std::size_t u = 0; u < p.U; ++u)
            if (u != u1) others.push_back(u);
        const auto uset = rng.subset(others.size(), 1 + rng.uniform(others.size()));
        std::vector<LinearVariable> ys;
        std::vector<LinearVariable> given = wz;
        for (std::size_t v = 0; v < p.V; ++v) given.push_back(message_variable(t, u1, v));
        for (auto i : uset) ys.push_back(broadcast_variable(t, others[i]));
        record(l2y, static_cast<std::int64_t>(uset.size()),
               static_cast<std::int64_t>(conditional_entropy(ys, given)));
    }
    checks.push_back(l2x);
    checks.push_back(l2y);
    checks.push_back(l3zv);
    checks.push_back(l3zt);
    return checks;
}

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

struct RateReport {
    std::uint64_t rx = 1, ry = 1, rz = 1, rz_sigma = 0;
    std::uint64_t rx_bound = 1, ry_bound = 1, rz_bound = 1, rz_sigma_bound = 0;
    bool optimal = false;
};

/// Achieved rates of the implemented scheme (all message and key lengths are
/// one symbol per input symbol; the source key has r_star symbols) against
/// the optimal-region lower bounds.
inline RateReport rate_report(const CoefficientTable& t) {
    RateReport r;
    r.rz_sigma = t.r_star;
    r.rz_sigma_bound = optimal_source_key_length(t.params.U, t.params.V, t.params.T);
    r.optimal = r.rx == r.rx_bound && r.ry == r.ry_bound && r.rz == r.rz_bound &&
                r.rz_sigma == r.rz_sigma_bound;
    return r;
}

// ---------------------------------------------------------------------------
// Full assurance run
// ---------------------------------------------------------------------------

struct OracleCrossCheck {
    bool in_budget = false;
    unsigned __int128 required_states = 0;
    bool security_agrees = true;
    std::size_t collections_checked = 0;
    std::size_t collections_agree = 0;

    bool ok() const {
        return !in_budget || (security_agrees && collections_checked == collections_agree);
    }
};

struct AssuranceOptions {
    EnumerationPolicy policy = EnumerationPolicy::exhaustive();
    std::size_t correctness_trials = 100;
    std::size_t lemma_samples = 100;
    bool run_oracle_cross_check = true;
    OracleBudget budget;
    std::size_t oracle_collections = 25;
    std::uint64_t seed = 0;  // stream master for trials/sampling/oracle draws
};

struct AssuranceReport {
    TableValidation validation;
    CorrectnessResult correctness;
    SecurityResult security;
    std::vector<LemmaCheck> lemmas;
    RateReport rates;
    std::optional<OracleCrossCheck> oracle;

    /// 0 ok, 2 security violation, 3 correctness violation, 4 incomplete
    /// coverage. Security outranks correctness when both fail.
    int exit_code() const {
        if (!security.ok) return 2;
        if (!correctness.ok()) return 3;
        bool lemmas_ok = true;
        for (const auto& c : lemmas) lemmas_ok = lemmas_ok && c.satisfied;
        if (!lemmas_ok || (oracle && !oracle->ok())) return 2;
        if (!security.coverage_complete) return 4;
        return 0;
    }
};

/// Draws a random variable collection over the scheme's layout, for
/// rank-vs-enumeration agreement spot checks.
inline std::vector<LinearVariable> random_scheme_collection(const CoefficientTable& t, Rng& rng,
                                                            std::size_t max_vars = 4) {
    const std::size_t n = 1 + rng.uniform(max_vars);
    std::vector<LinearVariable> vars;
    for (std::size_t i = 0; i < n; ++i) {
        switch (rng.uniform(5)) {
            case 0: vars.push_back(input_variable(t, rng.uniform(t.params.U), rng.uniform(t.params.V))); break;
            case 1: vars.push_back(key_variable(t, rng.uniform(t.params.U), rng.uniform(t.params.V))); break;
            case 2: vars.push_back(message_variable(t, rng.uniform(t.params.U), rng.uniform(t.params.V))); break;
            case 3: vars.push_back(broadcast_variable(t, rng.uniform(t.params.U))); break;
            default: vars.push_back(sum_inputs_variable(t)); break;
        }
    }
    return vars;
}

inline OracleCrossCheck run_oracle_cross_check(const CoefficientTable& t, const SecurityResult& sec,
                                               const AssuranceOptions& opt) {
    OracleCrossCheck oc;
    const unsigned __int128 need = detail::pow_states(t.params.q, scheme_layout(t).total());
    oc.required_states = need;
    if (need > opt.budget.max_states) return oc;  // out of budget; reported, not an error
    oc.in_budget = true;

    const BruteSecurityResult brute = brute_security_check(t, opt.budget);
    oc.security_agrees = brute.ok == sec.ok;

    Rng rng = derive_stream(opt.seed, "oracle");
    for (std::size_t i = 0; i < opt.oracle_collections; ++i) {
        const auto a = random_scheme_collection(t, rng);
        const auto b = random_scheme_collection(t, rng);
        const auto g = rng.uniform(2) ? random_scheme_collection(t, rng) : std::vector<LinearVariable>{};
        ++oc.collections_checked;
        const Rational h = brute_entropy(a, opt.budget);
        const Rational im = brute_mi(a, b, g, opt.budget);
        const bool agree = h == static_cast<std::int64_t>(entropy(a)) &&
                           im == mutual_information(a, b, g);
        if (agree) ++oc.collections_agree;
    }
    return oc;
}

inline AssuranceReport run_assurance(const CoefficientTable& t, const AssuranceOptions& opt = {}) {
    AssuranceReport rep;
    rep.validation = validate_table(t);
    rep.correctness = verify_correctness(t, opt.correctness_trials, opt.seed);
    rep.security = verify_security(t, opt.policy, opt.seed);
    rep.lemmas = verify_lemma_bounds(t, opt.lemma_samples, opt.seed);
    rep.rates = rate_report(t);
    if (opt.run_oracle_cross_check) rep.oracle = run_oracle_cross_check(t, rep.security, opt);
    return rep;
}

/// One random coordinate of the table re-drawn uniformly (it may land on the
/// old value, in which case the table is unchanged).
inline CoefficientTable mutate_coordinate(const CoefficientTable& t, Rng& rng) {
    FieldMatrix h = t.h;
    const std::size_t i = rng.uniform(h.rows());
    const std::size_t j = rng.uniform(h.cols());
    h.set(i, j, rng.uniform(t.params.q));
    return CoefficientTable(t.params, t.r_star, std::move(h));
}

}  // namespace secagg
